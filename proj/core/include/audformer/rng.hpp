#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace audformer {

// Single deterministic RNG stream. Every stochastic component (init,
// dropout, shuffling, SMOTE, synthesis) draws from an explicit Rng so that
// a fixed seed reproduces a run bit-for-bit.
class Rng {
  public:
    Rng() : engine_(0x5eed) {}
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return unit_(engine_); }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * unit_(engine_);
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        std::normal_distribution<double> dist(mean, stddev);
        return dist(engine_);
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
        return dist(engine_);
    }

    template <typename It>
    void shuffle(It first, It last) {
        std::shuffle(first, last, engine_);
    }

    // Derive an independent stream (e.g. one per fold) from this seed.
    static Rng derive(std::uint64_t seed, std::uint64_t stream) {
        // splitmix64 finalizer over the combined seed
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return Rng(z ^ (z >> 31));
    }

    std::string state() const {
        std::ostringstream os;
        os << engine_;
        return os.str();
    }

    void restore(const std::string& s) {
        std::istringstream is(s);
        is >> engine_;
    }

    std::mt19937_64& engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace audformer
