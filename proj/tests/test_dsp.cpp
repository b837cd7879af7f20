#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "audformer/dsp.hpp"
#include "audformer/rng.hpp"
#include "test_signals.hpp"

using namespace audformer;

TEST_CASE("frame_count matches the published example") {
    // 8 s at 44.1 kHz, frame 2048, hop 512
    FrameSpec spec;
    CHECK(frame_count(352800, spec) == 686);
    CHECK_THROWS_AS(frame_count(1000, spec), DataError);
}

TEST_CASE("trim_silence keeps a pure tone intact") {
    auto w = testsig::tone(440.0, 1.0);
    auto trimmed = trim_silence(w, 60.0);
    CHECK(trimmed.samples.size() == w.samples.size());
}

TEST_CASE("trim_silence removes leading and trailing silence") {
    auto w = testsig::concat(testsig::silence(1.0),
                             testsig::concat(testsig::tone(440.0, 1.0),
                                             testsig::silence(1.0)));
    const double tone_energy = testsig::energy(testsig::tone(440.0, 1.0));
    auto trimmed = trim_silence(w, 60.0, 1024);
    // within one trim chunk of the tone length
    CHECK(trimmed.samples.size() >= 44100 - 1024);
    CHECK(trimmed.samples.size() <= 44100 + 1024);
    CHECK(testsig::energy(trimmed) >= 0.99 * tone_energy);
}

TEST_CASE("trim_silence of all-zero input returns a single chunk") {
    auto trimmed = trim_silence(testsig::silence(1.0), 60.0, 1024);
    CHECK(trimmed.samples.size() == 1024);
    CHECK_THROWS_AS(trim_silence(Waveform{}, 60.0), DataError);
}

TEST_CASE("standardize_length crops and pads around the center") {
    auto long_in = testsig::tone(440.0, 10.0);
    auto cropped = standardize_length(long_in, 8.0);
    CHECK(cropped.samples.size() == 352800);
    // center crop: first sample equals input at offset (10s-8s)/2
    CHECK(cropped.samples.front() == long_in.samples[44100]);

    auto same = standardize_length(testsig::tone(440.0, 8.0), 8.0);
    auto orig = testsig::tone(440.0, 8.0);
    CHECK(same.samples == orig.samples);

    auto padded = standardize_length(testsig::tone(100.0, 3.0), 6.0);
    REQUIRE(padded.samples.size() == 264600);
    const std::size_t pad = 66150;  // 1.5 s each side
    for (std::size_t i = 0; i < pad; ++i) {
        CHECK(padded.samples[i] == 0.0);
        CHECK(padded.samples[padded.samples.size() - 1 - i] == 0.0);
    }
    CHECK(padded.samples[pad] == testsig::tone(100.0, 3.0).samples[0]);
}

TEST_CASE("stft parseval identity with rectangular window") {
    FrameSpec spec;
    spec.window = FrameSpec::Window::Rect;
    auto w = testsig::tone(997.0, 1.0);
    auto s = stft(w, spec);
    for (std::size_t f = 0; f < std::min<std::size_t>(s.n_frames, 5); ++f) {
        double frame_energy = 0.0;
        for (std::size_t i = 0; i < spec.frame_length; ++i) {
            const double v = w.samples[f * spec.hop_length + i];
            frame_energy += v * v;
        }
        // full-spectrum sum from the half spectrum
        double spec_energy = s.power(f, 0) + s.power(f, s.n_bins - 1);
        for (std::size_t b = 1; b + 1 < s.n_bins; ++b) spec_energy += 2.0 * s.power(f, b);
        const double expected = static_cast<double>(spec.frame_length) * frame_energy;
        CHECK(std::abs(spec_energy - expected) / expected < 1e-6);
    }
}

TEST_CASE("stft shift by one hop shifts frames by one") {
    FrameSpec spec;
    Rng rng(17);
    Waveform w;
    w.samples.resize(44100);
    for (double& v : w.samples) v = rng.uniform(-0.5, 0.5);

    Waveform shifted;
    shifted.sample_rate = w.sample_rate;
    shifted.samples.assign(w.samples.begin() + spec.hop_length, w.samples.end());

    auto s0 = stft(w, spec);
    auto s1 = stft(shifted, spec);
    for (std::size_t f = 0; f < s1.n_frames; ++f)
        for (std::size_t b = 0; b < s1.n_bins; ++b)
            CHECK(std::abs(s1.at(f, b) - s0.at(f + 1, b)) < 1e-6);
}

TEST_CASE("cqt center frequencies double every octave exactly") {
    const auto centers = cqt_center_freqs(32.70319566257483, 12, 44100.0);
    REQUIRE(centers.size() > 24);
    for (std::size_t k = 0; k + 12 < centers.size(); ++k)
        CHECK(centers[k + 12] == doctest::Approx(2.0 * centers[k]).epsilon(1e-12));
    CHECK(centers.back() < 22050.0);
    CHECK_THROWS_AS(cqt_center_freqs(15000.0, 12, 44100.0), DataError);
    CHECK_THROWS_AS(cqt_center_freqs(-1.0, 12, 44100.0), DataError);
}

TEST_CASE("cqt octave-shifted tones are translated patterns") {
    FrameSpec spec;
    spec.frame_length = 8192;  // long enough that neither tone's kernel is capped
    spec.hop_length = 4096;
    const std::size_t bpo = 12;
    const double fmin = 32.70319566257483;

    auto low = cqt(testsig::tone(220.0, 1.0), spec, fmin, bpo);
    auto high = cqt(testsig::tone(440.0, 1.0), spec, fmin, bpo);
    REQUIRE(low.n_bins == high.n_bins);

    const std::size_t f = low.n_frames / 2;
    double diff = 0.0, norm = 0.0;
    for (std::size_t k = bpo; k < low.n_bins; ++k) {
        const double a = high.at(f, k);
        const double b = low.at(f, k - bpo);
        diff += (a - b) * (a - b);
        norm += std::max(a * a, b * b);
    }
    CHECK(std::sqrt(diff / norm) < 0.05);
}

TEST_CASE("dct of a constant vector has a single nonzero coefficient") {
    const auto coeffs = dct_ii_ortho(std::vector<double>(16, 2.0));
    CHECK(coeffs[0] == doctest::Approx(2.0 * std::sqrt(16.0)));
    for (std::size_t j = 1; j < coeffs.size(); ++j) CHECK(std::abs(coeffs[j]) < 1e-12);
}
