#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "audformer/features.hpp"
#include "audformer/synth.hpp"

using namespace audformer;
namespace fs = std::filesystem;

namespace {

SynthSpec tiny_spec() {
    SynthSpec spec;
    spec.n_subjects = 10;
    spec.n_positive = 5;
    spec.seed = 202;
    spec.modalities = {{"m1", 0.3, 440.0, 880.0, 660.0, 10.0},
                       {"m2", 0.3, 500.0, 1000.0, 750.0, 10.0},
                       {"m3", 0.3, 600.0, 1200.0, 900.0, 10.0}};
    return spec;
}

std::vector<char> file_bytes(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("generation writes one wav per subject and modality plus the manifest") {
    const auto dir = fs::temp_directory_path() / "audformer_synth_count";
    fs::remove_all(dir);
    auto manifest = generate(tiny_spec(), dir);

    CHECK(manifest.entries.size() == 10);
    CHECK(manifest.modality_names == std::vector<std::string>{"m1", "m2", "m3"});
    std::size_t wavs = 0;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".wav") ++wavs;
    CHECK(wavs == 30);

    std::size_t positives = 0;
    for (const auto& e : manifest.entries)
        if (e.label == Label::Positive) ++positives;
    CHECK(positives == 5);
    fs::remove_all(dir);
}

TEST_CASE("same seed produces identical bytes") {
    const auto dir_a = fs::temp_directory_path() / "audformer_synth_a";
    const auto dir_b = fs::temp_directory_path() / "audformer_synth_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    auto spec = tiny_spec();
    generate(spec, dir_a);
    generate(spec, dir_b);

    for (const auto& entry : fs::directory_iterator(dir_a)) {
        const auto other = dir_b / entry.path().filename();
        REQUIRE(fs::exists(other));
        CHECK(file_bytes(entry.path()) == file_bytes(other));
    }
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("generated audio respects the amplitude and rate contract") {
    const auto dir = fs::temp_directory_path() / "audformer_synth_amp";
    fs::remove_all(dir);
    auto spec = tiny_spec();
    auto manifest = generate(spec, dir);
    for (const auto& entry : manifest.entries)
        for (const auto& [_, paths] : entry.modality_paths)
            for (const auto& p : paths) {
                auto w = read_wav(p, spec.sample_rate);
                CHECK(w.sample_rate == spec.sample_rate);
                for (double v : w.samples) {
                    CHECK(v <= 1.0);
                    CHECK(v >= -1.0);
                }
            }
    fs::remove_all(dir);
}

TEST_CASE("a centroid threshold separates the classes without any training") {
    const auto dir = fs::temp_directory_path() / "audformer_synth_centroid";
    fs::remove_all(dir);
    auto spec = tiny_spec();
    spec.n_subjects = 20;
    spec.n_positive = 10;
    spec.modalities = {{"m1", 0.3, 440.0, 880.0, 660.0, 10.0}};
    auto manifest = generate(spec, dir);

    FrameSpec frames;
    std::vector<double> centroids;
    std::vector<int> labels;
    for (const auto& entry : manifest.entries) {
        auto w = read_wav(entry.modality_paths[0].second[0], 44100.0);
        auto sc = spectral_centroid(w, frames);
        double mean = 0.0;
        for (std::size_t f = 0; f < sc.frames(); ++f) mean += sc.data.at(f, 0);
        centroids.push_back(mean / static_cast<double>(sc.frames()));
        labels.push_back(entry.label == Label::Positive ? 1 : 0);
    }

    // oracle classifier: the best single threshold over the clip centroids
    double best_acc = 0.0;
    for (double threshold : centroids) {
        std::size_t low_pos = 0, high_pos = 0;
        for (std::size_t i = 0; i < centroids.size(); ++i) {
            const bool low = centroids[i] <= threshold;
            if ((low ? 1 : 0) == labels[i]) ++low_pos;
            if ((low ? 0 : 1) == labels[i]) ++high_pos;
        }
        best_acc = std::max({best_acc,
                             static_cast<double>(low_pos) / centroids.size(),
                             static_cast<double>(high_pos) / centroids.size()});
    }
    CHECK(best_acc >= 0.95);
    fs::remove_all(dir);
}

TEST_CASE("complementary mode splits class evidence across modalities") {
    const auto dir = fs::temp_directory_path() / "audformer_synth_comp";
    fs::remove_all(dir);
    SynthSpec spec;
    spec.n_subjects = 8;
    spec.n_positive = 4;
    spec.seed = 5;
    spec.complementary = true;
    spec.modalities = {{"a", 0.3, 440.0, 880.0, 660.0, 25.0},
                       {"b", 0.3, 440.0, 880.0, 660.0, 25.0}};
    auto manifest = generate(spec, dir);

    FrameSpec frames;
    auto clip_centroid = [&](const std::filesystem::path& p) {
        auto w = read_wav(p, 44100.0);
        auto sc = spectral_centroid(w, frames);
        double mean = 0.0;
        for (std::size_t f = 0; f < sc.frames(); ++f) mean += sc.data.at(f, 0);
        return mean / static_cast<double>(sc.frames());
    };

    // subjects alternate which modality carries the signal; in the neutral
    // modality the centroid must not depend on the class
    double info_pos = 0.0, info_neg = 0.0, neutral_pos = 0.0, neutral_neg = 0.0;
    double n_pos = 0.0, n_neg = 0.0;
    for (std::size_t s = 0; s < manifest.entries.size(); ++s) {
        const auto& entry = manifest.entries[s];
        const std::size_t informative = s % 2;
        const double info_c = clip_centroid(entry.modality_paths[informative].second[0]);
        const double neut_c = clip_centroid(entry.modality_paths[1 - informative].second[0]);
        if (entry.label == Label::Positive) {
            info_pos += info_c;
            neutral_pos += neut_c;
            n_pos += 1.0;
        } else {
            info_neg += info_c;
            neutral_neg += neut_c;
            n_neg += 1.0;
        }
    }
    const double informative_gap = std::abs(info_pos / n_pos - info_neg / n_neg);
    const double neutral_gap = std::abs(neutral_pos / n_pos - neutral_neg / n_neg);
    CHECK(informative_gap > 100.0);
    CHECK(neutral_gap < 0.25 * informative_gap);
    fs::remove_all(dir);
}

TEST_CASE("invalid specs are rejected") {
    SynthSpec spec;
    spec.modalities = {{"m", 1.0, 500.0, 500.0, 500.0, 10.0}};
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("identical"), DataError);

    SynthSpec empty;
    CHECK_THROWS_AS(empty.validate(), DataError);
}
