#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "audformer/dataset.hpp"

namespace audformer {

// Class-conditioned tone-plus-noise generator for desk-scale corpora.
// Each subject gets one clip per modality: a three-harmonic tone at the
// class frequency (random phase per clip) plus Gaussian noise at the
// requested SNR. With `complementary` set, each subject carries class
// evidence in exactly one modality (round-robin); the others play the
// neutral frequency regardless of label.
struct SynthModality {
    std::string name;
    double clip_seconds = 5.0;
    double positive_hz = 440.0;
    double negative_hz = 880.0;
    double neutral_hz = 660.0;
    double snr_db = 10.0;
    // Noise is low-passed Gaussian: broadband white noise would swamp
    // magnitude-weighted spectral statistics long before it masks the tone.
    double noise_cutoff_hz = 300.0;
};

struct SynthSpec {
    std::size_t n_subjects = 40;
    std::size_t n_positive = 20;
    double sample_rate = 44100.0;
    std::uint64_t seed = 1;
    bool complementary = false;
    std::vector<SynthModality> modalities;

    static SynthSpec from_json(const std::filesystem::path& path);
    void validate() const;
};

// Writes one WAV per (subject, modality) plus manifest.jsonl under
// out_dir; returns the manifest. Deterministic per seed.
Manifest generate(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace audformer
