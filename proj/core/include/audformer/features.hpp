#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "audformer/dsp.hpp"
#include "audformer/tensor.hpp"
#include "audformer/wav.hpp"

namespace audformer {

// The seven acoustic feature domains, in their fixed pipeline order.
enum class FeatureDomain : int { ZCR = 0, STE, SC, LOGMEL, MFCC, GFCC, CQCC };

constexpr std::size_t kNumDomains = 7;

constexpr std::array<FeatureDomain, kNumDomains> kAllDomains = {
    FeatureDomain::ZCR,    FeatureDomain::STE,  FeatureDomain::SC,
    FeatureDomain::LOGMEL, FeatureDomain::MFCC, FeatureDomain::GFCC,
    FeatureDomain::CQCC};

const char* domain_name(FeatureDomain d);
FeatureDomain domain_from_name(const std::string& name);

// All knobs that influence extraction output. hash() feeds the cache
// sidecar so stale caches are detected.
struct FeatureConfig {
    double sample_rate = 44100.0;
    FrameSpec frames;
    std::size_t n_mels = 64;
    std::size_t n_mfcc = 13;
    std::size_t gfcc_filters = 26;
    std::size_t gfcc_coeffs = 13;
    double gfcc_fmin = 50.0;
    std::size_t cqcc_bins_per_octave = 12;
    std::size_t cqcc_coeffs = 13;
    double cqcc_fmin = 32.70319566257483;  // C1
    double log_eps = 1e-10;
    double trim_threshold_db = 60.0;

    std::uint64_t hash() const;
    std::size_t domain_dims(FeatureDomain d) const;
};

// One extracted feature domain: frames x dims, float32 training precision.
struct FeatureMatrix {
    FeatureDomain domain = FeatureDomain::ZCR;
    Tensor<float> data;

    std::size_t frames() const { return data.rows(); }
    std::size_t dims() const { return data.cols(); }
};

// The seven per-domain matrices extracted from one modality of one
// instance, in fixed domain order.
struct ModalityFeatureSet {
    std::array<FeatureMatrix, kNumDomains> domains;

    const FeatureMatrix& of(FeatureDomain d) const {
        return domains[static_cast<std::size_t>(d)];
    }
    FeatureMatrix& of(FeatureDomain d) {
        return domains[static_cast<std::size_t>(d)];
    }
};

// Single-domain extractors. Each returns one row per frame.
FeatureMatrix zcr(const Waveform& w, const FrameSpec& spec);
FeatureMatrix ste(const Waveform& w, const FrameSpec& spec);
FeatureMatrix spectral_centroid(const Waveform& w, const FrameSpec& spec);
FeatureMatrix log_mel(const Waveform& w, const FeatureConfig& cfg);
FeatureMatrix mfcc(const Waveform& w, const FeatureConfig& cfg);
FeatureMatrix gfcc(const Waveform& w, const FeatureConfig& cfg);
FeatureMatrix cqcc(const Waveform& w, const FeatureConfig& cfg);

// All seven domains with one shared STFT pass.
ModalityFeatureSet extract_all(const Waveform& w, const FeatureConfig& cfg);

}  // namespace audformer
