#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "audformer/dataset.hpp"
#include "audformer/prediction.hpp"

namespace audformer {

enum class AblationMode { Full, IntraAtt, InterAtt };

const char* ablation_name(AblationMode m);
AblationMode ablation_from_name(const std::string& name);

const char* mcs_mode_name(McsMode m);
McsMode mcs_mode_from_name(const std::string& name);

// Everything that defines a run: architecture dimensions, optimizer
// settings, feature extraction knobs and per-modality clip lengths.
// Profiles carry the published per-dataset defaults; a config file starts
// from its profile and overrides individual keys.
struct ModelConfig {
    std::string profile = "ipvs";
    std::vector<std::string> modalities;  // empty -> taken from the cache

    // architecture
    std::size_t d_tc = 40;
    std::size_t intra_depth = 2;
    std::size_t inter_depth = 2;
    std::size_t heads = 5;
    std::size_t intra_heads = 0;  // 0 -> same as heads
    double attn_dropout = 0.1;
    double output_dropout = 0.1;
    std::size_t max_tokens_per_domain = 64;
    std::size_t scalar_kernel = 3;
    std::size_t spectral_kernel = 5;

    // optimization
    std::size_t batch_size = 16;
    double learning_rate = 1e-3;
    double momentum = 0.0;
    double weight_decay = 0.0;
    std::size_t epochs = 100;
    std::uint64_t seed = 42;

    // evaluation / modes
    AblationMode ablation = AblationMode::Full;
    bool smote_enabled = false;
    std::size_t smote_k = 5;
    McsMode mcs_mode = McsMode::RowMass;
    double threshold = 0.5;

    FeatureConfig features;
    ClipProfile clips;

    std::size_t effective_intra_heads() const {
        return intra_heads == 0 ? heads : intra_heads;
    }

    void validate() const;

    // Published per-dataset defaults: coswara, sound_dr, ipvs, pc_gita, svd.
    static ModelConfig profile_defaults(const std::string& name);

    // Flat key = value file; unknown keys are an error.
    static ModelConfig load(const std::filesystem::path& path);

    // Exact round-trip serialization (used by checkpoints).
    std::string serialize() const;
    static ModelConfig deserialize(const std::string& text);

    std::uint64_t hash() const;

    // Everything extraction output depends on: feature knobs plus the
    // per-modality clip lengths. Stamped into the cache index.
    std::uint64_t extraction_hash() const;
};

}  // namespace audformer
