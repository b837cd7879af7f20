#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "audformer/config.hpp"
#include "audformer/dataset.hpp"
#include "audformer/fusion.hpp"
#include "audformer/prediction.hpp"

namespace audformer {

// Per (modality, domain, column) z-normalization statistics, fit on
// training folds only and frozen into the checkpoint.
struct Normalizer {
    struct DomainStats {
        std::vector<double> mean, stddev;
    };
    std::vector<std::array<DomainStats, kNumDomains>> per_modality;

    static Normalizer fit(const std::vector<const Instance*>& train) {
        if (train.empty()) throw DataError("normalizer: no training instances");
        Normalizer norm;
        const Instance& first = *train.front();
        norm.per_modality.resize(first.features.size());
        for (std::size_t m = 0; m < first.features.size(); ++m) {
            for (std::size_t d = 0; d < kNumDomains; ++d) {
                const std::size_t dims = first.features[m].second.domains[d].dims();
                auto& stats = norm.per_modality[m][d];
                stats.mean.assign(dims, 0.0);
                stats.stddev.assign(dims, 0.0);
                double count = 0.0;
                for (const Instance* inst : train) {
                    const auto& fm = inst->features[m].second.domains[d];
                    for (std::size_t i = 0; i < fm.frames(); ++i)
                        for (std::size_t j = 0; j < dims; ++j)
                            stats.mean[j] += fm.data.at(i, j);
                    count += static_cast<double>(fm.frames());
                }
                for (double& v : stats.mean) v /= count;
                for (const Instance* inst : train) {
                    const auto& fm = inst->features[m].second.domains[d];
                    for (std::size_t i = 0; i < fm.frames(); ++i)
                        for (std::size_t j = 0; j < dims; ++j) {
                            const double c = fm.data.at(i, j) - stats.mean[j];
                            stats.stddev[j] += c * c;
                        }
                }
                for (double& v : stats.stddev) v = std::sqrt(v / count);
            }
        }
        return norm;
    }

    template <typename T>
    Tensor<T> apply(const FeatureMatrix& fm, std::size_t modality_index) const {
        const auto& stats = per_modality.at(modality_index)[static_cast<std::size_t>(fm.domain)];
        Tensor<T> out({fm.frames(), fm.dims()});
        for (std::size_t i = 0; i < fm.frames(); ++i)
            for (std::size_t j = 0; j < fm.dims(); ++j) {
                const double sd = stats.stddev[j] > 0.0 ? stats.stddev[j] : 1.0;
                out.at(i, j) = static_cast<T>((fm.data.at(i, j) - stats.mean[j]) / sd);
            }
        return out;
    }
};

template <typename T>
struct ForwardOutput {
    Tensor<T> logits;  // 1 x 2
    Tensor<T> probs;   // 1 x 2
    int label = 0;

    // diagnostics (filled when requested)
    std::vector<TokenSequence<T>> tokens;  // post temporal+positional embedding
    std::vector<TokenSequence<T>> urs;     // empty under InterAtt
    FusionRepresentation<T> fr_l;
    FusionRepresentation<T> fr_h;          // == fr_l under IntraAtt
    std::vector<AttnMap<T>> intra_attn;    // last block per modality
    std::vector<AttnMap<T>> cross_attn;    // last block per modality, empty under IntraAtt
    AttnMap<T> pred_attn;
    std::vector<double> mcs_scores;
    bool ran_intra = false;
    bool ran_inter = false;
};

// The hierarchical fusion network: temporal+positional embedding per
// modality, intra-modal self-attention transformers, concatenation into
// FR_L, per-modality cross-modal transformers against FR_L into FR_H, and
// the attention+linear prediction layer. Ablations reroute the same
// pieces: IntraAtt feeds concatenated unimodal representations straight
// to the head; InterAtt feeds embedded tokens straight to the cross-modal
// stage.
template <typename T>
struct Model {
    ModelConfig cfg;
    std::vector<std::string> modalities;
    std::vector<std::array<typename TemporalConvLayer<T>::DomainShape, kNumDomains>> shapes;
    Normalizer norm;

    std::vector<TemporalConvLayer<T>> embed;
    std::vector<IntraModalTransformer<T>> intra;
    std::vector<CrossModalTransformer<T>> inter;
    PredictionHead<T> head;

    static Model build(const ModelConfig& cfg, const std::vector<std::string>& modalities,
                       const std::vector<std::array<typename TemporalConvLayer<T>::DomainShape,
                                                    kNumDomains>>& shapes,
                       Rng& rng) {
        cfg.validate();
        if (modalities.empty()) throw DataError("model: no modalities");
        if (modalities.size() != shapes.size())
            throw ShapeError("model: modality/shape count mismatch");

        Model model;
        model.cfg = cfg;
        model.modalities = modalities;
        model.shapes = shapes;

        for (std::size_t m = 0; m < modalities.size(); ++m) {
            model.embed.push_back(TemporalConvLayer<T>::init(
                shapes[m], cfg.d_tc, cfg.max_tokens_per_domain, cfg.scalar_kernel,
                cfg.spectral_kernel, rng));
            model.intra.push_back(IntraModalTransformer<T>::init(
                modalities[m], cfg.d_tc, cfg.intra_depth, cfg.effective_intra_heads(),
                cfg.attn_dropout, cfg.output_dropout, rng));
            model.inter.push_back(CrossModalTransformer<T>::init(
                modalities[m], cfg.d_tc, cfg.inter_depth, cfg.heads, cfg.attn_dropout,
                cfg.output_dropout, rng));
        }
        model.head = PredictionHead<T>::init(cfg.d_tc, cfg.heads, cfg.attn_dropout,
                                             cfg.output_dropout, rng);
        return model;
    }

    void check_instance(const Instance& inst) const {
        if (inst.features.size() != modalities.size())
            throw DataError("model: instance " + inst.subject_id + " has " +
                            std::to_string(inst.features.size()) + " modalities, expected " +
                            std::to_string(modalities.size()));
        for (std::size_t m = 0; m < modalities.size(); ++m) {
            if (inst.features[m].first != modalities[m])
                throw DataError("model: instance " + inst.subject_id + " modality '" +
                                inst.features[m].first + "' does not match profile '" +
                                modalities[m] + "'");
            for (std::size_t d = 0; d < kNumDomains; ++d) {
                const auto& fm = inst.features[m].second.domains[d];
                if (fm.frames() != shapes[m][d].frames || fm.dims() != shapes[m][d].dims)
                    throw DataError("model: instance " + inst.subject_id + " domain " +
                                    domain_name(kAllDomains[d]) + " shape " +
                                    shape_str(fm.data.shape()) + " does not match profile");
            }
        }
    }

    ForwardOutput<T> forward(const Instance& inst, Tape<T>* tape, bool train, Rng& rng,
                             bool diagnostics = false) const {
        check_instance(inst);
        ForwardOutput<T> out;

        // temporal + positional embedding on normalized features
        std::vector<TokenSequence<T>> tokens;
        for (std::size_t m = 0; m < modalities.size(); ++m) {
            std::array<Tensor<T>, kNumDomains> domains;
            for (std::size_t d = 0; d < kNumDomains; ++d)
                domains[d] = norm.apply<T>(inst.features[m].second.domains[d], m);
            tokens.push_back(embed_modality(domains, embed[m], modalities[m], tape));
        }

        const AblationMode mode = cfg.ablation;
        std::vector<TokenSequence<T>> urs;
        if (mode != AblationMode::InterAtt) {
            out.ran_intra = true;
            for (std::size_t m = 0; m < modalities.size(); ++m) {
                std::vector<AttnMap<T>> maps;
                urs.push_back(forward_intra(tokens[m], intra[m], train, rng, tape,
                                            diagnostics ? &maps : nullptr));
                if (diagnostics && !maps.empty())
                    out.intra_attn.push_back(std::move(maps.back()));
            }
        }

        const std::vector<TokenSequence<T>>& fusion_inputs =
            mode == AblationMode::InterAtt ? tokens : urs;
        FusionRepresentation<T> fr_l = fuse_low(fusion_inputs, tape);

        FusionRepresentation<T> fr_h;
        if (mode == AblationMode::IntraAtt) {
            fr_h = fr_l;
        } else {
            out.ran_inter = true;
            fr_h = fuse_high(fusion_inputs, fr_l, inter, train, rng, tape,
                             diagnostics ? &out.cross_attn : nullptr);
        }

        Prediction<T> pred = predict(fr_h, head, train, rng, tape, diagnostics);
        out.logits = pred.logits;
        out.probs = pred.probs;
        out.label = pred.label;

        if (diagnostics) {
            out.tokens = std::move(tokens);
            out.urs = std::move(urs);
            out.fr_l = fr_l;
            out.fr_h = fr_h;
            out.pred_attn = std::move(pred.attn);
            if (!out.pred_attn.empty())
                out.mcs_scores = mcs(out.pred_attn, fr_h.spans, cfg.mcs_mode);
        }
        return out;
    }

    void for_each_param(const std::function<void(const std::string&, Tensor<T>&)>& fn) {
        for (std::size_t m = 0; m < modalities.size(); ++m) {
            for (std::size_t d = 0; d < kNumDomains; ++d)
                fn("embed/" + modalities[m] + "/" + domain_name(kAllDomains[d]) + "/kernel",
                   embed[m].kernels[d]);
            for (std::size_t b = 0; b < intra[m].blocks.size(); ++b)
                intra[m].blocks[b].for_each_param(
                    "intra/" + modalities[m] + "/b" + std::to_string(b), fn);
            for (std::size_t b = 0; b < inter[m].blocks.size(); ++b)
                inter[m].blocks[b].for_each_param(
                    "inter/" + modalities[m] + "/b" + std::to_string(b), fn);
        }
        head.for_each_param("head", fn);
    }
};

}  // namespace audformer
