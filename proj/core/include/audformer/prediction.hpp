#pragma once

#include <cmath>
#include <vector>

#include "audformer/fusion.hpp"

namespace audformer {

// How attention mass is attributed to a modality when computing its
// contribution score. RowMass sums over the query rows belonging to the
// modality (softmax rows each sum to one, so eval-mode scores are uniform
// by construction); ColumnMass sums the mass other positions assign to
// the modality's key columns.
enum class McsMode { RowMass, ColumnMass };

// Prediction layer: multi-head self-attention over FR_H, a residual
// linear layer, mean pooling over the sequence axis, and a 2-way softmax.
template <typename T>
struct PredictionHead {
    AttentionWeights<T> attn;
    Tensor<T> nu_w, nu_b;    // d -> d residual branch
    Tensor<T> tau_w, tau_b;  // d -> 2 logits
    double attn_dropout = 0.1;
    double output_dropout = 0.1;

    static PredictionHead init(std::size_t d, std::size_t heads, double attn_dropout,
                               double output_dropout, Rng& rng) {
        PredictionHead h;
        h.attn = AttentionWeights<T>::init(d, heads, rng);
        h.attn_dropout = attn_dropout;
        h.output_dropout = output_dropout;
        auto proj = [&](std::size_t r, std::size_t c) {
            Tensor<T> t({r, c}, true);
            const double bound = 1.0 / std::sqrt(static_cast<double>(r));
            for (std::size_t i = 0; i < t.numel(); ++i)
                t.at(i) = static_cast<T>(rng.uniform(-bound, bound));
            return t;
        };
        h.nu_w = proj(d, d);
        h.nu_b = Tensor<T>::zeros({d}, true);
        h.tau_w = proj(d, 2);
        h.tau_b = Tensor<T>::zeros({2}, true);
        return h;
    }

    template <typename Fn>
    void for_each_param(const std::string& prefix, Fn&& fn) {
        for (std::size_t h = 0; h < attn.heads; ++h) {
            fn(prefix + "/wq" + std::to_string(h), attn.wq[h]);
            fn(prefix + "/wk" + std::to_string(h), attn.wk[h]);
            fn(prefix + "/wv" + std::to_string(h), attn.wv[h]);
        }
        fn(prefix + "/wo", attn.wo);
        fn(prefix + "/nu_w", nu_w);
        fn(prefix + "/nu_b", nu_b);
        fn(prefix + "/tau_w", tau_w);
        fn(prefix + "/tau_b", tau_b);
    }
};

template <typename T>
struct Prediction {
    Tensor<T> logits;  // 1 x 2, pre-softmax (loss input)
    Tensor<T> probs;   // 1 x 2
    int label = 0;
    AttnMap<T> attn;   // heads x l_f x l_f
};

template <typename T>
Prediction<T> predict(const FusionRepresentation<T>& fr_h, const PredictionHead<T>& head,
                      bool train, Rng& rng, std::type_identity_t<Tape<T>>* tape,
                      bool want_attn_map = false) {
    Prediction<T> out;
    AttnMap<T>* map = want_attn_map ? &out.attn : nullptr;
    Tensor<T> attended = multi_head_attention(fr_h.data, fr_h.data, head.attn,
                                              head.attn_dropout, train, rng, tape, map);
    Tensor<T> branch = add_bias(matmul(attended, head.nu_w, tape), head.nu_b, tape);
    if (head.output_dropout > 0.0)
        branch = dropout(branch, head.output_dropout, train, rng, tape);
    Tensor<T> refined = add(attended, branch, tape);
    Tensor<T> pooled = mean_pool(refined, 0, tape);
    out.logits = add_bias(matmul(pooled, head.tau_w, tape), head.tau_b, tape);
    out.probs = softmax_rows(out.logits, tape);
    out.label = out.probs.at(0, 1) > out.probs.at(0, 0) ? 1 : 0;
    return out;
}

// Binary cross-entropy on a [1 x 2] logit row for one instance, with the
// positive-class probability clamped to [eps, 1-eps]. Gradients flow
// through the softmax; in the clamped regime the loss is locally constant
// and the gradient is zero.
template <typename T>
Tensor<T> bce_with_logits(const Tensor<T>& logits, int label, std::type_identity_t<Tape<T>>* tape = nullptr,
                          double eps = 1e-7) {
    if (logits.numel() != 2)
        throw ShapeError("bce_with_logits: expected 2 logits, got " +
                         shape_str(logits.shape()));
    const double z0 = static_cast<double>(logits.at(0));
    const double z1 = static_cast<double>(logits.at(1));
    const double mx = std::max(z0, z1);
    const double e0 = std::exp(z0 - mx), e1 = std::exp(z1 - mx);
    const double p_pos_raw = e1 / (e0 + e1);
    const bool clamped = p_pos_raw < eps || p_pos_raw > 1.0 - eps;
    const double p = std::min(std::max(p_pos_raw, eps), 1.0 - eps);
    const double loss = label == 1 ? -std::log(p) : -std::log(1.0 - p);

    Tensor<T> out({1});
    out.at(0) = static_cast<T>(loss);
    if (tape && logits.requires_grad()) {
        out.set_requires_grad(true);
        Tensor<T> lc = logits, oc = out;
        tape->record(out, [lc, oc, p_pos_raw, label, clamped]() mutable {
            if (clamped) return;
            const double dy = static_cast<double>(oc.grad()[0]);
            // d loss / d logits = softmax - onehot(label)
            lc.grad()[0] += static_cast<T>(((1.0 - p_pos_raw) - (label == 0 ? 1.0 : 0.0)) * dy);
            lc.grad()[1] += static_cast<T>((p_pos_raw - (label == 1 ? 1.0 : 0.0)) * dy);
        });
    }
    return out;
}

// Mean binary cross-entropy over already-computed positive-class
// probabilities (evaluation/reporting path, no gradients).
inline double bce_loss(const std::vector<int>& labels, const std::vector<double>& probs,
                       double eps = 1e-7) {
    if (labels.size() != probs.size())
        throw ShapeError("bce_loss: " + std::to_string(labels.size()) + " labels vs " +
                         std::to_string(probs.size()) + " probabilities");
    if (labels.empty()) throw ShapeError("bce_loss: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double p = std::min(std::max(probs[i], eps), 1.0 - eps);
        acc += labels[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
    }
    return acc / static_cast<double>(labels.size());
}

// Modality contribution scores from a prediction-layer attention map
// (heads x N x N) and the modality spans tiling N.
template <typename T>
std::vector<double> mcs(const AttnMap<T>& attn, const std::vector<ModalitySpan>& spans,
                        McsMode mode = McsMode::RowMass) {
    if (attn.data.rank() != 3)
        throw ShapeError("mcs: expected heads x N x N map, got " +
                         shape_str(attn.data.shape()));
    const std::size_t heads = attn.data.dim(0);
    const std::size_t n = attn.data.dim(1);
    if (attn.data.dim(2) != n) throw ShapeError("mcs: attention map is not square");
    if (spans.empty() || spans.front().start != 0 || spans.back().end != n)
        throw ShapeError("mcs: spans do not tile the attention map");
    for (std::size_t i = 1; i < spans.size(); ++i)
        if (spans[i].start != spans[i - 1].end)
            throw ShapeError("mcs: spans do not tile the attention map");

    std::vector<double> sa(spans.size(), 0.0);
    for (std::size_t s = 0; s < spans.size(); ++s) {
        const double len = static_cast<double>(spans[s].end - spans[s].start);
        double acc = 0.0;
        for (std::size_t h = 0; h < heads; ++h)
            for (std::size_t j = spans[s].start; j < spans[s].end; ++j)
                for (std::size_t k = 0; k < n; ++k)
                    acc += static_cast<double>(mode == McsMode::RowMass
                                                   ? attn.data.at(h, j, k)
                                                   : attn.data.at(h, k, j));
        sa[s] = acc / (static_cast<double>(heads) * len);
    }

    double total = 0.0;
    for (double v : sa) total += v;
    if (total <= 0.0) throw NumericError("mcs: non-positive attention mass");
    for (double& v : sa) v /= total;
    return sa;
}

}  // namespace audformer
