#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "audformer/embedding.hpp"
#include "audformer/ops.hpp"

namespace audformer {

// Multi-head attention weights: one projection triple per head plus a
// shared output projection. Query/key widths are equal by construction.
template <typename T>
struct AttentionWeights {
    std::vector<Tensor<T>> wq, wk, wv;  // per head, d_model x d_head
    Tensor<T> wo;                       // (heads * d_head) x d_model
    std::size_t heads = 0;
    std::size_t d_head = 0;

    static AttentionWeights init(std::size_t d_model, std::size_t heads, Rng& rng) {
        if (heads == 0 || d_model % heads != 0)
            throw ShapeError("attention: head count " + std::to_string(heads) +
                             " must divide model width " + std::to_string(d_model));
        AttentionWeights w;
        w.heads = heads;
        w.d_head = d_model / heads;
        const double bound = 1.0 / std::sqrt(static_cast<double>(d_model));
        auto make = [&](std::size_t r, std::size_t c) {
            Tensor<T> t({r, c}, true);
            for (std::size_t i = 0; i < t.numel(); ++i)
                t.at(i) = static_cast<T>(rng.uniform(-bound, bound));
            return t;
        };
        for (std::size_t h = 0; h < heads; ++h) {
            w.wq.push_back(make(d_model, w.d_head));
            w.wk.push_back(make(d_model, w.d_head));
            w.wv.push_back(make(d_model, w.d_head));
        }
        w.wo = make(d_model, d_model);
        return w;
    }
};

// Per-head attention maps for diagnostics (post-softmax, pre-dropout);
// values only, never part of the gradient path.
template <typename T>
struct AttnMap {
    Tensor<T> data;  // heads x l_q x l_k

    std::size_t heads() const { return data.rank() == 3 ? data.dim(0) : 0; }
    bool empty() const { return data.numel() == 0; }
};

// softmax(Q K^T / sqrt(d_head)) V per head, heads concatenated and
// projected. Queries come from q_src, keys/values from kv_src (the two
// coincide for self-attention). Dropout is applied to attention weights.
template <typename T>
Tensor<T> multi_head_attention(const Tensor<T>& q_src, const Tensor<T>& kv_src,
                               const AttentionWeights<T>& w, double attn_dropout,
                               bool train, Rng& rng, std::type_identity_t<Tape<T>>* tape,
                               AttnMap<T>* map_out = nullptr) {
    const std::size_t l_q = q_src.rows(), l_k = kv_src.rows();
    if (map_out) map_out->data = Tensor<T>({w.heads, l_q, l_k});

    const T inv_sqrt_dk = static_cast<T>(1.0 / std::sqrt(static_cast<double>(w.d_head)));
    std::vector<Tensor<T>> head_outputs;
    for (std::size_t h = 0; h < w.heads; ++h) {
        Tensor<T> q = matmul(q_src, w.wq[h], tape);
        Tensor<T> k = matmul(kv_src, w.wk[h], tape);
        Tensor<T> v = matmul(kv_src, w.wv[h], tape);
        Tensor<T> logits = scale(matmul(q, transpose(k, tape), tape), inv_sqrt_dk, tape);
        Tensor<T> attn = softmax_rows(logits, tape);
        if (map_out)
            std::copy(attn.data(), attn.data() + attn.numel(),
                      map_out->data.data() + h * l_q * l_k);
        if (attn_dropout > 0.0)
            attn = dropout(attn, attn_dropout, train, rng, tape);
        head_outputs.push_back(matmul(attn, v, tape));
    }
    Tensor<T> merged = concat(head_outputs, 1, tape);
    return matmul(merged, w.wo, tape);
}

// Pre-norm transformer block used for both intra-modal self-attention and
// cross-modal attention:
//   x = x + MHA(LN1(x), LN_kv(src))     (src == x for self-attention)
//   x = x + Dropout(FF(LN2(x)))
template <typename T>
struct TransformerBlock {
    AttentionWeights<T> attn;
    Tensor<T> ln1_g, ln1_b;
    Tensor<T> ln_kv_g, ln_kv_b;  // used only when cross
    Tensor<T> ln2_g, ln2_b;
    Tensor<T> ff_w1, ff_b1, ff_w2, ff_b2;  // d -> 4d -> d
    bool cross = false;
    double attn_dropout = 0.1;
    double output_dropout = 0.1;
    T ln_eps = static_cast<T>(1e-5);

    static TransformerBlock init(std::size_t d, std::size_t heads, bool cross,
                                 double attn_dropout, double output_dropout, Rng& rng) {
        TransformerBlock b;
        b.cross = cross;
        b.attn_dropout = attn_dropout;
        b.output_dropout = output_dropout;
        b.attn = AttentionWeights<T>::init(d, heads, rng);
        auto gain = [&] { return Tensor<T>::full({d}, T(1), true); };
        auto bias = [&](std::size_t n) { return Tensor<T>::zeros({n}, true); };
        b.ln1_g = gain();
        b.ln1_b = bias(d);
        if (cross) {
            b.ln_kv_g = gain();
            b.ln_kv_b = bias(d);
        }
        b.ln2_g = gain();
        b.ln2_b = bias(d);
        const std::size_t hidden = 4 * d;
        auto proj = [&](std::size_t r, std::size_t c) {
            Tensor<T> t({r, c}, true);
            const double bound = 1.0 / std::sqrt(static_cast<double>(r));
            for (std::size_t i = 0; i < t.numel(); ++i)
                t.at(i) = static_cast<T>(rng.uniform(-bound, bound));
            return t;
        };
        b.ff_w1 = proj(d, hidden);
        b.ff_b1 = bias(hidden);
        b.ff_w2 = proj(hidden, d);
        b.ff_b2 = bias(d);
        return b;
    }

    // src is ignored for self-attention blocks.
    Tensor<T> forward(const Tensor<T>& x, const Tensor<T>* src, bool train, Rng& rng,
                      std::type_identity_t<Tape<T>>* tape, AttnMap<T>* map_out = nullptr) const {
        Tensor<T> q_in = layer_norm(x, ln1_g, ln1_b, ln_eps, tape);
        Tensor<T> kv_in = q_in;
        if (cross) {
            if (!src) throw ShapeError("cross block: missing source sequence");
            kv_in = layer_norm(*src, ln_kv_g, ln_kv_b, ln_eps, tape);
        }
        Tensor<T> attended =
            multi_head_attention(q_in, kv_in, attn, attn_dropout, train, rng, tape, map_out);
        Tensor<T> x1 = add(x, attended, tape);

        Tensor<T> ff_in = layer_norm(x1, ln2_g, ln2_b, ln_eps, tape);
        Tensor<T> hidden = relu(add_bias(matmul(ff_in, ff_w1, tape), ff_b1, tape), tape);
        Tensor<T> ff_out = add_bias(matmul(hidden, ff_w2, tape), ff_b2, tape);
        if (output_dropout > 0.0)
            ff_out = dropout(ff_out, output_dropout, train, rng, tape);
        return add(x1, ff_out, tape);
    }

    template <typename Fn>
    void for_each_param(const std::string& prefix, Fn&& fn) {
        for (std::size_t h = 0; h < attn.heads; ++h) {
            fn(prefix + "/wq" + std::to_string(h), attn.wq[h]);
            fn(prefix + "/wk" + std::to_string(h), attn.wk[h]);
            fn(prefix + "/wv" + std::to_string(h), attn.wv[h]);
        }
        fn(prefix + "/wo", attn.wo);
        fn(prefix + "/ln1_g", ln1_g);
        fn(prefix + "/ln1_b", ln1_b);
        if (cross) {
            fn(prefix + "/ln_kv_g", ln_kv_g);
            fn(prefix + "/ln_kv_b", ln_kv_b);
        }
        fn(prefix + "/ln2_g", ln2_g);
        fn(prefix + "/ln2_b", ln2_b);
        fn(prefix + "/ff_w1", ff_w1);
        fn(prefix + "/ff_b1", ff_b1);
        fn(prefix + "/ff_w2", ff_w2);
        fn(prefix + "/ff_b2", ff_b2);
    }
};

// Stack of self-attention blocks over one modality's token sequence.
template <typename T>
struct IntraModalTransformer {
    std::vector<TransformerBlock<T>> blocks;
    std::string modality;

    static IntraModalTransformer init(const std::string& modality, std::size_t d,
                                      std::size_t depth, std::size_t heads,
                                      double attn_dropout, double output_dropout,
                                      Rng& rng) {
        IntraModalTransformer t;
        t.modality = modality;
        for (std::size_t i = 0; i < depth; ++i)
            t.blocks.push_back(TransformerBlock<T>::init(d, heads, false, attn_dropout,
                                                         output_dropout, rng));
        return t;
    }
};

// Runs the intra-modal stack; domain spans pass through unchanged. When
// maps_out is given, the per-block attention maps are appended to it.
template <typename T>
TokenSequence<T> forward_intra(const TokenSequence<T>& x,
                               const IntraModalTransformer<T>& t, bool train, Rng& rng,
                               std::type_identity_t<Tape<T>>* tape, std::vector<AttnMap<T>>* maps_out = nullptr) {
    TokenSequence<T> out = x;
    for (const auto& block : t.blocks) {
        AttnMap<T> map;
        out.data = block.forward(out.data, nullptr, train, rng, tape,
                                 maps_out ? &map : nullptr);
        if (maps_out) maps_out->push_back(std::move(map));
    }
    return out;
}

}  // namespace audformer
