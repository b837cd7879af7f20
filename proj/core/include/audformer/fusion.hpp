#pragma once

#include <string>
#include <vector>

#include "audformer/attention.hpp"

namespace audformer {

struct ModalitySpan {
    std::string modality;
    std::size_t start = 0;
    std::size_t end = 0;
};

// Multimodal sequence: l_f x d with l_f = sum of modality lengths; spans
// tile [0, l_f) in declared modality order.
template <typename T>
struct FusionRepresentation {
    Tensor<T> data;
    std::vector<ModalitySpan> spans;

    std::size_t length() const { return data.rows(); }
};

// Low-level fusion: sequence-axis concatenation of the unimodal
// representations in declared order.
template <typename T>
FusionRepresentation<T> fuse_low(const std::vector<TokenSequence<T>>& urs,
                                 std::type_identity_t<Tape<T>>* tape = nullptr) {
    if (urs.empty()) throw ShapeError("fuse_low: no modalities");
    std::vector<Tensor<T>> parts;
    FusionRepresentation<T> fr;
    std::size_t offset = 0;
    for (const auto& ur : urs) {
        if (ur.data.cols() != urs.front().data.cols())
            throw ShapeError("fuse_low: channel mismatch " + shape_str(ur.data.shape()) +
                             " vs " + shape_str(urs.front().data.shape()));
        fr.spans.push_back({ur.modality, offset, offset + ur.data.rows()});
        offset += ur.data.rows();
        parts.push_back(ur.data);
    }
    fr.data = urs.size() == 1 ? urs.front().data : concat(parts, 0, tape);
    return fr;
}

// One cross-modal attention evaluation: queries from the target modality,
// keys/values from the fused sequence.
template <typename T>
Tensor<T> cross_attention(const Tensor<T>& ur, const FusionRepresentation<T>& fr,
                          const AttentionWeights<T>& w, double attn_dropout, bool train,
                          Rng& rng, std::type_identity_t<Tape<T>>* tape, AttnMap<T>* map_out = nullptr) {
    return multi_head_attention(ur, fr.data, w, attn_dropout, train, rng, tape, map_out);
}

// Per-modality stack of cross-attention blocks against a fixed FR_L.
template <typename T>
struct CrossModalTransformer {
    std::vector<TransformerBlock<T>> blocks;
    std::string modality;

    static CrossModalTransformer init(const std::string& modality, std::size_t d,
                                      std::size_t depth, std::size_t heads,
                                      double attn_dropout, double output_dropout,
                                      Rng& rng) {
        CrossModalTransformer t;
        t.modality = modality;
        for (std::size_t i = 0; i < depth; ++i)
            t.blocks.push_back(TransformerBlock<T>::init(d, heads, true, attn_dropout,
                                                         output_dropout, rng));
        return t;
    }
};

// High-level fusion: each target representation passes its cross-modal
// stack (every block re-reads the original FR_L), then the reinforced
// representations are concatenated in declared order into FR_H.
template <typename T>
FusionRepresentation<T> fuse_high(const std::vector<TokenSequence<T>>& urs,
                                  const FusionRepresentation<T>& fr_l,
                                  const std::vector<CrossModalTransformer<T>>& transformers,
                                  bool train, Rng& rng, std::type_identity_t<Tape<T>>* tape,
                                  std::vector<AttnMap<T>>* maps_out = nullptr) {
    if (urs.size() != transformers.size())
        throw ShapeError("fuse_high: " + std::to_string(urs.size()) + " modalities vs " +
                         std::to_string(transformers.size()) + " cross-modal transformers");

    std::vector<TokenSequence<T>> enhanced;
    for (std::size_t m = 0; m < urs.size(); ++m) {
        TokenSequence<T> x = urs[m];
        AttnMap<T> last_map;
        for (const auto& block : transformers[m].blocks)
            x.data = block.forward(x.data, &fr_l.data, train, rng, tape,
                                   maps_out ? &last_map : nullptr);
        if (maps_out) maps_out->push_back(std::move(last_map));
        enhanced.push_back(std::move(x));
    }
    return fuse_low(enhanced, tape);
}

}  // namespace audformer
