#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "audformer/features.hpp"
#include "audformer/ops.hpp"

namespace audformer {

// Marks which token rows of a modality sequence came from which feature
// domain; spans tile [0, length) in fixed domain order.
struct DomainSpan {
    FeatureDomain domain;
    std::size_t start = 0;
    std::size_t end = 0;
};

template <typename T>
struct TokenSequence {
    Tensor<T> data;  // l_m x d_tc
    std::string modality;
    std::vector<DomainSpan> spans;

    std::size_t length() const { return data.rows(); }
    std::size_t channels() const { return data.cols(); }
};

// Sinusoidal position table: pe[p, 2i] = sin(p / 10000^(2i/d)),
// pe[p, 2i+1] = cos(p / 10000^(2i/d)). Deterministic, bounded in [-1, 1].
template <typename T>
Tensor<T> pe_table(std::size_t l, std::size_t d) {
    if (l < 1 || d < 1) throw ShapeError("pe_table: l and d must be >= 1");
    Tensor<T> pe({l, d});
    for (std::size_t p = 0; p < l; ++p) {
        for (std::size_t i = 0; 2 * i < d; ++i) {
            const double angle =
                static_cast<double>(p) /
                std::pow(10000.0, 2.0 * static_cast<double>(i) / static_cast<double>(d));
            pe.at(p, 2 * i) = static_cast<T>(std::sin(angle));
            if (2 * i + 1 < d) pe.at(p, 2 * i + 1) = static_cast<T>(std::cos(angle));
        }
    }
    return pe;
}

// One temporal-convolution kernel per feature domain, all projecting into
// the shared d_tc channel space. Strides are chosen per domain so no
// domain contributes more than max_tokens rows; "same" padding keeps the
// token count at ceil(frames/stride).
template <typename T>
struct TemporalConvLayer {
    std::array<Tensor<T>, kNumDomains> kernels;  // k x d_domain x d_tc
    std::array<std::size_t, kNumDomains> strides{};
    std::size_t d_tc = 0;

    struct DomainShape {
        std::size_t frames = 0;
        std::size_t dims = 0;
    };

    static TemporalConvLayer init(const std::array<DomainShape, kNumDomains>& shapes,
                                  std::size_t d_tc, std::size_t max_tokens,
                                  std::size_t scalar_kernel, std::size_t spectral_kernel,
                                  Rng& rng) {
        TemporalConvLayer layer;
        layer.d_tc = d_tc;
        for (std::size_t d = 0; d < kNumDomains; ++d) {
            const bool scalar = shapes[d].dims == 1;
            const std::size_t k = scalar ? scalar_kernel : spectral_kernel;
            layer.strides[d] =
                std::max<std::size_t>(1, (shapes[d].frames + max_tokens - 1) / max_tokens);
            Tensor<T> kernel({k, shapes[d].dims, d_tc}, true);
            const double bound =
                1.0 / std::sqrt(static_cast<double>(k * shapes[d].dims));
            for (std::size_t i = 0; i < kernel.numel(); ++i)
                kernel.at(i) = static_cast<T>(rng.uniform(-bound, bound));
            layer.kernels[d] = kernel;
        }
        return layer;
    }

    std::size_t token_count(std::size_t domain, std::size_t frames) const {
        return (frames + strides[domain] - 1) / strides[domain];  // ceil
    }
};

// Convolve each domain independently, concatenate along the sequence axis
// in fixed domain order, then add the sinusoidal position table over the
// whole modality sequence.
template <typename T>
TokenSequence<T> embed_modality(const std::array<Tensor<T>, kNumDomains>& domains,
                                const TemporalConvLayer<T>& layer,
                                const std::string& modality, std::type_identity_t<Tape<T>>* tape = nullptr) {
    std::vector<Tensor<T>> parts;
    std::vector<DomainSpan> spans;
    std::size_t offset = 0;

    for (std::size_t d = 0; d < kNumDomains; ++d) {
        const Tensor<T>& x = domains[d];
        const Tensor<T>& kernel = layer.kernels[d];
        if (x.rank() != 2 || x.cols() != kernel.dim(1))
            throw ShapeError(std::string("embed: domain ") +
                             domain_name(kAllDomains[d]) + " has dim " +
                             shape_str(x.shape()) + " but kernel expects " +
                             std::to_string(kernel.dim(1)) + " channels");
        const std::size_t pad = (kernel.dim(0) - 1) / 2;
        Tensor<T> tokens = conv1d(x, kernel, layer.strides[d], pad, tape);
        spans.push_back({kAllDomains[d], offset, offset + tokens.rows()});
        offset += tokens.rows();
        parts.push_back(std::move(tokens));
    }

    Tensor<T> seq = concat(parts, 0, tape);
    Tensor<T> pe = pe_table<T>(seq.rows(), seq.cols());
    TokenSequence<T> out;
    out.data = add(seq, pe, tape);
    out.modality = modality;
    out.spans = std::move(spans);
    return out;
}

// Convenience overload from extracted (float) features.
template <typename T>
TokenSequence<T> embed_modality(const ModalityFeatureSet& fs,
                                const TemporalConvLayer<T>& layer,
                                const std::string& modality, std::type_identity_t<Tape<T>>* tape = nullptr) {
    std::array<Tensor<T>, kNumDomains> domains;
    for (std::size_t d = 0; d < kNumDomains; ++d)
        domains[d] = cast_tensor<T>(fs.domains[d].data);
    return embed_modality(domains, layer, modality, tape);
}

}  // namespace audformer
