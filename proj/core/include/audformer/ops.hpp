#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "audformer/rng.hpp"
#include "audformer/tensor.hpp"

// Differentiable tensor ops. Every op computes its forward result, and —
// when a tape is supplied and an input requires grad — records a closure
// implementing its backward rule. Gradients always accumulate (+=) so
// fan-out sums naturally.

namespace audformer {

namespace detail {

template <typename T>
inline bool track(const std::type_identity_t<Tape<T>>* tape, const Tensor<T>& a) {
    return tape != nullptr && a.requires_grad();
}

template <typename T>
inline bool track(const std::type_identity_t<Tape<T>>* tape, const Tensor<T>& a, const Tensor<T>& b) {
    return tape != nullptr && (a.requires_grad() || b.requires_grad());
}

// C += A * B on raw row-major buffers (m x k) * (k x n).
template <typename T>
inline void gemm_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
                     std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const T av = arow[p];
            if (av == T(0)) continue;
            const T* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C += A^T * B where A is (k x m), B is (k x n), C is (m x n).
template <typename T>
inline void gemm_at_b_acc(const T* a, const T* b, T* c, std::size_t k,
                          std::size_t m, std::size_t n) {
    for (std::size_t p = 0; p < k; ++p) {
        const T* arow = a + p * m;
        const T* brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const T av = arow[i];
            if (av == T(0)) continue;
            T* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C += A * B^T where A is (m x k), B is (n x k), C is (m x n).
template <typename T>
inline void gemm_a_bt_acc(const T* a, const T* b, T* c, std::size_t m,
                          std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const T* brow = b + j * k;
            T acc = T(0);
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] += acc;
        }
    }
}

}  // namespace detail

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, std::type_identity_t<Tape<T>>* tape = nullptr) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
        throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor<T> out({m, n});
    detail::gemm_acc(a.data(), b.data(), out.data(), m, k, n);

    if (detail::track(tape, a, b)) {
        out.set_requires_grad(true);
        Tensor<T> ac = a, bc = b, oc = out;
        tape->record(out, [ac, bc, oc, m, k, n]() mutable {
            if (ac.requires_grad())  // dA += dC * B^T
                detail::gemm_a_bt_acc(oc.grad(), bc.data(), ac.grad(), m, n, k);
            if (bc.requires_grad())  // dB += A^T * dC
                detail::gemm_at_b_acc(ac.data(), oc.grad(), bc.grad(), m, k, n);
        });
    }
    return out;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x, std::type_identity_t<Tape<T>>* tape = nullptr) {
    if (x.rank() != 2) throw ShapeError("transpose: expected rank-2, got " + shape_str(x.shape()));
    const std::size_t m = x.rows(), n = x.cols();
    Tensor<T> out({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(j, i) = x.at(i, j);

    if (detail::track(tape, x)) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        tape->record(out, [xc, oc, m, n]() mutable {
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    xc.grad()[i * n + j] += oc.grad()[j * m + i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b, std::type_identity_t<Tape<T>>* tape = nullptr) {
    if (a.shape() != b.shape())
        throw ShapeError("add: shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    Tensor<T> out(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) out.at(i) = a.at(i) + b.at(i);

    if (detail::track(tape, a, b)) {
        out.set_requires_grad(true);
        Tensor<T> ac = a, bc = b, oc = out;
        tape->record(out, [ac, bc, oc]() mutable {
            if (ac.requires_grad())
                for (std::size_t i = 0; i < oc.numel(); ++i) ac.grad()[i] += oc.grad()[i];
            if (bc.requires_grad())
                for (std::size_t i = 0; i < oc.numel(); ++i) bc.grad()[i] += oc.grad()[i];
        });
    }
    return out;
}

// x[l x d] + row-broadcast bias[d].
template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias, std::type_identity_t<Tape<T>>* tape = nullptr) {
    if (x.rank() != 2 || bias.rank() != 1 || bias.dim(0) != x.cols())
        throw ShapeError("add_bias: shape mismatch " + shape_str(x.shape()) +
                         " vs " + shape_str(bias.shape()));
    const std::size_t l = x.rows(), d = x.cols();
    Tensor<T> out({l, d});
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = 0; j < d; ++j) out.at(i, j) = x.at(i, j) + bias.at(j);

    if (detail::track(tape, x, bias)) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, bc = bias, oc = out;
        tape->record(out, [xc, bc, oc, l, d]() mutable {
            if (xc.requires_grad())
                for (std::size_t i = 0; i < l * d; ++i) xc.grad()[i] += oc.grad()[i];
            if (bc.requires_grad())
                for (std::size_t i = 0; i < l; ++i)
                    for (std::size_t j = 0; j < d; ++j) bc.grad()[j] += oc.grad()[i * d + j];
        });
    }
    return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor, std::type_identity_t<Tape<T>>* tape = nullptr) {
    Tensor<T> out(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) out.at(i) = x.at(i) * factor;

    if (detail::track(tape, x)) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        tape->record(out, [xc, oc, factor]() mutable {
            for (std::size_t i = 0; i < oc.numel(); ++i)
                xc.grad()[i] += factor * oc.grad()[i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x, std::type_identity_t<Tape<T>>* tape = nullptr) {
    Tensor<T> out(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) out.at(i) = x.at(i) > T(0) ? x.at(i) : T(0);

    if (detail::track(tape, x)) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        tape->record(out, [xc, oc]() mutable {
            for (std::size_t i = 0; i < oc.numel(); ++i)
                if (xc.at(i) > T(0)) xc.grad()[i] += oc.grad()[i];
        });
    }
    return out;
}

// Inverted dropout: identity in eval mode, survivors scaled by 1/(1-p).
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, bool train, Rng& rng,
                  std::type_identity_t<Tape<T>>* tape = nullptr) {
    if (p < 0.0 || p >= 1.0) throw NumericError("dropout: p must be in [0,1)");
    if (!train || p == 0.0) return x;

    const T keep_scale = T(1.0 / (1.0 - p));
    auto mask = std::make_shared<std::vector<bool>>(x.numel());
    Tensor<T> out(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const bool keep = rng.uniform() >= p;
        (*mask)[i] = keep;
        out.at(i) = keep ? x.at(i) * keep_scale : T(0);
    }

    if (detail::track(tape, x)) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        tape->record(out, [xc, oc, mask, keep_scale]() mutable {
            for (std::size_t i = 0; i < oc.numel(); ++i)
                if ((*mask)[i]) xc.grad()[i] += keep_scale * oc.grad()[i];
        });
    }
    return out;
}

// Concatenate rank-2 tensors along axis 0 (rows) or 1 (columns).
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis, std::type_identity_t<Tape<T>>* tape = nullptr) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
    for (const auto& p : parts)
        if (p.rank() != 2) throw ShapeError("concat: expected rank-2, got " + shape_str(p.shape()));

    std::size_t rows = parts[0].rows(), cols = parts[0].cols();
    if (axis == 0) {
        rows = 0;
        for (const auto& p : parts) {
            if (p.cols() != cols)
                throw ShapeError("concat axis 0: column mismatch " + shape_str(p.shape()) +
                                 " vs " + shape_str(parts[0].shape()));
            rows += p.rows();
        }
    } else {
        cols = 0;
        for (const auto& p : parts) {
            if (p.rows() != rows)
                throw ShapeError("concat axis 1: row mismatch " + shape_str(p.shape()) +
                                 " vs " + shape_str(parts[0].shape()));
            cols += p.cols();
        }
    }

    Tensor<T> out({rows, cols});
    if (axis == 0) {
        std::size_t r0 = 0;
        for (const auto& p : parts) {
            std::copy(p.data(), p.data() + p.numel(), out.data() + r0 * cols);
            r0 += p.rows();
        }
    } else {
        std::size_t c0 = 0;
        for (const auto& p : parts) {
            for (std::size_t i = 0; i < rows; ++i)
                std::copy(p.data() + i * p.cols(), p.data() + (i + 1) * p.cols(),
                          out.data() + i * cols + c0);
            c0 += p.cols();
        }
    }

    bool any_grad = false;
    for (const auto& p : parts) any_grad = any_grad || p.requires_grad();
    if (tape && any_grad) {
        out.set_requires_grad(true);
        std::vector<Tensor<T>> pc = parts;
        Tensor<T> oc = out;
        tape->record(out, [pc, oc, axis, rows, cols]() mutable {
            if (axis == 0) {
                std::size_t r0 = 0;
                for (auto& p : pc) {
                    if (p.requires_grad())
                        for (std::size_t i = 0; i < p.numel(); ++i)
                            p.grad()[i] += oc.grad()[r0 * cols + i];
                    r0 += p.rows();
                }
            } else {
                std::size_t c0 = 0;
                for (auto& p : pc) {
                    if (p.requires_grad())
                        for (std::size_t i = 0; i < rows; ++i)
                            for (std::size_t j = 0; j < p.cols(); ++j)
                                p.grad()[i * p.cols() + j] += oc.grad()[i * cols + c0 + j];
                    c0 += p.cols();
                }
            }
        });
    }
    return out;
}

// Mean over one axis of a rank-2 tensor. axis 0: [l x d] -> [1 x d];
// axis 1: [l x d] -> [l x 1].
template <typename T>
Tensor<T> mean_pool(const Tensor<T>& x, int axis, std::type_identity_t<Tape<T>>* tape = nullptr) {
    if (x.rank() != 2) throw ShapeError("mean_pool: expected rank-2, got " + shape_str(x.shape()));
    if (axis != 0 && axis != 1) throw ShapeError("mean_pool: axis must be 0 or 1");
    const std::size_t l = x.rows(), d = x.cols();
    Tensor<T> out(axis == 0 ? Shape{1, d} : Shape{l, 1});
    if (axis == 0) {
        for (std::size_t j = 0; j < d; ++j) {
            T acc = T(0);
            for (std::size_t i = 0; i < l; ++i) acc += x.at(i, j);
            out.at(0, j) = acc / T(l);
        }
    } else {
        for (std::size_t i = 0; i < l; ++i) {
            T acc = T(0);
            for (std::size_t j = 0; j < d; ++j) acc += x.at(i, j);
            out.at(i, 0) = acc / T(d);
        }
    }

    if (detail::track(tape, x)) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        tape->record(out, [xc, oc, axis, l, d]() mutable {
            if (axis == 0) {
                for (std::size_t i = 0; i < l; ++i)
                    for (std::size_t j = 0; j < d; ++j)
                        xc.grad()[i * d + j] += oc.grad()[j] / T(l);
            } else {
                for (std::size_t i = 0; i < l; ++i)
                    for (std::size_t j = 0; j < d; ++j)
                        xc.grad()[i * d + j] += oc.grad()[i] / T(d);
            }
        });
    }
    return out;
}

// Row-wise softmax with max subtraction for overflow safety.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x, std::type_identity_t<Tape<T>>* tape = nullptr) {
    if (x.rank() != 2) throw ShapeError("softmax_rows: expected rank-2, got " + shape_str(x.shape()));
    const std::size_t l = x.rows(), d = x.cols();
    Tensor<T> out({l, d});
    for (std::size_t i = 0; i < l; ++i) {
        T mx = x.at(i, 0);
        for (std::size_t j = 1; j < d; ++j) mx = std::max(mx, x.at(i, j));
        T sum = T(0);
        for (std::size_t j = 0; j < d; ++j) {
            const T e = std::exp(x.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < d; ++j) out.at(i, j) /= sum;
    }

    if (detail::track(tape, x)) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        tape->record(out, [xc, oc, l, d]() mutable {
            // dx = y * (dy - sum(dy * y)) per row
            for (std::size_t i = 0; i < l; ++i) {
                T dot = T(0);
                for (std::size_t j = 0; j < d; ++j)
                    dot += oc.grad()[i * d + j] * oc.at(i, j);
                for (std::size_t j = 0; j < d; ++j)
                    xc.grad()[i * d + j] += oc.at(i, j) * (oc.grad()[i * d + j] - dot);
            }
        });
    }
    return out;
}

// Per-row layer normalization with learned gain/bias of length d.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                     T eps, std::type_identity_t<Tape<T>>* tape = nullptr) {
    if (x.rank() != 2) throw ShapeError("layer_norm: expected rank-2, got " + shape_str(x.shape()));
    const std::size_t l = x.rows(), d = x.cols();
    if (gain.numel() != d || bias.numel() != d)
        throw ShapeError("layer_norm: gain/bias " + shape_str(gain.shape()) + "/" +
                         shape_str(bias.shape()) + " do not match row width " +
                         std::to_string(d));
    if (eps <= T(0)) throw NumericError("layer_norm: eps must be positive");

    Tensor<T> out({l, d});
    auto xhat = std::make_shared<std::vector<T>>(l * d);
    auto inv_std = std::make_shared<std::vector<T>>(l);
    for (std::size_t i = 0; i < l; ++i) {
        T mean = T(0);
        for (std::size_t j = 0; j < d; ++j) mean += x.at(i, j);
        mean /= T(d);
        T var = T(0);
        for (std::size_t j = 0; j < d; ++j) {
            const T c = x.at(i, j) - mean;
            var += c * c;
        }
        var /= T(d);
        const T istd = T(1) / std::sqrt(var + eps);
        (*inv_std)[i] = istd;
        for (std::size_t j = 0; j < d; ++j) {
            const T h = (x.at(i, j) - mean) * istd;
            (*xhat)[i * d + j] = h;
            out.at(i, j) = gain.at(j) * h + bias.at(j);
        }
    }

    const bool any = x.requires_grad() || gain.requires_grad() || bias.requires_grad();
    if (tape && any) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, gc = gain, bc = bias, oc = out;
        tape->record(out, [xc, gc, bc, oc, xhat, inv_std, l, d]() mutable {
            for (std::size_t i = 0; i < l; ++i) {
                T sum_gdy = T(0), sum_gdy_h = T(0);
                for (std::size_t j = 0; j < d; ++j) {
                    const T gdy = gc.at(j) * oc.grad()[i * d + j];
                    sum_gdy += gdy;
                    sum_gdy_h += gdy * (*xhat)[i * d + j];
                }
                const T istd = (*inv_std)[i];
                for (std::size_t j = 0; j < d; ++j) {
                    const T dy = oc.grad()[i * d + j];
                    const T h = (*xhat)[i * d + j];
                    if (xc.requires_grad()) {
                        const T gdy = gc.at(j) * dy;
                        xc.grad()[i * d + j] +=
                            istd * (gdy - sum_gdy / T(d) - h * sum_gdy_h / T(d));
                    }
                    if (gc.requires_grad()) gc.grad()[j] += dy * h;
                    if (bc.requires_grad()) bc.grad()[j] += dy;
                }
            }
        });
    }
    return out;
}

// 1-D convolution over the sequence axis, cross-correlation convention.
// x is [l x d_in], kernel is [k x d_in x d_out]; zero padding on both ends.
// Output length l' = floor((l + 2*padding - k)/stride) + 1.
template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& kernel, std::size_t stride,
                 std::size_t padding, std::type_identity_t<Tape<T>>* tape = nullptr) {
    if (x.rank() != 2 || kernel.rank() != 3)
        throw ShapeError("conv1d: expected x rank-2 and kernel rank-3, got " +
                         shape_str(x.shape()) + " and " + shape_str(kernel.shape()));
    const std::size_t l = x.rows(), d_in = x.cols();
    const std::size_t k = kernel.dim(0), kd_in = kernel.dim(1), d_out = kernel.dim(2);
    if (kd_in != d_in)
        throw ShapeError("conv1d: kernel input dim " + std::to_string(kd_in) +
                         " does not match x dim " + std::to_string(d_in));
    if (stride < 1) throw ShapeError("conv1d: stride must be >= 1");
    if (k > l + 2 * padding)
        throw ShapeError("conv1d: kernel length " + std::to_string(k) +
                         " exceeds padded input length " + std::to_string(l + 2 * padding));

    const std::size_t l_out = (l + 2 * padding - k) / stride + 1;
    Tensor<T> out({l_out, d_out});
    for (std::size_t t = 0; t < l_out; ++t) {
        for (std::size_t i = 0; i < k; ++i) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * stride + i) -
                                       static_cast<std::ptrdiff_t>(padding);
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(l)) continue;
            for (std::size_t c = 0; c < d_in; ++c) {
                const T xv = x.at(static_cast<std::size_t>(src), c);
                if (xv == T(0)) continue;
                for (std::size_t o = 0; o < d_out; ++o)
                    out.at(t, o) += xv * kernel.at(i, c, o);
            }
        }
    }

    if (detail::track(tape, x, kernel)) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, kc = kernel, oc = out;
        tape->record(out, [xc, kc, oc, l, d_in, k, d_out, stride, padding, l_out]() mutable {
            for (std::size_t t = 0; t < l_out; ++t) {
                for (std::size_t i = 0; i < k; ++i) {
                    const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * stride + i) -
                                               static_cast<std::ptrdiff_t>(padding);
                    if (src < 0 || src >= static_cast<std::ptrdiff_t>(l)) continue;
                    const std::size_t s = static_cast<std::size_t>(src);
                    for (std::size_t c = 0; c < d_in; ++c) {
                        for (std::size_t o = 0; o < d_out; ++o) {
                            const T dy = oc.grad()[t * d_out + o];
                            if (xc.requires_grad())
                                xc.grad()[s * d_in + c] += kc.at(i, c, o) * dy;
                            if (kc.requires_grad())
                                kc.grad()[(i * d_in + c) * d_out + o] += xc.at(s, c) * dy;
                        }
                    }
                }
            }
        });
    }
    return out;
}

// Sum of all entries -> scalar tensor of shape [1].
template <typename T>
Tensor<T> sum_all(const Tensor<T>& x, std::type_identity_t<Tape<T>>* tape = nullptr) {
    Tensor<T> out({1});
    T acc = T(0);
    for (std::size_t i = 0; i < x.numel(); ++i) acc += x.at(i);
    out.at(0) = acc;

    if (detail::track(tape, x)) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        tape->record(out, [xc, oc]() mutable {
            for (std::size_t i = 0; i < xc.numel(); ++i) xc.grad()[i] += oc.grad()[0];
        });
    }
    return out;
}

}  // namespace audformer
