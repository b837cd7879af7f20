#pragma once

// Central finite-difference gradient oracle. Independent of the tape:
// the loss function is re-evaluated at perturbed parameter values, so a
// backward-rule bug cannot hide in its own check.

#include <cmath>
#include <functional>
#include <vector>

#include "audformer/tensor.hpp"

namespace gradcheck {

// fn(tape) must rebuild the whole forward computation from the current
// parameter values and return a scalar loss tensor. Returns the maximum
// relative error between recorded and finite-difference gradients over
// every entry of every parameter.
inline double max_rel_error(std::vector<audformer::Tensor<double>> params,
                            const std::function<audformer::Tensor<double>(
                                audformer::Tape<double>*)>& fn,
                            double h = 1e-5) {
    using audformer::Tape;
    using audformer::Tensor;

    for (auto& p : params) p.zero_grad();
    Tape<double> tape;
    Tensor<double> loss = fn(&tape);
    audformer::backward(loss, tape);

    double worst = 0.0;
    for (auto& p : params) {
        for (std::size_t i = 0; i < p.numel(); ++i) {
            const double v = p.at(i);
            p.at(i) = v + h;
            const double f_plus = fn(nullptr).at(0);
            p.at(i) = v - h;
            const double f_minus = fn(nullptr).at(0);
            p.at(i) = v;

            const double fd = (f_plus - f_minus) / (2.0 * h);
            const double analytic = p.grad()[i];
            const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
            worst = std::max(worst, std::abs(fd - analytic) / denom);
        }
    }
    return worst;
}

inline audformer::Tensor<double> random_tensor(audformer::Shape shape,
                                               audformer::Rng& rng,
                                               bool requires_grad = true,
                                               double scale = 1.0) {
    audformer::Tensor<double> t(std::move(shape), requires_grad);
    for (std::size_t i = 0; i < t.numel(); ++i)
        t.at(i) = rng.uniform(-scale, scale);
    return t;
}

}  // namespace gradcheck
