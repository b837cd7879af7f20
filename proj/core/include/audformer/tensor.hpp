#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "audformer/error.hpp"

namespace audformer {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    os << "]";
    return os.str();
}

// Dense row-major tensor with an optional gradient buffer of the same
// shape. Copies are shallow (shared storage): ops hand out handles that
// backward closures capture, so gradients written during the reverse
// sweep are visible through every alias.
template <typename T>
class Tensor {
  public:
    Tensor() : d_(std::make_shared<Storage>()) {}

    explicit Tensor(Shape shape, bool requires_grad = false)
        : d_(std::make_shared<Storage>()) {
        d_->shape = std::move(shape);
        d_->values.assign(shape_numel(d_->shape), T(0));
        d_->requires_grad = requires_grad;
        if (requires_grad) d_->grad.assign(d_->values.size(), T(0));
    }

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        return Tensor(std::move(shape), requires_grad);
    }

    static Tensor full(Shape shape, T value, bool requires_grad = false) {
        Tensor t(std::move(shape), requires_grad);
        std::fill(t.d_->values.begin(), t.d_->values.end(), value);
        return t;
    }

    static Tensor from_values(Shape shape, std::vector<T> values,
                              bool requires_grad = false) {
        if (shape_numel(shape) != values.size())
            throw ShapeError("tensor: " + std::to_string(values.size()) +
                             " values do not fill shape " + shape_str(shape));
        Tensor t;
        t.d_->shape = std::move(shape);
        t.d_->values = std::move(values);
        t.d_->requires_grad = requires_grad;
        if (requires_grad) t.d_->grad.assign(t.d_->values.size(), T(0));
        return t;
    }

    // 2-D convenience constructor: rows of equal length.
    static Tensor from_rows(std::initializer_list<std::initializer_list<T>> rows,
                            bool requires_grad = false) {
        std::size_t r = rows.size();
        std::size_t c = r ? rows.begin()->size() : 0;
        std::vector<T> vals;
        vals.reserve(r * c);
        for (const auto& row : rows) {
            if (row.size() != c) throw ShapeError("from_rows: ragged rows");
            vals.insert(vals.end(), row.begin(), row.end());
        }
        return from_values({r, c}, std::move(vals), requires_grad);
    }

    static Tensor identity(std::size_t n) {
        Tensor t({n, n});
        for (std::size_t i = 0; i < n; ++i) t.at(i, i) = T(1);
        return t;
    }

    const Shape& shape() const { return d_->shape; }
    std::size_t rank() const { return d_->shape.size(); }
    std::size_t numel() const { return d_->values.size(); }
    std::size_t dim(std::size_t i) const { return d_->shape.at(i); }

    // Rank-2 accessors, used pervasively by the model path.
    std::size_t rows() const { return d_->shape.at(0); }
    std::size_t cols() const { return d_->shape.at(1); }

    T* data() { return d_->values.data(); }
    const T* data() const { return d_->values.data(); }
    std::vector<T>& values() { return d_->values; }
    const std::vector<T>& values() const { return d_->values; }

    T& at(std::size_t i) { return d_->values[i]; }
    T at(std::size_t i) const { return d_->values[i]; }
    T& at(std::size_t i, std::size_t j) { return d_->values[i * cols() + j]; }
    T at(std::size_t i, std::size_t j) const { return d_->values[i * cols() + j]; }
    T& at(std::size_t i, std::size_t j, std::size_t k) {
        return d_->values[(i * d_->shape[1] + j) * d_->shape[2] + k];
    }
    T at(std::size_t i, std::size_t j, std::size_t k) const {
        return d_->values[(i * d_->shape[1] + j) * d_->shape[2] + k];
    }

    bool requires_grad() const { return d_->requires_grad; }

    Tensor& set_requires_grad(bool on) {
        d_->requires_grad = on;
        if (on && d_->grad.size() != d_->values.size())
            d_->grad.assign(d_->values.size(), T(0));
        return *this;
    }

    bool has_grad() const { return d_->grad.size() == d_->values.size(); }

    T* grad() { return d_->grad.data(); }
    const T* grad() const { return d_->grad.data(); }
    std::vector<T>& grad_values() { return d_->grad; }

    void zero_grad() {
        std::fill(d_->grad.begin(), d_->grad.end(), T(0));
    }

    bool same_storage(const Tensor& other) const { return d_ == other.d_; }

    // Deep copy (fresh storage, gradient buffer not copied).
    Tensor clone() const {
        Tensor t;
        t.d_->shape = d_->shape;
        t.d_->values = d_->values;
        t.d_->requires_grad = d_->requires_grad;
        if (t.d_->requires_grad) t.d_->grad.assign(t.d_->values.size(), T(0));
        return t;
    }

    bool all_finite() const {
        for (T v : d_->values)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

  private:
    struct Storage {
        Shape shape;
        std::vector<T> values;
        std::vector<T> grad;  // empty unless requires_grad
        bool requires_grad = false;
    };
    std::shared_ptr<Storage> d_;
};

// Reverse-mode tape. Ops append one node per recorded operation in
// creation order; a backward pass runs the closures strictly in reverse.
// Gradient buffers of recorded op outputs are zeroed at the start of each
// pass (they are scratch space of that pass), so leaf gradients accumulate
// exactly additively: calling backward twice without zeroing leaves
// doubles their gradients.
template <typename T>
class Tape {
  public:
    void record(const Tensor<T>& output, std::function<void()> backward_fn) {
        nodes_.push_back({output, std::move(backward_fn)});
    }

    void zero_output_grads() {
        for (auto& n : nodes_) n.output.zero_grad();
    }

    void run_reverse() {
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward_fn();
    }

    void clear() { nodes_.clear(); }
    std::size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        Tensor<T> output;
        std::function<void()> backward_fn;
    };
    std::vector<Node> nodes_;
};

// Seed the loss gradient with ones and sweep the tape in reverse.
template <typename T>
void backward(Tensor<T>& loss, Tape<T>& tape) {
    if (!loss.requires_grad())
        throw NumericError("backward: loss does not require grad");
    tape.zero_output_grads();
    for (std::size_t i = 0; i < loss.numel(); ++i) loss.grad()[i] += T(1);
    tape.run_reverse();
}

template <typename To, typename From>
Tensor<To> cast_tensor(const Tensor<From>& x) {
    Tensor<To> out(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i)
        out.at(i) = static_cast<To>(x.at(i));
    return out;
}

}  // namespace audformer
