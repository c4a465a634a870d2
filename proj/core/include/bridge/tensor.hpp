#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "bridge/error.hpp"

namespace bridge {

// Dense row-major tensor. The scalar type S is float for training and double
// for verification mode; both instantiations share all code paths.
template <typename S>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<S> values;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> dims, S fill = S(0)) : shape(std::move(dims)) {
        values.assign(checked_numel(shape), fill);
    }

    Tensor(std::vector<std::size_t> dims, std::vector<S> data)
        : shape(std::move(dims)), values(std::move(data)) {
        if (checked_numel(shape) != values.size())
            throw DimensionError("tensor data length " + std::to_string(values.size()) +
                                 " does not match shape product " + std::to_string(numel(shape)));
    }

    static Tensor scalar(S v) { return Tensor({1}, std::vector<S>{v}); }

    static Tensor row(std::vector<S> data) {
        std::size_t n = data.size();
        return Tensor({n}, std::move(data));
    }

    static Tensor matrix(std::size_t r, std::size_t c, std::vector<S> data) {
        return Tensor({r, c}, std::move(data));
    }

    std::size_t size() const { return values.size(); }
    std::size_t ndim() const { return shape.size(); }

    std::size_t rows() const {
        require_2d();
        return shape[0];
    }
    std::size_t cols() const {
        require_2d();
        return shape[1];
    }

    S& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
    S at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

    S& operator[](std::size_t i) { return values[i]; }
    S operator[](std::size_t i) const { return values[i]; }

    S item() const {
        if (values.size() != 1) throw ContractError("item() on non-scalar tensor");
        return values[0];
    }

    bool all_finite() const {
        for (S v : values)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    static std::size_t numel(const std::vector<std::size_t>& dims) {
        std::size_t n = 1;
        for (std::size_t d : dims) n *= d;
        return dims.empty() ? 0 : n;
    }

private:
    void require_2d() const {
        if (shape.size() != 2) throw DimensionError("expected a 2-d tensor");
    }

    static std::size_t checked_numel(const std::vector<std::size_t>& dims) {
        if (dims.empty()) throw DimensionError("tensor must have at least one dimension");
        for (std::size_t d : dims)
            if (d == 0) throw DimensionError("tensor dimensions must be positive");
        return numel(dims);
    }
};

template <typename S>
std::string shape_string(const Tensor<S>& t) {
    std::string s = "[";
    for (std::size_t i = 0; i < t.shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(t.shape[i]);
    }
    return s + "]";
}

}  // namespace bridge
