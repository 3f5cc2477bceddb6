// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_NUMCORE_TENSOR_HPP_
#define DOCLAB_NUMCORE_TENSOR_HPP_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "doclab/util/error.hpp"
#include "doclab/util/rng.hpp"

namespace doclab::num {

// Dense row-major tensor with an optional same-shape gradient accumulator.
// Real is float for training and double for gradient-check builds.
template <class Real>
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<Real> data;
    std::vector<Real> grad;       // empty until requested
    bool needs_grad = false;

    Tensor() = default;

    explicit Tensor(std::vector<int64_t> shp) : shape(std::move(shp)) {
        data.assign(static_cast<size_t>(numel_of(shape)), Real(0));
    }

    Tensor(std::vector<int64_t> shp, std::vector<Real> values)
        : shape(std::move(shp)), data(std::move(values)) {
        if (numel_of(shape) != static_cast<int64_t>(data.size()))
            throw ShapeError("tensor data length does not match shape");
    }

    static int64_t numel_of(const std::vector<int64_t>& shp) {
        int64_t n = 1;
        for (int64_t d : shp) {
            if (d <= 0) throw ShapeError("non-positive dimension");
            n *= d;
        }
        return n;
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int64_t rows() const { return shape.empty() ? 1 : shape[0]; }
    int64_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    Real& at(int64_t r, int64_t c) { return data[static_cast<size_t>(r * cols() + c)]; }
    Real at(int64_t r, int64_t c) const { return data[static_cast<size_t>(r * cols() + c)]; }

    bool is_scalar() const { return numel() == 1; }
    Real scalar() const {
        if (!is_scalar()) throw ShapeError("tensor is not scalar");
        return data[0];
    }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), Real(0));
    }
    void zero_grad() {
        if (!grad.empty()) std::fill(grad.begin(), grad.end(), Real(0));
    }

    bool all_finite() const {
        for (Real v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    std::string shape_str() const {
        std::ostringstream ss;
        ss << "[";
        for (size_t i = 0; i < shape.size(); ++i) ss << (i ? "x" : "") << shape[i];
        ss << "]";
        return ss.str();
    }

    static Tensor zeros(std::vector<int64_t> shp) { return Tensor(std::move(shp)); }

    static Tensor full(std::vector<int64_t> shp, Real value) {
        Tensor t(std::move(shp));
        std::fill(t.data.begin(), t.data.end(), value);
        return t;
    }

    static Tensor scalar_of(Real value) { return Tensor({1}, {value}); }

    static Tensor randn(std::vector<int64_t> shp, Rng& rng, Real stddev) {
        Tensor t(std::move(shp));
        for (auto& v : t.data) v = static_cast<Real>(rng.normal(0.0, static_cast<double>(stddev)));
        return t;
    }

    template <class Other>
    Tensor<Other> cast() const {
        Tensor<Other> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<Other>(data[i]);
        return out;
    }
};

template <class Real>
using Var = std::shared_ptr<Tensor<Real>>;

}  // namespace doclab::num

#endif  // DOCLAB_NUMCORE_TENSOR_HPP_
