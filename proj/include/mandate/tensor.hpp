#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mandate/common.hpp"

namespace mandate {

// Dense row-major tensor of doubles. Rank 1 and 2 are what the model uses;
// anything higher is unsupported on purpose.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s, double fill = 0.0) : shape(std::move(s)) {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        data.assign(n, fill);
    }

    static Tensor scalar(double v) {
        Tensor t({1});
        t.data[0] = v;
        return t;
    }
    static Tensor vec(std::vector<double> v) {
        Tensor t;
        t.shape = {v.size()};
        t.data = std::move(v);
        return t;
    }
    static Tensor matrix(std::size_t r, std::size_t c, std::vector<double> v) {
        Tensor t;
        t.shape = {r, c};
        t.data = std::move(v);
        if (t.data.size() != r * c)
            throw UsageError("Tensor::matrix: payload size does not match shape");
        return t;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t rows() const { return rank() == 1 ? 1 : shape[0]; }
    std::size_t cols() const { return rank() == 1 ? shape[0] : shape[rank() - 1]; }

    double& at(std::size_t i) { return data[i]; }
    double at(std::size_t i) const { return data[i]; }
    double& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + ")";
    }
};

inline Tensor gather_rows_tensor(const Tensor& src, std::span<const std::uint32_t> idx) {
    if (src.rank() != 2) throw UsageError("gather_rows_tensor: rank-2 input required");
    const std::size_t c = src.cols();
    Tensor out({idx.size(), c});
    for (std::size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] >= src.rows())
            throw UsageError("gather_rows_tensor: row index out of range");
        const double* s = src.data.data() + std::size_t(idx[r]) * c;
        double* d = out.data.data() + r * c;
        for (std::size_t j = 0; j < c; ++j) d[j] = s[j];
    }
    return out;
}

}  // namespace mandate
