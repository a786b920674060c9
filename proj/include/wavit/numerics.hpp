// Copyright 2026 The wavit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Dense kernels used by the encoder. Every reduction runs in a fixed
// sequential order so that the cached and full forward paths agree to the
// last bit whenever they perform the same arithmetic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "wavit/error.hpp"

namespace wavit {

template <typename T>
concept Real = std::is_floating_point_v<T>;

/// Row-major dense matrix.
template <Real T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T(0))
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<T> values)
        : rows_(rows), cols_(cols), data_(std::move(values)) {
        if (data_.size() != rows_ * cols_) {
            throw DimensionError("matrix storage length " + std::to_string(data_.size()) +
                                 " does not match " + std::to_string(rows_) + "x" +
                                 std::to_string(cols_));
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    /// Appends the rows of `other` below this matrix.
    void append_rows(const Matrix& other) {
        if (empty() && rows_ == 0) cols_ = other.cols_;
        if (other.cols_ != cols_) {
            throw DimensionError("append_rows: column mismatch " + std::to_string(cols_) + " vs " +
                                 std::to_string(other.cols_));
        }
        data_.insert(data_.end(), other.data_.begin(), other.data_.end());
        rows_ += other.rows_;
    }

    /// Copy of rows [first, first + count).
    Matrix slice_rows(std::size_t first, std::size_t count) const {
        if (first + count > rows_) throw RangeError("slice_rows out of range");
        Matrix out(count, cols_);
        std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_), count * cols_,
                    out.data_.begin());
        return out;
    }

    template <Real U>
    Matrix<U> cast() const {
        Matrix<U> out(rows_, cols_);
        for (std::size_t i = 0; i < data_.size(); ++i) out.values()[i] = static_cast<U>(data_[i]);
        return out;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

/// C = A * B with the k-loop innermost and sequential.
template <Real T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                             std::to_string(b.rows()) + " disagree");
    }
    Matrix<T> c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            T acc = T(0);
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            c(i, j) = acc;
        }
    }
    return c;
}

/// x * W + bias, broadcasting the bias over rows.
template <Real T>
Matrix<T> linear(const Matrix<T>& x, const Matrix<T>& weight, std::span<const T> bias) {
    Matrix<T> y = matmul(x, weight);
    if (!bias.empty()) {
        if (bias.size() != y.cols()) throw DimensionError("linear: bias length mismatch");
        for (std::size_t i = 0; i < y.rows(); ++i)
            for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += bias[j];
    }
    return y;
}

/// Softmax over the entries where `allowed` is true; the rest are exactly 0.
/// An empty mask means every entry is allowed.
template <Real T>
std::vector<T> softmax_row(std::span<const T> logits, std::span<const bool> allowed = {}) {
    if (!allowed.empty() && allowed.size() != logits.size()) {
        throw DimensionError("softmax_row: mask length mismatch");
    }
    auto ok = [&](std::size_t i) { return allowed.empty() || allowed[i]; };
    bool any = false;
    T peak = T(0);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (!ok(i)) continue;
        if (!any || logits[i] > peak) peak = logits[i];
        any = true;
    }
    if (!any) throw NumericError("softmax_row: every entry is masked");
    std::vector<T> out(logits.size(), T(0));
    T total = T(0);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (!ok(i)) continue;
        out[i] = std::exp(logits[i] - peak);
        total += out[i];
    }
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (ok(i)) out[i] /= total;
    }
    return out;
}

inline constexpr double kLayerNormEps = 1e-5;

template <Real T>
std::vector<T> layernorm(std::span<const T> x, std::span<const T> gain, std::span<const T> bias,
                         T eps = T(kLayerNormEps)) {
    if (gain.size() != x.size() || bias.size() != x.size()) {
        throw DimensionError("layernorm: gain/bias length must equal row length");
    }
    if (x.empty()) throw DimensionError("layernorm: empty row");
    const T n = static_cast<T>(x.size());
    T mean = T(0);
    for (T v : x) mean += v;
    mean /= n;
    T var = T(0);
    for (T v : x) var += (v - mean) * (v - mean);
    var /= n;
    const T inv = T(1) / std::sqrt(var + eps);
    std::vector<T> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) * inv * gain[i] + bias[i];
    return out;
}

/// Row-wise layernorm of a whole matrix.
template <Real T>
Matrix<T> layernorm_rows(const Matrix<T>& x, std::span<const T> gain, std::span<const T> bias) {
    Matrix<T> out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto y = layernorm<T>(x.row(r), gain, bias);
        std::copy(y.begin(), y.end(), out.row(r).begin());
    }
    return out;
}

/// Exact GELU, x * Phi(x).
template <Real T>
T gelu(T x) {
    return T(0.5) * x * (T(1) + std::erf(x / std::sqrt(T(2))));
}

template <Real T>
T dot(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
    T acc = T(0);
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

template <Real T>
T l2_norm(std::span<const T> a) {
    return std::sqrt(dot(a, a));
}

/// Unit-length copy; throws on a zero vector.
template <Real T>
std::vector<T> normalized(std::span<const T> a) {
    const T n = l2_norm(a);
    if (!(n > T(0)) || !std::isfinite(n)) throw NumericError("normalized: zero or non-finite norm");
    std::vector<T> out(a.begin(), a.end());
    for (T& v : out) v /= n;
    return out;
}

template <Real T>
T max_abs_diff(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size()) throw DimensionError("max_abs_diff: length mismatch");
    T worst = T(0);
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

} // namespace wavit
