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

// Cosine-distance distillation of per-level readouts toward a frozen
// teacher embedding, with its closed-form gradient and a small
// projection-fitting loop.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "wavit/error.hpp"
#include "wavit/numerics.hpp"

namespace wavit {

/// 1 - cos(v, t).
template <Real T>
T cosine_distance(std::span<const T> v, std::span<const T> t) {
    const T nv = l2_norm(v), nt = l2_norm(t);
    if (!(nv > T(0)) || !(nt > T(0))) throw NumericError("cosine_distance: zero-norm input");
    return T(1) - dot(v, t) / (nv * nt);
}

/// Sum over every level readout (coarse level included) of 1 - cos(v_l, t).
template <Real T>
T distill_loss(const std::vector<std::vector<T>>& readouts, std::span<const T> teacher) {
    if (readouts.empty()) throw RangeError("distill_loss: no readouts");
    T total = T(0);
    for (const auto& v : readouts) {
        if (v.size() != teacher.size()) throw DimensionError("distill_loss: readout/teacher dims differ");
        total += cosine_distance<T>(v, teacher);
    }
    return total;
}

/// Gradient of 1 - cos(v, t) with respect to v:
///   -( t / (|v||t|) - <v,t> v / (|v|^3 |t|) ).
template <Real T>
std::vector<T> distill_loss_grad(std::span<const T> v, std::span<const T> t) {
    if (v.size() != t.size()) throw DimensionError("distill_loss_grad: dims differ");
    const T nv = l2_norm(v), nt = l2_norm(t);
    if (!(nv > T(0)) || !(nt > T(0))) throw NumericError("distill_loss_grad: zero-norm input");
    const T vt = dot(v, t);
    const T a = T(1) / (nv * nt);
    const T b = vt / (nv * nv * nv * nt);
    std::vector<T> g(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) g[i] = -(a * t[i] - b * v[i]);
    return g;
}

template <Real T>
struct FitResult {
    Matrix<T> weight;             // d x d_out
    std::vector<T> loss_history;  // loss before each step, then the final loss
    bool diverged = false;        // loss rose for kDivergenceSteps consecutive steps
};

inline constexpr int kDivergenceSteps = 5;

/// Total cosine distance of rows of hidden * weight against rows of targets.
template <Real T>
T projection_loss(const Matrix<T>& hidden, const Matrix<T>& targets, const Matrix<T>& weight) {
    const Matrix<T> pred = matmul(hidden, weight);
    T total = T(0);
    for (std::size_t r = 0; r < pred.rows(); ++r) total += cosine_distance<T>(pred.row(r), targets.row(r));
    return total;
}

/// Plain gradient descent on the projection only, starting from `initial`.
/// dL/dW = sum_r h_r^T g_r with g_r the cosine-distance gradient at h_r W.
template <Real T>
FitResult<T> fit_projection(const Matrix<T>& hidden, const Matrix<T>& targets, Matrix<T> initial, int steps,
                            T learning_rate) {
    if (hidden.rows() < 1 || hidden.rows() != targets.rows()) {
        throw DimensionError("fit_projection: need n >= 1 rows and matching targets");
    }
    if (initial.rows() != hidden.cols() || initial.cols() != targets.cols()) {
        throw DimensionError("fit_projection: initial weight must be d x d_out");
    }
    if (steps < 0) throw RangeError("fit_projection: negative step count");

    FitResult<T> res{std::move(initial), {}, false};
    int rising = 0;
    for (int it = 0; it <= steps; ++it) {
        const Matrix<T> pred = matmul(hidden, res.weight);
        T loss = T(0);
        Matrix<T> grad(res.weight.rows(), res.weight.cols());
        for (std::size_t r = 0; r < pred.rows(); ++r) {
            loss += cosine_distance<T>(pred.row(r), targets.row(r));
            const auto g = distill_loss_grad<T>(pred.row(r), targets.row(r));
            for (std::size_t i = 0; i < grad.rows(); ++i)
                for (std::size_t j = 0; j < grad.cols(); ++j) grad(i, j) += hidden(r, i) * g[j];
        }
        if (!res.loss_history.empty() && loss > res.loss_history.back()) {
            if (++rising >= kDivergenceSteps) res.diverged = true;
        } else {
            rising = 0;
        }
        res.loss_history.push_back(loss);
        if (it == steps) break;
        for (std::size_t k = 0; k < grad.size(); ++k) res.weight.values()[k] -= learning_rate * grad.values()[k];
    }
    return res;
}

} // namespace wavit
