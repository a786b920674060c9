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

// Deterministic fixtures. All randomness comes from splitmix64 and values
// are formed in double precision before the final cast, so a seed yields
// the same bits on every platform.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "wavit/inference.hpp"
#include "wavit/params.hpp"
#include "wavit/wavelet.hpp"

namespace wavit {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

private:
    std::uint64_t state_;
};

inline constexpr double kSyntheticWeightRange = 0.02;

template <Real T>
struct SyntheticModel {
    ModelParams<T> params;
    EmbeddingBank<T> bank;
};

/// Norm gains are 1. Weight matrices (".weight" tensors and the head) are
/// drawn from uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) so activations stay
/// O(1) and the readouts depend on image content; biases and the learned
/// level/kind/readout embeddings are drawn from uniform(-0.02, 0.02). Draws
/// follow visit_tensors order. Bank rows are drawn from uniform(-1, 1)
/// afterwards and normalized.
template <Real T>
SyntheticModel<T> gen_synthetic(std::uint64_t seed, const ModelConfig& cfg, std::size_t classes = 10,
                                double temperature = 100.0) {
    SplitMix64 rng(seed);
    ModelParams<T> p = ModelParams<T>::zeros(cfg);
    auto ends_with = [](const std::string& s, const char* suffix) {
        const std::string suf(suffix);
        return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
    };
    visit_tensors(p, [&](const std::string& name, const TensorShape& shape, std::span<T> v) {
        if (ends_with(name, ".gain")) {
            for (T& x : v) x = T(1);
            return;
        }
        const bool matrix = ends_with(name, ".weight");
        const double range =
            matrix ? 1.0 / std::sqrt(static_cast<double>(shape.at(0))) : kSyntheticWeightRange;
        for (T& x : v) x = static_cast<T>(rng.uniform(-range, range));
    });
    Matrix<T> rows(classes, static_cast<std::size_t>(cfg.d_out));
    for (T& x : rows.values()) x = static_cast<T>(rng.uniform(-1.0, 1.0));
    return {std::move(p), EmbeddingBank<T>(std::move(rows), {}, temperature)};
}

/// Uniform [0, 1) RGB image.
template <Real T>
RgbImage<T> random_rgb_image(std::uint64_t seed, std::size_t height, std::size_t width) {
    SplitMix64 rng(seed);
    RgbImage<T> img{ImagePlane<T>(height, width), ImagePlane<T>(height, width), ImagePlane<T>(height, width)};
    for (auto* p : {&img.r, &img.g, &img.b})
        for (T& x : p->values()) x = static_cast<T>(rng.unit());
    return img;
}

/// Smooth-plus-noise image: a random low-frequency gradient with a
/// random-amplitude texture on top, so images differ in how much of their
/// content sits in fine detail.
template <Real T>
RgbImage<T> structured_rgb_image(std::uint64_t seed, std::size_t height, std::size_t width) {
    SplitMix64 rng(seed);
    RgbImage<T> img{ImagePlane<T>(height, width), ImagePlane<T>(height, width), ImagePlane<T>(height, width)};
    const double detail = rng.unit();
    for (auto* p : {&img.r, &img.g, &img.b}) {
        const double base = rng.unit(), gx = rng.uniform(-0.5, 0.5), gy = rng.uniform(-0.5, 0.5);
        for (std::size_t i = 0; i < height; ++i)
            for (std::size_t j = 0; j < width; ++j) {
                const double smooth = base + gx * static_cast<double>(j) / static_cast<double>(width) +
                                      gy * static_cast<double>(i) / static_cast<double>(height);
                const double v = (1.0 - detail) * smooth + detail * rng.unit();
                (*p)(i, j) = static_cast<T>(std::clamp(v, 0.0, 1.0));
            }
    }
    return img;
}

} // namespace wavit
