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

// Color transform and multi-level orthonormal Haar analysis/synthesis.
//
// One analysis level maps each disjoint 2x2 block {a b; c d} to
//
//   ll = (a + b + c + d) / 2     lh = (a + b - c - d) / 2
//   hl = (a - b + c - d) / 2     hh = (a - b - c + d) / 2
//
// which is its own inverse up to placement, so reconstruction is exact up to
// rounding. Image sizes must be divisible by 2^L; no boundary extension.

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "wavit/error.hpp"
#include "wavit/numerics.hpp"

namespace wavit {

/// A single channel of normalized intensities, height x width.
template <Real T>
using ImagePlane = Matrix<T>;

/// Three equally sized planes: RGB, YCbCr, or one subband over all channels.
template <Real T>
using ChannelStack = std::array<ImagePlane<T>, 3>;

template <Real T>
struct RgbImage {
    ImagePlane<T> r, g, b;
};

/// Zero-centered chroma; `y` is luma in [0, 1] for inputs in [0, 1].
template <Real T>
struct YCbCrImage {
    ImagePlane<T> y, cb, cr;

    ChannelStack<T> stack() const { return {y, cb, cr}; }
    static YCbCrImage from_stack(ChannelStack<T> s) {
        return {std::move(s[0]), std::move(s[1]), std::move(s[2])};
    }
};

template <Real T>
struct DetailBands {
    ChannelStack<T> lh, hl, hh;
};

template <Real T>
struct SubbandPyramid {
    int levels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    ChannelStack<T> ll;
    /// details[0] is level 1 (finest), details[levels - 1] is the coarsest.
    std::vector<DetailBands<T>> details;

    const DetailBands<T>& detail(int level) const { return details.at(static_cast<std::size_t>(level - 1)); }
};

namespace detail {

template <Real T>
void require_same_dims(const ImagePlane<T>& a, const ImagePlane<T>& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(what) + ": plane dimensions differ (" +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                             std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
    }
}

template <Real T>
void require_stack(const ChannelStack<T>& s, const char* what) {
    require_same_dims(s[0], s[1], what);
    require_same_dims(s[0], s[2], what);
}

} // namespace detail

template <Real T>
YCbCrImage<T> rgb_to_ycbcr(const RgbImage<T>& rgb) {
    detail::require_same_dims(rgb.r, rgb.g, "rgb_to_ycbcr");
    detail::require_same_dims(rgb.r, rgb.b, "rgb_to_ycbcr");
    const std::size_t h = rgb.r.rows(), w = rgb.r.cols();
    YCbCrImage<T> out{ImagePlane<T>(h, w), ImagePlane<T>(h, w), ImagePlane<T>(h, w)};
    const T kr = T(0.299), kg = T(0.587), kb = T(0.114);
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            const T r = rgb.r(i, j), g = rgb.g(i, j), b = rgb.b(i, j);
            if (!std::isfinite(r) || !std::isfinite(g) || !std::isfinite(b)) {
                throw NumericError("rgb_to_ycbcr: non-finite pixel value");
            }
            const T y = kr * r + kg * g + kb * b;
            out.y(i, j) = y;
            out.cb(i, j) = T(0.5) * (b - y) / (T(1) - kb);
            out.cr(i, j) = T(0.5) * (r - y) / (T(1) - kr);
        }
    }
    return out;
}

template <Real T>
struct HaarLevel {
    ImagePlane<T> ll, lh, hl, hh;
};

template <Real T>
HaarLevel<T> dwt2_level(const ImagePlane<T>& plane) {
    const std::size_t h = plane.rows(), w = plane.cols();
    if (h == 0 || w == 0 || h % 2 != 0 || w % 2 != 0) {
        throw DimensionError("dwt2_level: plane " + std::to_string(h) + "x" + std::to_string(w) +
                             " must have even, non-zero dimensions");
    }
    const std::size_t hh2 = h / 2, hw2 = w / 2;
    HaarLevel<T> out{ImagePlane<T>(hh2, hw2), ImagePlane<T>(hh2, hw2), ImagePlane<T>(hh2, hw2),
                     ImagePlane<T>(hh2, hw2)};
    const T half = T(0.5);
    for (std::size_t i = 0; i < hh2; ++i) {
        for (std::size_t j = 0; j < hw2; ++j) {
            const T a = plane(2 * i, 2 * j), b = plane(2 * i, 2 * j + 1);
            const T c = plane(2 * i + 1, 2 * j), d = plane(2 * i + 1, 2 * j + 1);
            out.ll(i, j) = half * ((a + b) + (c + d));
            out.lh(i, j) = half * ((a + b) - (c + d));
            out.hl(i, j) = half * ((a - b) + (c - d));
            out.hh(i, j) = half * ((a - b) - (c - d));
        }
    }
    return out;
}

template <Real T>
ImagePlane<T> idwt2_level(const ImagePlane<T>& ll, const ImagePlane<T>& lh, const ImagePlane<T>& hl,
                          const ImagePlane<T>& hh) {
    detail::require_same_dims(ll, lh, "idwt2_level");
    detail::require_same_dims(ll, hl, "idwt2_level");
    detail::require_same_dims(ll, hh, "idwt2_level");
    const std::size_t h = ll.rows(), w = ll.cols();
    ImagePlane<T> out(2 * h, 2 * w);
    const T half = T(0.5);
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            const T s = ll(i, j), v = lh(i, j), x = hl(i, j), dd = hh(i, j);
            out(2 * i, 2 * j) = half * ((s + v) + (x + dd));
            out(2 * i, 2 * j + 1) = half * ((s + v) - (x + dd));
            out(2 * i + 1, 2 * j) = half * ((s - v) + (x - dd));
            out(2 * i + 1, 2 * j + 1) = half * ((s - v) - (x - dd));
        }
    }
    return out;
}

template <Real T>
SubbandPyramid<T> decompose(const YCbCrImage<T>& image, int levels) {
    detail::require_same_dims(image.y, image.cb, "decompose");
    detail::require_same_dims(image.y, image.cr, "decompose");
    if (levels < 1) throw ConfigError("decompose: levels must be >= 1, got " + std::to_string(levels));
    const std::size_t h = image.y.rows(), w = image.y.cols();
    const std::size_t scale = std::size_t{1} << levels;
    if (h == 0 || w == 0 || h % scale != 0 || w % scale != 0) {
        throw ConfigError("decompose: image " + std::to_string(h) + "x" + std::to_string(w) +
                          " is not divisible by 2^" + std::to_string(levels));
    }
    SubbandPyramid<T> pyr;
    pyr.levels = levels;
    pyr.height = h;
    pyr.width = w;
    pyr.ll = image.stack();
    pyr.details.resize(static_cast<std::size_t>(levels));
    for (int lvl = 1; lvl <= levels; ++lvl) {
        auto& band = pyr.details[static_cast<std::size_t>(lvl - 1)];
        for (std::size_t c = 0; c < 3; ++c) {
            auto parts = dwt2_level(pyr.ll[c]);
            pyr.ll[c] = std::move(parts.ll);
            band.lh[c] = std::move(parts.lh);
            band.hl[c] = std::move(parts.hl);
            band.hh[c] = std::move(parts.hh);
        }
    }
    return pyr;
}

template <Real T>
YCbCrImage<T> reconstruct(const SubbandPyramid<T>& pyr) {
    if (pyr.levels < 1 || pyr.details.size() != static_cast<std::size_t>(pyr.levels)) {
        throw DimensionError("reconstruct: pyramid level count inconsistent");
    }
    detail::require_stack(pyr.ll, "reconstruct");
    ChannelStack<T> cur = pyr.ll;
    for (int lvl = pyr.levels; lvl >= 1; --lvl) {
        const auto& band = pyr.detail(lvl);
        for (std::size_t c = 0; c < 3; ++c) {
            cur[c] = idwt2_level(cur[c], band.lh[c], band.hl[c], band.hh[c]);
        }
    }
    if (cur[0].rows() != pyr.height || cur[0].cols() != pyr.width) {
        throw DimensionError("reconstruct: restored dims differ from recorded source dims");
    }
    return YCbCrImage<T>::from_stack(std::move(cur));
}

/// Sum of squared coefficients over every subband of the pyramid.
template <Real T>
double pyramid_energy(const SubbandPyramid<T>& pyr) {
    double total = 0.0;
    auto add = [&](const ChannelStack<T>& s) {
        for (const auto& p : s)
            for (T v : p.values()) total += static_cast<double>(v) * static_cast<double>(v);
    };
    add(pyr.ll);
    for (const auto& d : pyr.details) {
        add(d.lh);
        add(d.hl);
        add(d.hh);
    }
    return total;
}

template <Real T>
double image_energy(const YCbCrImage<T>& img) {
    double total = 0.0;
    for (const auto* p : {&img.y, &img.cb, &img.cr})
        for (T v : p->values()) total += static_cast<double>(v) * static_cast<double>(v);
    return total;
}

template <Real T>
T max_abs_diff(const YCbCrImage<T>& a, const YCbCrImage<T>& b) {
    detail::require_same_dims(a.y, b.y, "max_abs_diff");
    return std::max({max_abs_diff<T>(a.y.values(), b.y.values()),
                     max_abs_diff<T>(a.cb.values(), b.cb.values()),
                     max_abs_diff<T>(a.cr.values(), b.cr.values())});
}

} // namespace wavit
