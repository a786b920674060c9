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

// Coarse-to-fine token layout over a wavelet pyramid.
//
// Group 0 holds one readout token followed by the patches of LL at the
// coarsest level L. Group s >= 1 holds one readout token followed by the
// patches of LH, HL and HH at level L - s + 1, each subband row-major. The
// three color channels of a subband are stacked inside each patch vector, so
// channels never multiply the token count.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "wavit/error.hpp"
#include "wavit/numerics.hpp"
#include "wavit/params.hpp"
#include "wavit/wavelet.hpp"

namespace wavit {

struct TokenDescriptor {
    SubbandKind kind = SubbandKind::Readout;
    int level = 0;  // wavelet level of the subband (1 = finest)
    int row = 0;    // patch grid coordinates; 0 for readouts
    int col = 0;

    friend bool operator==(const TokenDescriptor&, const TokenDescriptor&) = default;
};

struct TokenGroup {
    int id = 0;
    int level = 0;
    int grid_rows = 0;  // patch grid of each subband in this group
    int grid_cols = 0;
    std::vector<TokenDescriptor> tokens;
    std::size_t readout_index = 0;

    std::size_t size() const { return tokens.size(); }
    std::size_t spatial() const { return tokens.size() - 1; }

    friend bool operator==(const TokenGroup&, const TokenGroup&) = default;
};

struct TokenPlan {
    std::size_t height = 0;
    std::size_t width = 0;
    int patch = 0;
    int levels = 0;
    std::vector<TokenGroup> groups;

    /// Tokens (specials included) processed after refinement step `s`.
    std::size_t cumulative_tokens(int s) const {
        if (s < 0 || s > levels) throw RangeError("cumulative_tokens: step out of range");
        std::size_t n = 0;
        for (int g = 0; g <= s; ++g) n += groups[static_cast<std::size_t>(g)].size();
        return n;
    }

    /// Offset of group `s` in the full token sequence.
    std::size_t group_offset(int s) const { return s == 0 ? 0 : cumulative_tokens(s - 1); }

    std::vector<std::size_t> group_sizes() const {
        std::vector<std::size_t> out;
        for (const auto& g : groups) out.push_back(g.size());
        return out;
    }

    friend bool operator==(const TokenPlan&, const TokenPlan&) = default;
};

/// Throws ConfigError naming the first level whose subband grid is not a
/// whole number of P x P patches.
inline void check_token_dims(std::size_t height, std::size_t width, int patch, int levels) {
    if (patch <= 0) throw ConfigError("patch size must be positive");
    if (levels < 1) throw ConfigError("levels must be >= 1");
    if (height == 0 || width == 0) throw ConfigError("image dims must be non-zero");
    for (int lvl = 1; lvl <= levels; ++lvl) {
        const std::size_t scale = std::size_t{1} << lvl;
        const bool ok = height % scale == 0 && width % scale == 0 &&
                        (height / scale) % static_cast<std::size_t>(patch) == 0 &&
                        (width / scale) % static_cast<std::size_t>(patch) == 0;
        if (!ok) {
            throw ConfigError("token plan: level " + std::to_string(lvl) + " subband of a " +
                              std::to_string(height) + "x" + std::to_string(width) +
                              " image is not divisible into " + std::to_string(patch) + "x" +
                              std::to_string(patch) + " patches");
        }
    }
}

inline TokenPlan build_token_plan(std::size_t height, std::size_t width, int patch, int levels) {
    check_token_dims(height, width, patch, levels);
    TokenPlan plan{height, width, patch, levels, {}};
    for (int s = 0; s <= levels; ++s) {
        TokenGroup g;
        g.id = s;
        g.level = s == 0 ? levels : levels - s + 1;
        const std::size_t scale = std::size_t{1} << g.level;
        g.grid_rows = static_cast<int>(height / scale / static_cast<std::size_t>(patch));
        g.grid_cols = static_cast<int>(width / scale / static_cast<std::size_t>(patch));
        g.readout_index = 0;
        g.tokens.push_back({SubbandKind::Readout, g.level, 0, 0});
        const std::vector<SubbandKind> kinds =
            s == 0 ? std::vector{SubbandKind::LL}
                   : std::vector{SubbandKind::LH, SubbandKind::HL, SubbandKind::HH};
        for (SubbandKind k : kinds)
            for (int r = 0; r < g.grid_rows; ++r)
                for (int c = 0; c < g.grid_cols; ++c) g.tokens.push_back({k, g.level, r, c});
        plan.groups.push_back(std::move(g));
    }
    return plan;
}

/// Tokens after step s, one readout per group so far:
/// HW / (P^2 4^(L-s)) + (s + 1).
inline std::size_t token_counts(std::size_t height, std::size_t width, int patch, int levels, int step) {
    check_token_dims(height, width, patch, levels);
    if (step < 0 || step > levels) {
        throw RangeError("token_counts: step " + std::to_string(step) + " outside [0, " +
                         std::to_string(levels) + "]");
    }
    const std::size_t scale = (std::size_t{1} << (levels - step)) * static_cast<std::size_t>(patch);
    return (height / scale) * (width / scale) + static_cast<std::size_t>(step + 1);
}

/// Reference count-table convention: floor(N_full / 4^(L - col)) + col.
/// Reproduces the table's rounding on grids that do not divide evenly.
inline std::size_t table1_counts(std::size_t n_full, int levels, int col) {
    if (n_full < 1 || col < 1 || col > levels) {
        throw RangeError("table1_counts: need n_full >= 1 and 1 <= col <= levels");
    }
    const std::size_t div = std::size_t{1} << (2 * (levels - col));
    return n_full / div + static_cast<std::size_t>(col);
}

/// Patches of a channel-stacked subband, one row per patch in row-major
/// grid order. Each row is channel-major, then row-major inside the patch.
template <Real T>
Matrix<T> patchify_subband(const ChannelStack<T>& stack, int patch) {
    detail::require_stack(stack, "patchify_subband");
    const std::size_t h = stack[0].rows(), w = stack[0].cols();
    const auto p = static_cast<std::size_t>(patch);
    if (patch <= 0 || h % p != 0 || w % p != 0) {
        throw DimensionError("patchify_subband: " + std::to_string(h) + "x" + std::to_string(w) +
                             " is not divisible by patch " + std::to_string(patch));
    }
    const std::size_t gr = h / p, gc = w / p;
    Matrix<T> out(gr * gc, 3 * p * p);
    for (std::size_t r = 0; r < gr; ++r) {
        for (std::size_t c = 0; c < gc; ++c) {
            auto dst = out.row(r * gc + c);
            std::size_t k = 0;
            for (std::size_t ch = 0; ch < 3; ++ch)
                for (std::size_t y = 0; y < p; ++y)
                    for (std::size_t x = 0; x < p; ++x) dst[k++] = stack[ch](r * p + y, c * p + x);
        }
    }
    return out;
}

/// Fixed 2D sinusoidal code: the first half of the vector encodes the grid
/// row, the second half the grid column, as interleaved (sin, cos) pairs.
template <Real T>
std::vector<T> sinusoidal_position_2d(int row, int col, int dim) {
    if (dim <= 0 || dim % 4 != 0) throw ConfigError("sinusoidal_position_2d: dim must be a positive multiple of 4");
    std::vector<T> code(static_cast<std::size_t>(dim));
    const int half = dim / 2;
    const int pairs = half / 2;
    for (int i = 0; i < pairs; ++i) {
        const double freq = std::pow(10000.0, -static_cast<double>(2 * i) / half);
        code[static_cast<std::size_t>(2 * i)] = static_cast<T>(std::sin(row * freq));
        code[static_cast<std::size_t>(2 * i + 1)] = static_cast<T>(std::cos(row * freq));
        code[static_cast<std::size_t>(half + 2 * i)] = static_cast<T>(std::sin(col * freq));
        code[static_cast<std::size_t>(half + 2 * i + 1)] = static_cast<T>(std::cos(col * freq));
    }
    return code;
}

template <Real T>
struct TokenSequence {
    Matrix<T> embeddings;     // n x dim
    std::vector<int> group_ids;
    const TokenPlan* plan = nullptr;  // non-owning

    std::size_t size() const { return group_ids.size(); }
};

namespace detail {

template <Real T>
void require_plan_matches(const SubbandPyramid<T>& pyr, const TokenPlan& plan, const ModelConfig& cfg) {
    if (pyr.height != plan.height || pyr.width != plan.width || pyr.levels != plan.levels) {
        throw DimensionError("token plan does not match pyramid dims/levels");
    }
    if (cfg.patch != plan.patch || cfg.levels != plan.levels) {
        throw DimensionError("model config (patch " + std::to_string(cfg.patch) + ", levels " +
                             std::to_string(cfg.levels) + ") does not match token plan (patch " +
                             std::to_string(plan.patch) + ", levels " + std::to_string(plan.levels) + ")");
    }
}

template <Real T>
const ChannelStack<T>& subband_of(const SubbandPyramid<T>& pyr, SubbandKind kind, int level) {
    switch (kind) {
        case SubbandKind::LL: return pyr.ll;
        case SubbandKind::LH: return pyr.detail(level).lh;
        case SubbandKind::HL: return pyr.detail(level).hl;
        case SubbandKind::HH: return pyr.detail(level).hh;
        default: throw RangeError("subband_of: readout has no subband");
    }
}

} // namespace detail

/// Embeddings of one group, in plan order (readout first).
template <Real T>
Matrix<T> embed_group(const SubbandPyramid<T>& pyr, const TokenPlan& plan, const ModelParams<T>& params,
                      int group) {
    detail::require_plan_matches(pyr, plan, params.config);
    if (group < 0 || group > plan.levels) throw RangeError("embed_group: group out of range");
    const auto& g = plan.groups[static_cast<std::size_t>(group)];
    const auto d = static_cast<std::size_t>(params.config.dim);
    const auto gi = static_cast<std::size_t>(group);
    Matrix<T> out(g.size(), d);

    for (std::size_t t = 0; t < g.size(); ++t) {
        if (g.tokens[t].kind != SubbandKind::Readout) continue;
        for (std::size_t j = 0; j < d; ++j) out(t, j) = params.readout_embed(gi, j);
    }
    const std::vector<SubbandKind> kinds =
        group == 0 ? std::vector{SubbandKind::LL}
                   : std::vector{SubbandKind::LH, SubbandKind::HL, SubbandKind::HH};
    std::size_t next = 1;  // spatial tokens follow the readout
    for (SubbandKind kind : kinds) {
        const auto k = static_cast<std::size_t>(kind);
        const Matrix<T> patches = patchify_subband(detail::subband_of(pyr, kind, g.level), plan.patch);
        const Matrix<T> proj = linear(patches, params.patch_proj[k], std::span<const T>(params.patch_bias[k]));
        for (std::size_t i = 0; i < proj.rows(); ++i, ++next) {
            const auto& desc = g.tokens[next];
            const auto pos = sinusoidal_position_2d<T>(desc.row, desc.col, params.config.dim);
            for (std::size_t j = 0; j < d; ++j) {
                out(next, j) = proj(i, j) + pos[j] + params.level_embed(gi, j) + params.kind_embed(k, j);
            }
        }
    }
    return out;
}

template <Real T>
TokenSequence<T> embed_tokens(const SubbandPyramid<T>& pyr, const TokenPlan& plan, const ModelParams<T>& params) {
    TokenSequence<T> seq;
    seq.plan = &plan;
    seq.embeddings = Matrix<T>(0, static_cast<std::size_t>(params.config.dim));
    for (int s = 0; s <= plan.levels; ++s) {
        seq.embeddings.append_rows(embed_group(pyr, plan, params, s));
        seq.group_ids.insert(seq.group_ids.end(), plan.groups[static_cast<std::size_t>(s)].size(), s);
    }
    return seq;
}

} // namespace wavit
