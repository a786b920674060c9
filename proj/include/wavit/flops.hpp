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

// Analytic multiply-accumulate accounting for the image encoder.
//
// Convention: one multiply-accumulate is reported as one FLOP. Under it a
// 197-token ViT-B/16 forward costs about 17.5 G, in line with the usual
// reference figure. Per block and per query token, with n_total keys:
//
//   projections  4 d^2          (Q, K, V, output)
//   attention    2 n_total d    (scores + weighted values)
//   mlp          2 r d^2
//
// plus 3P^2 d per embedded token and d * d_out for each readout. Norms,
// softmax and GELU are excluded unless `include_elementwise` is set.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "wavit/error.hpp"
#include "wavit/tokenizer.hpp"

namespace wavit {

using Macs = std::uint64_t;

struct CostConfig {
    std::uint64_t dim = 768;
    std::uint64_t blocks = 12;
    std::uint64_t mlp_ratio = 4;
    std::uint64_t patch = 16;
    std::uint64_t d_out = 512;
    std::uint64_t heads = 12;  // only used for elementwise softmax counts
    bool include_elementwise = false;

    std::uint64_t patch_len() const { return 3 * patch * patch; }

    static CostConfig vit_b16() { return {}; }

    void validate() const {
        if (dim == 0 || blocks == 0 || mlp_ratio == 0 || patch == 0 || d_out == 0 || heads == 0) {
            throw ConfigError("cost config: all sizes must be positive");
        }
    }
};

struct StepCost {
    Macs embed = 0;
    Macs projections = 0;  // Q, K, V and output projections, all blocks
    Macs attention = 0;
    Macs mlp = 0;
    Macs elementwise = 0;
    Macs readout = 0;

    Macs total() const { return embed + projections + attention + mlp + elementwise + readout; }
};

/// Cost of adding `n_new` tokens to a sequence that then holds `n_total`
/// tokens, with keys/values of the first n_total - n_new reused.
inline StepCost step_macs_cached(std::uint64_t n_new, std::uint64_t n_total, const CostConfig& cfg) {
    cfg.validate();
    if (n_new > n_total) {
        throw RangeError("step_macs_cached: n_new " + std::to_string(n_new) + " exceeds n_total " +
                         std::to_string(n_total));
    }
    const std::uint64_t d = cfg.dim;
    StepCost c;
    c.embed = n_new * d * cfg.patch_len();
    c.projections = cfg.blocks * 4 * n_new * d * d;
    c.attention = cfg.blocks * 2 * n_new * n_total * d;
    c.mlp = cfg.blocks * 2 * n_new * d * (cfg.mlp_ratio * d);
    c.readout = d * cfg.d_out;
    if (cfg.include_elementwise) {
        // two norms per block + softmax exps + GELU, then the final norm
        c.elementwise = cfg.blocks * (2 * n_new * d + cfg.heads * n_new * n_total + n_new * cfg.mlp_ratio * d) + d;
    }
    return c;
}

/// One full forward over n tokens with nothing cached.
inline StepCost full_cost(std::uint64_t n, const CostConfig& cfg) { return step_macs_cached(n, n, cfg); }

inline Macs block_macs_full(std::uint64_t n, const CostConfig& cfg) {
    if (n == 0) throw RangeError("block_macs_full: n must be >= 1");
    return full_cost(n, cfg).total();
}

struct CostRow {
    int step = 0;
    std::uint64_t tokens_new = 0;
    std::uint64_t tokens_total = 0;
    StepCost cached;       // incremental step
    Macs naive_step = 0;   // re-encode all tokens so far
    Macs cached_cumulative = 0;
    Macs naive_cumulative = 0;

    Macs step_delta() const { return naive_step - cached.total(); }
    Macs cumulative_delta() const { return naive_cumulative - cached_cumulative; }
};

struct CostReport {
    std::vector<CostRow> rows;

    Macs cached_total() const { return rows.empty() ? 0 : rows.back().cached_cumulative; }
    Macs naive_total() const { return rows.empty() ? 0 : rows.back().naive_cumulative; }
    /// (naive - cached) / naive at the deepest step.
    double naive_overhead_fraction() const {
        const Macs n = naive_total();
        return n == 0 ? 0.0 : static_cast<double>(n - cached_total()) / static_cast<double>(n);
    }
};

/// Cost of running steps 0..exit_step over groups of the given sizes
/// (readouts included), cached versus naive re-encoding.
inline CostReport progressive_cost(const std::vector<std::uint64_t>& group_sizes, int exit_step,
                                   const CostConfig& cfg) {
    if (exit_step < 0 || static_cast<std::size_t>(exit_step) >= group_sizes.size()) {
        throw RangeError("progressive_cost: exit step " + std::to_string(exit_step) + " outside [0, " +
                         std::to_string(group_sizes.size()) + ")");
    }
    CostReport report;
    std::uint64_t total = 0;
    Macs cached_cum = 0, naive_cum = 0;
    for (int s = 0; s <= exit_step; ++s) {
        CostRow row;
        row.step = s;
        row.tokens_new = group_sizes[static_cast<std::size_t>(s)];
        total += row.tokens_new;
        row.tokens_total = total;
        row.cached = step_macs_cached(row.tokens_new, total, cfg);
        row.naive_step = full_cost(total, cfg).total();
        cached_cum += row.cached.total();
        naive_cum += row.naive_step;
        row.cached_cumulative = cached_cum;
        row.naive_cumulative = naive_cum;
        report.rows.push_back(row);
    }
    return report;
}

inline std::vector<std::uint64_t> plan_group_sizes(const TokenPlan& plan) {
    std::vector<std::uint64_t> out;
    for (const auto& g : plan.groups) out.push_back(g.size());
    return out;
}

inline CostReport progressive_cost(const TokenPlan& plan, int exit_step, const CostConfig& cfg) {
    return progressive_cost(plan_group_sizes(plan), exit_step, cfg);
}

/// Group sizes implied by the reference count-table convention: successive
/// differences of table1_counts(n_full, L, 1..L).
inline std::vector<std::uint64_t> table_group_sizes(std::uint64_t n_full, int levels) {
    std::vector<std::uint64_t> out;
    std::uint64_t prev = 0;
    for (int col = 1; col <= levels; ++col) {
        const std::uint64_t cum = table1_counts(n_full, levels, col);
        out.push_back(cum - prev);
        prev = cum;
    }
    return out;
}

struct ExpectedCost {
    double macs = 0.0;
    double tokens = 0.0;
};

/// Expectation of cached cost and processed tokens over the exit-step
/// distribution `fractions` (one entry per group, summing to 1).
inline ExpectedCost expected_cost(const std::vector<double>& fractions, const std::vector<std::uint64_t>& group_sizes,
                                  const CostConfig& cfg) {
    if (fractions.size() != group_sizes.size()) {
        throw RangeError("expected_cost: need one exit fraction per group");
    }
    double sum = 0.0;
    for (double f : fractions) {
        if (!(f >= 0.0) || f > 1.0) throw RangeError("expected_cost: fractions must lie in [0, 1]");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw RangeError("expected_cost: fractions sum to " + std::to_string(sum));
    const CostReport full = progressive_cost(group_sizes, static_cast<int>(group_sizes.size()) - 1, cfg);
    ExpectedCost out;
    for (std::size_t s = 0; s < fractions.size(); ++s) {
        out.macs += fractions[s] * static_cast<double>(full.rows[s].cached_cumulative);
        out.tokens += fractions[s] * static_cast<double>(full.rows[s].tokens_total);
    }
    return out;
}

/// Fraction of samples that must reach the deeper of two operating points
/// for the mean token count to equal `expected_tokens`.
inline double solve_two_point_fraction(double expected_tokens, double tokens_low, double tokens_high) {
    if (!(tokens_high > tokens_low)) throw RangeError("solve_two_point_fraction: need tokens_high > tokens_low");
    const double f = (expected_tokens - tokens_low) / (tokens_high - tokens_low);
    if (f < 0.0 || f > 1.0) throw RangeError("solve_two_point_fraction: expected tokens outside the two points");
    return f;
}

} // namespace wavit
