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

// Fast invariant suite behind `wavit selfcheck`. Output is a pure function
// of the seed: no timings, no addresses, fixed number formatting.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "wavit/distill.hpp"
#include "wavit/encoder.hpp"
#include "wavit/flops.hpp"
#include "wavit/inference.hpp"
#include "wavit/modelio.hpp"
#include "wavit/synthetic.hpp"
#include "wavit/tokenizer.hpp"
#include "wavit/wavelet.hpp"

namespace wavit {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace detail {

inline std::string fmt_double(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline ModelConfig desk_config() { return ModelConfig{32, 2, 4, 4, 8, 2, 16}; }

template <Real T>
double max_progressive_gap(std::uint64_t seed) {
    const ModelConfig cfg = desk_config();
    const auto model = gen_synthetic<T>(seed, cfg);
    const auto plan = build_token_plan(64, 64, cfg.patch, cfg.levels);
    const auto pyr = decompose(rgb_to_ycbcr(random_rgb_image<T>(seed ^ 0xA5A5ULL, 64, 64)), cfg.levels);
    const auto seq = embed_tokens(pyr, plan, model.params);
    const auto full = encode_full_masked(seq, plan, model.params);
    const auto prog = encode_progressive(pyr, plan, model.params, cfg.levels);
    double gap = static_cast<double>(max_abs_diff<T>(full.hidden.values(), prog.hidden.values()));
    for (std::size_t s = 0; s < prog.readouts.size(); ++s)
        gap = std::max(gap, static_cast<double>(max_abs_diff<T>(full.readouts[s], prog.readouts[s])));
    return gap;
}

} // namespace detail

inline std::vector<CheckResult> run_selfcheck(std::uint64_t seed) {
    std::vector<CheckResult> out;
    auto check = [&](const std::string& name, const std::function<std::pair<bool, std::string>()>& fn) {
        try {
            auto [ok, detail] = fn();
            out.push_back({name, ok, detail});
        } catch (const std::exception& e) {
            out.push_back({name, false, std::string("exception: ") + e.what()});
        }
    };

    check("wavelet.perfect_reconstruction", [&] {
        double worst32 = 0.0, worst64 = 0.0;
        for (int i = 0; i < 5; ++i) {
            for (int levels = 1; levels <= 3; ++levels) {
                const std::uint64_t s = seed * 1000 + static_cast<std::uint64_t>(i);
                const auto x32 = rgb_to_ycbcr(random_rgb_image<float>(s, 64, 64));
                const auto x64 = rgb_to_ycbcr(random_rgb_image<double>(s, 64, 64));
                worst32 = std::max(worst32, static_cast<double>(max_abs_diff(reconstruct(decompose(x32, levels)), x32)));
                worst64 = std::max(worst64, max_abs_diff(reconstruct(decompose(x64, levels)), x64));
            }
        }
        return std::pair{worst32 <= 1e-5 && worst64 <= 1e-12,
                         "f32 " + detail::fmt_double("%.3e", worst32) + ", f64 " + detail::fmt_double("%.3e", worst64)};
    });

    check("wavelet.energy_preservation", [&] {
        const auto x = rgb_to_ycbcr(random_rgb_image<double>(seed, 32, 32));
        const double e0 = image_energy(x), e1 = pyramid_energy(decompose(x, 3));
        const double rel = std::abs(e1 - e0) / e0;
        return std::pair{rel <= 1e-5, "relative error " + detail::fmt_double("%.3e", rel)};
    });

    check("tokenizer.table_counts", [&] {
        const std::vector<std::vector<std::size_t>> table{{197}, {50, 198}, {13, 51, 199}, {4, 14, 52, 200}};
        bool ok = true;
        for (int levels = 1; levels <= 4; ++levels)
            for (int col = 1; col <= levels; ++col)
                ok = ok && table1_counts(196, levels, col) == table[static_cast<std::size_t>(levels - 1)][static_cast<std::size_t>(col - 1)];
        return std::pair{ok, std::string("10 reference counts")};
    });

    check("tokenizer.partition", [&] {
        bool ok = true;
        for (int levels = 1; levels <= 3; ++levels) {
            const auto plan = build_token_plan(128, 64, 8, levels);
            std::size_t spatial = 0;
            for (const auto& g : plan.groups) spatial += g.spatial();
            ok = ok && spatial == 128 * 64 / 64 &&
                 plan.cumulative_tokens(levels) == token_counts(128, 64, 8, levels, levels);
        }
        return std::pair{ok, std::string("spatial tokens sum to HW/P^2")};
    });

    check("encoder.cached_equals_full", [&] {
        double g64 = 0.0, g32 = 0.0;
        for (std::uint64_t t = 0; t < 3; ++t) {
            g64 = std::max(g64, detail::max_progressive_gap<double>(seed + t));
            g32 = std::max(g32, detail::max_progressive_gap<float>(seed + t));
        }
        return std::pair{g64 <= 1e-10 && g32 <= 1e-4,
                         "f32 " + detail::fmt_double("%.3e", g32) + ", f64 " + detail::fmt_double("%.3e", g64)};
    });

    check("encoder.level_causality", [&] {
        const ModelConfig cfg = detail::desk_config();
        const auto model = gen_synthetic<float>(seed, cfg);
        const auto plan = build_token_plan(64, 64, cfg.patch, cfg.levels);
        const auto pyr = decompose(rgb_to_ycbcr(random_rgb_image<float>(seed + 1, 64, 64)), cfg.levels);
        auto seq = embed_tokens(pyr, plan, model.params);
        const auto base = encode_full_masked(seq, plan, model.params);
        SplitMix64 rng(seed);
        for (std::size_t i = plan.group_offset(2); i < seq.size(); ++i)
            for (float& v : seq.embeddings.row(i)) v += static_cast<float>(rng.uniform(-1.0, 1.0));
        const auto pert = encode_full_masked(seq, plan, model.params);
        const bool ok = base.readouts[0] == pert.readouts[0] && base.readouts[1] == pert.readouts[1] &&
                        base.readouts[2] != pert.readouts[2];
        return std::pair{ok, std::string("coarser readouts bit-identical under finest-group perturbation")};
    });

    check("flops.vit_b16_baseline", [&] {
        const double g = static_cast<double>(block_macs_full(197, CostConfig::vit_b16())) / 1e9;
        return std::pair{std::abs(g - 16.87) / 16.87 <= 0.10, detail::fmt_double("%.4f GMACs", g)};
    });

    check("flops.expected_cost", [&] {
        const auto sizes = table_group_sizes(196, 2);
        const std::vector<std::pair<double, double>> points{{71.93, 6.22}, {89.0, 7.8}, {160.0, 14.03}};
        bool ok = true;
        std::string detail;
        for (const auto& [tokens, target] : points) {
            const double f = solve_two_point_fraction(tokens, 50.0, 198.0);
            const double g = expected_cost({1.0 - f, f}, sizes, CostConfig::vit_b16()).macs / 1e9;
            ok = ok && std::abs(g - target) / target <= 0.05;
            detail += (detail.empty() ? "" : ", ") + detail::fmt_double("%.3f", g);
        }
        return std::pair{ok, detail + " GMACs"};
    });

    check("flops.naive_overhead", [&] {
        const auto report = progressive_cost(table_group_sizes(196, 2), 1, CostConfig::vit_b16());
        const double o = report.naive_overhead_fraction();
        return std::pair{o >= 0.18 && o <= 0.25 && report.cached_total() < report.naive_total(),
                         detail::fmt_double("%.4f", o)};
    });

    check("inference.gate_monotonicity", [&] {
        const ModelConfig cfg = detail::desk_config();
        const auto model = gen_synthetic<double>(seed, cfg);
        const auto plan = build_token_plan(64, 64, cfg.patch, cfg.levels);
        std::vector<SubbandPyramid<double>> images;
        for (std::uint64_t i = 0; i < 6; ++i)
            images.push_back(decompose(rgb_to_ycbcr(structured_rgb_image<double>(seed * 100 + i, 64, 64)), cfg.levels));
        const std::vector<double> thetas{0.0, 1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0, HUGE_VAL};
        bool ok = true;
        for (GateKind kind : {GateKind::Margin, GateKind::Prob}) {
            GateConfig gate;
            gate.kind = kind;
            const auto res = sweep(images, model.params, model.bank, gate, thetas, plan);
            for (std::size_t t = 1; t < thetas.size(); ++t) {
                ok = ok && res.rows[t].mean_tokens >= res.rows[t - 1].mean_tokens;
                for (std::size_t i = 0; i < images.size(); ++i)
                    ok = ok && res.exit_levels[t][i] >= res.exit_levels[t - 1][i];
            }
            ok = ok && res.rows.front().mean_tokens == static_cast<double>(plan.cumulative_tokens(0)) &&
                 res.rows.back().mean_tokens == static_cast<double>(plan.cumulative_tokens(plan.levels)) &&
                 res.rows.back().agreement == 1.0;
        }
        return std::pair{ok, std::string("exit levels non-decreasing in threshold")};
    });

    check("distill.gradient", [&] {
        SplitMix64 rng(seed);
        double worst = 0.0;
        for (int c = 0; c < 20; ++c) {
            std::vector<double> v(6), t(6);
            for (auto& x : v) x = rng.uniform(-1, 1);
            for (auto& x : t) x = rng.uniform(-1, 1);
            const auto g = distill_loss_grad<double>(v, t);
            for (std::size_t i = 0; i < v.size(); ++i) {
                auto vp = v, vm = v;
                vp[i] += 1e-6;
                vm[i] -= 1e-6;
                const double fd = (cosine_distance<double>(vp, t) - cosine_distance<double>(vm, t)) / 2e-6;
                worst = std::max(worst, std::abs(fd - g[i]) / std::max(1e-3, std::abs(g[i])));
            }
        }
        return std::pair{worst <= 1e-5, "max relative error " + detail::fmt_double("%.3e", worst)};
    });

    check("modelio.roundtrip", [&] {
        const auto model = gen_synthetic<float>(seed, detail::desk_config());
        const auto back = from_container<float>(to_container(model.params));
        return std::pair{back == model.params, std::string("bitwise")};
    });

    return out;
}

} // namespace wavit
