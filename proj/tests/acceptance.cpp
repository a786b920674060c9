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

// Acceptance suite: one PASS/FAIL line per acceptance criterion, evaluated
// at its stated tolerance. Exit status is non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include "wavit/wavit.hpp"

#ifndef WAVIT_CLI_PATH
#error "WAVIT_CLI_PATH must name the wavit executable"
#endif

namespace {

namespace fs = std::filesystem;
using namespace wavit;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool passed = false;
    std::string detail;
};

int g_failures = 0;

void report(const std::string& name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.passed ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.passed) ++g_failures;
}

std::string fmt(const char* spec, double v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

const ModelConfig kDesk{32, 2, 4, 4, 8, 2, 16};

Outcome wavelet_round_trip() {
    const auto t0 = Clock::now();
    double worst32 = 0.0, worst64 = 0.0;
    for (std::uint64_t i = 0; i < 100; ++i) {
        const auto x32 = rgb_to_ycbcr(random_rgb_image<float>(1000 + i, 64, 64));
        const auto x64 = rgb_to_ycbcr(random_rgb_image<double>(1000 + i, 64, 64));
        for (int levels = 1; levels <= 3; ++levels) {
            worst32 = std::max(worst32, static_cast<double>(max_abs_diff(reconstruct(decompose(x32, levels)), x32)));
            worst64 = std::max(worst64, max_abs_diff(reconstruct(decompose(x64, levels)), x64));
        }
    }
    const double secs = seconds_since(t0);
    return {worst32 <= 1e-5 && worst64 <= 1e-12 && secs < 5.0,
            "100 images x L{1,2,3}: max err f32 " + fmt("%.3e", worst32) + " (<= 1e-5), f64 " + fmt("%.3e", worst64) +
                " (<= 1e-12), " + fmt("%.3f", secs) + " s (< 5 s)"};
}

Outcome table_reproduction() {
    const std::vector<std::vector<std::size_t>> reference{{197}, {50, 198}, {13, 51, 199}, {4, 14, 52, 200}};
    std::string got;
    bool ok = true;
    for (int levels = 1; levels <= 4; ++levels) {
        got += (levels > 1 ? "; " : "");
        for (int col = 1; col <= levels; ++col) {
            const auto v = table1_counts(196, levels, col);
            ok = ok && v == reference[static_cast<std::size_t>(levels - 1)][static_cast<std::size_t>(col - 1)];
            got += (col > 1 ? ", " : "") + std::to_string(v);
        }
    }
    return {ok, "{" + got + "}"};
}

template <Real T>
double progressive_gap(std::uint64_t seed) {
    const auto model = gen_synthetic<T>(seed, kDesk);
    const auto plan = build_token_plan(64, 64, kDesk.patch, kDesk.levels);
    const auto pyr = decompose(rgb_to_ycbcr(random_rgb_image<T>(seed + 7777, 64, 64)), kDesk.levels);
    const auto full = encode_full_masked(embed_tokens(pyr, plan, model.params), plan, model.params);
    const auto prog = encode_progressive(pyr, plan, model.params, kDesk.levels);
    double gap = static_cast<double>(max_abs_diff<T>(full.hidden.values(), prog.hidden.values()));
    for (std::size_t s = 0; s < prog.readouts.size(); ++s)
        gap = std::max(gap, static_cast<double>(max_abs_diff<T>(full.readouts[s], prog.readouts[s])));
    return gap;
}

Outcome cached_equivalence() {
    const auto t0 = Clock::now();
    double g32 = 0.0, g64 = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        g32 = std::max(g32, progressive_gap<float>(seed));
        g64 = std::max(g64, progressive_gap<double>(seed));
    }
    const double secs = seconds_since(t0);
    return {g32 <= 1e-4 && g64 <= 1e-10 && secs < 30.0,
            "20 pairs (d=32, B=2, h=4, 64x64, P=8, L=2): max diff f32 " + fmt("%.3e", g32) + " (<= 1e-4), f64 " +
                fmt("%.3e", g64) + " (<= 1e-10), " + fmt("%.3f", secs) + " s (< 30 s)"};
}

Outcome level_causality() {
    const auto plan = build_token_plan(64, 64, kDesk.patch, kDesk.levels);
    int held = 0, changed_fine = 0;
    for (std::uint64_t trial = 0; trial < 50; ++trial) {
        SplitMix64 rng(trial * 7919 + 3);
        const auto model = gen_synthetic<float>(trial + 500, kDesk);
        const auto pyr = decompose(rgb_to_ycbcr(structured_rgb_image<float>(trial + 900, 64, 64)), kDesk.levels);
        auto seq = embed_tokens(pyr, plan, model.params);
        const auto base = encode_full_masked(seq, plan, model.params);
        // Perturb one token of a randomly chosen finer group.
        const int group = 1 + static_cast<int>(rng.next() % static_cast<std::uint64_t>(plan.levels));
        const auto& g = plan.groups[static_cast<std::size_t>(group)];
        const std::size_t row = plan.group_offset(group) + static_cast<std::size_t>(rng.next() % g.size());
        for (float& v : seq.embeddings.row(row)) v += static_cast<float>(rng.uniform(-1.0, 1.0));
        const auto pert = encode_full_masked(seq, plan, model.params);
        bool ok = true;
        for (int s = 0; s < group; ++s)
            ok = ok && base.readouts[static_cast<std::size_t>(s)] == pert.readouts[static_cast<std::size_t>(s)];
        held += ok ? 1 : 0;
        changed_fine += base.readouts[static_cast<std::size_t>(group)] != pert.readouts[static_cast<std::size_t>(group)];
    }
    return {held == 50, std::to_string(held) + "/50 trials kept every coarser readout bit-identical (perturbed group's "
                            "own readout changed in " + std::to_string(changed_fine) + "/50)"};
}

Outcome flops_baseline() {
    const double g = static_cast<double>(block_macs_full(197, CostConfig::vit_b16())) / 1e9;
    const double rel = std::abs(g - 16.87) / 16.87;
    return {rel <= 0.10, fmt("%.4f G", g) + " vs 16.87 G (" + fmt("%+.2f%%", 100.0 * (g - 16.87) / 16.87) +
                             ", tolerance 10%)"};
}

Outcome exit_profile_compute() {
    const auto sizes = table_group_sizes(196, 2);
    const std::vector<std::pair<double, double>> points{{71.93, 6.22}, {89.0, 7.8}, {160.0, 14.03}};
    bool ok = true;
    std::string detail;
    for (const auto& [tokens, target] : points) {
        const double f = solve_two_point_fraction(tokens, 50.0, 198.0);
        const double g = expected_cost({1.0 - f, f}, sizes, CostConfig::vit_b16()).macs / 1e9;
        const double rel = (g - target) / target;
        ok = ok && std::abs(rel) <= 0.05;
        detail += (detail.empty() ? "" : "; ") + fmt("tokens %.2f", tokens) + fmt(" f_full %.3f", f) +
                  fmt(" -> %.3f G", g) + fmt(" vs %.2f", target) + fmt(" (%+.2f%%)", 100.0 * rel);
    }
    return {ok, detail + " (tolerance 5%)"};
}

Outcome naive_overhead() {
    const auto report = progressive_cost(table_group_sizes(196, 2), 1, CostConfig::vit_b16());
    const double o = report.naive_overhead_fraction();
    return {o >= 0.18 && o <= 0.25,
            "groups {50, 148}: cached " + fmt("%.3f G", report.cached_total() / 1e9) + ", naive " +
                fmt("%.3f G", report.naive_total() / 1e9) + ", overhead (naive-cached)/naive = " +
                fmt("%.2f%%", 100.0 * o) + " (band 18-25%)"};
}

void fig3_soft_check() {
    const auto report = progressive_cost(table_group_sizes(196, 4), 3, CostConfig::vit_b16());
    std::string line = "INFO L=4 per-step naive-cached deltas (4/14/52/200, not asserted):";
    for (const auto& r : report.rows) line += fmt(" %+.3f", r.step_delta() / 1e9);
    line += " G per step; cumulative";
    for (const auto& r : report.rows) line += fmt(" %+.3f", r.cumulative_delta() / 1e9);
    line += " G; reference +0.56/+1.01/+2.23/+2.80";
    std::printf("%s\n", line.c_str());
}

Outcome gate_monotonicity() {
    const auto model = gen_synthetic<double>(2024, kDesk);
    const auto plan = build_token_plan(64, 64, kDesk.patch, kDesk.levels);
    std::vector<SubbandPyramid<double>> images;
    for (std::uint64_t i = 0; i < 50; ++i)
        images.push_back(decompose(rgb_to_ycbcr(structured_rgb_image<double>(40000 + i, 64, 64)), kDesk.levels));
    // Dense in [0, 0.3] where similarity-space margins live, then up to the
    // saturated probability range.
    std::vector<double> thetas{0.0, 1e-4, 1e-3};
    for (int k = 1; k <= 30; ++k) thetas.push_back(0.01 * k);
    for (int k = 7; k <= 19; ++k) thetas.push_back(0.05 * k);
    for (double t : {0.99, 0.999, 0.9999, 1.0, std::numeric_limits<double>::infinity()}) thetas.push_back(t);

    struct Variant {
        const char* name;
        GateKind kind;
        ScoreSpace space;
    };
    const Variant variants[] = {{"margin/prob", GateKind::Margin, ScoreSpace::Probability},
                                {"margin/sim", GateKind::Margin, ScoreSpace::Similarity},
                                {"prob", GateKind::Prob, ScoreSpace::Probability}};
    bool ok = true;
    std::string detail;
    for (const auto& v : variants) {
        GateConfig gate;
        gate.kind = v.kind;
        gate.space = v.space;
        const auto res = sweep(images, model.params, model.bank, gate, thetas, plan);
        std::size_t violations = 0;
        std::vector<std::size_t> used(static_cast<std::size_t>(plan.levels + 1), 0);
        for (const auto& row : res.exit_levels)
            for (int lvl : row) ++used[static_cast<std::size_t>(lvl)];
        for (std::size_t t = 1; t < thetas.size(); ++t) {
            violations += res.rows[t].mean_tokens < res.rows[t - 1].mean_tokens;
            for (std::size_t i = 0; i < images.size(); ++i)
                violations += res.exit_levels[t][i] < res.exit_levels[t - 1][i];
        }
        ok = ok && violations == 0;
        detail += (detail.empty() ? "" : "; ") + std::string(v.name) + ": " + std::to_string(violations) +
                  " violations, mean tokens " + fmt("%.2f", res.rows.front().mean_tokens) + " -> " +
                  fmt("%.2f", res.rows.back().mean_tokens) + ", exits per level {";
        for (std::size_t l = 0; l < used.size(); ++l) detail += (l ? ", " : "") + std::to_string(used[l]);
        detail += "}";
    }
    return {ok, "50 images x " + std::to_string(thetas.size()) + " thresholds; " + detail};
}

Outcome distillation_math() {
    const std::vector<double> vt{0.4, -1.1, 2.5, 0.3};
    const double zero = distill_loss<double>({vt, vt}, vt);

    SplitMix64 rng(31337);
    double worst = 0.0;
    for (int c = 0; c < 100; ++c) {
        std::vector<double> v(8), t(8);
        for (double& x : v) x = rng.uniform(-1, 1);
        for (double& x : t) x = rng.uniform(-1, 1);
        const auto g = distill_loss_grad<double>(v, t);
        for (std::size_t i = 0; i < v.size(); ++i) {
            auto vp = v, vm = v;
            vp[i] += 1e-6;
            vm[i] -= 1e-6;
            const double fd = (cosine_distance<double>(vp, t) - cosine_distance<double>(vm, t)) / 2e-6;
            // Relative error, floored so components that vanish analytically
            // are judged against the gradient's scale.
            worst = std::max(worst, std::abs(fd - g[i]) / std::max(std::abs(g[i]), 1e-3));
        }
    }

    const Matrix<double> h(1, 2, std::vector<double>{1.0, 0.5});
    const Matrix<double> t(1, 2, std::vector<double>{-0.3, 1.0});
    const auto fit = fit_projection(h, t, Matrix<double>::identity(2), 100, 0.1);
    bool decreasing = fit.loss_history.size() == 101;
    for (std::size_t i = 1; i < fit.loss_history.size(); ++i)
        decreasing = decreasing && fit.loss_history[i] < fit.loss_history[i - 1];

    return {zero <= 1e-12 && worst <= 1e-5 && decreasing,
            "loss at v=v_T " + fmt("%.1e", zero) + " (<= 1e-12); 100 finite-difference cases, max rel err " + fmt("%.3e", worst) +
                " (<= 1e-5); 2-dim fit loss " + fmt("%.4f", fit.loss_history.front()) + " -> " +
                fmt("%.3e", fit.loss_history.back()) + (decreasing ? ", strictly decreasing" : ", NOT strictly decreasing")};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(const std::string& args, const fs::path& stdout_file) {
    const std::string cmd = std::string("\"") + WAVIT_CLI_PATH + "\" " + args + " > \"" + stdout_file.string() + "\"";
    return std::system(cmd.c_str());
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "wavit_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    std::vector<std::string> mismatches;
    std::size_t compared = 0;
    for (int run = 0; run < 2; ++run) {
        const fs::path d = root / ("run" + std::to_string(run));
        fs::create_directories(d);
        const std::string syn = (d / "syn").string();
        if (run_cli("selfcheck --seed 7", d / "selfcheck.txt") != 0) return {false, "selfcheck exited non-zero"};
        if (run_cli("gen-synthetic --seed 7 --out \"" + syn + "\" --images 12 --hw 64", d / "gen.txt") != 0)
            return {false, "gen-synthetic failed"};
        const std::string sweep_args = "--images \"" + syn + "/images\" --model \"" + syn + "/model.json\" --bank \"" +
                                       syn + "/bank.json\" --thetas 0,0.0001,0.001,0.01,0.1,0.5,inf";
        if (run_cli("sweep " + sweep_args + " --gate margin --csv \"" + (d / "sweep_margin.csv").string() + "\"",
                    d / "sweep1.txt") != 0 ||
            run_cli("sweep " + sweep_args + " --gate prob --csv \"" + (d / "sweep_prob.csv").string() + "\"",
                    d / "sweep2.txt") != 0)
            return {false, "sweep failed"};
        if (run_cli("flops --preset vit-b16 --levels 4 --csv \"" + (d / "flops.csv").string() + "\"", d / "flops.txt") != 0)
            return {false, "flops failed"};
    }
    const char* files[] = {"selfcheck.txt", "sweep_margin.csv", "sweep_prob.csv", "flops.csv", "flops.txt",
                           "syn/model.json", "syn/model.bin", "syn/bank.bin"};
    for (const char* f : files) {
        const std::string a = slurp(root / "run0" / f), b = slurp(root / "run1" / f);
        ++compared;
        if (a.empty() || a != b) mismatches.push_back(f);
    }
    const bool ok = mismatches.empty();
    if (ok) fs::remove_all(root);
    std::string detail = std::to_string(compared - mismatches.size()) + "/" + std::to_string(compared) +
                         " outputs byte-identical across two runs (selfcheck --seed 7, sweep CSVs, flops CSV, "
                         "synthetic manifests)";
    for (const auto& m : mismatches) detail += "; differs or empty: " + m;
    return {ok, detail};
}

Outcome accuracy_scope() {
    // Reference accuracies need web-scale distilled weights; the engine
    // reports agreement with its own full-token prediction instead.
    const auto model = gen_synthetic<float>(77, kDesk);
    const auto plan = build_token_plan(64, 64, kDesk.patch, kDesk.levels);
    std::vector<SubbandPyramid<float>> images;
    for (std::uint64_t i = 0; i < 10; ++i)
        images.push_back(decompose(rgb_to_ycbcr(structured_rgb_image<float>(500 + i, 64, 64)), kDesk.levels));
    const auto res = sweep(images, model.params, model.bank, GateConfig{}, {0.0, std::numeric_limits<double>::infinity()},
                           plan);
    const bool ok = res.rows.back().agreement == 1.0 && res.rows.front().agreement >= 0.0 &&
                    res.rows.front().agreement <= 1.0;
    return {ok, "accuracy figures not reproduced (require distilled weights); agreement-rate metric in place: " +
                    fmt("%.2f", res.rows.front().agreement) + " at theta=0, " + fmt("%.2f", res.rows.back().agreement) +
                    " at theta=inf"};
}

} // namespace

int main() {
    report("wavelet-round-trip", wavelet_round_trip);
    report("token-count-table", table_reproduction);
    report("cached-equals-full", cached_equivalence);
    report("level-causality", level_causality);
    report("flops-baseline", flops_baseline);
    report("exit-profile-compute", exit_profile_compute);
    report("naive-vs-cached-overhead", naive_overhead);
    fig3_soft_check();
    report("gate-monotonicity", gate_monotonicity);
    report("distillation-math", distillation_math);
    report("determinism", determinism);
    report("accuracy-scope", accuracy_scope);
    std::printf("%s: %d failing criteria\n", g_failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED", g_failures);
    return g_failures == 0 ? 0 : 1;
}
