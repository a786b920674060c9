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

#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "wavit/inference.hpp"
#include "wavit/synthetic.hpp"

namespace wavit {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

EmbeddingBank<double> bank_of(std::vector<double> rows, std::size_t cols, double temperature = 100.0) {
    const std::size_t n = rows.size() / cols;
    return EmbeddingBank<double>(Matrix<double>(n, cols, std::move(rows)), {}, temperature);
}

TEST(Bank, NormalizesAndFlags) {
    const auto unit = bank_of({1, 0, 0, 1}, 2);
    EXPECT_FALSE(unit.renormalized());
    const auto scaled = bank_of({3, 4, 0, 2}, 2);
    EXPECT_TRUE(scaled.renormalized());
    EXPECT_DOUBLE_EQ(scaled.rows()(0, 0), 0.6);
    EXPECT_EQ(scaled.labels()[1], "class_1");
}

TEST(Bank, RejectsBadConfigurations) {
    EXPECT_THROW(bank_of({1, 0}, 2), ConfigError);
    EXPECT_THROW(bank_of({1, 0, 0, 1}, 2, 0.0), ConfigError);
    EXPECT_THROW(EmbeddingBank<double>(Matrix<double>(2, 2, 1.0), {"only-one"}, 1.0), DimensionError);
}

TEST(Score, CosineSimilarity) {
    const auto bank = bank_of({1, 0, 0, 0, 1, 0}, 3);
    const std::vector<double> v{2, 0, 0};
    const auto s = score<double>(v, bank);
    EXPECT_DOUBLE_EQ(s[0], 1.0);
    EXPECT_DOUBLE_EQ(s[1], 0.0);
}

TEST(Score, MatchesBruteForce) {
    SplitMix64 rng(12);
    std::vector<double> rows(5 * 7), v(7);
    for (double& x : rows) x = rng.uniform(-1, 1);
    for (double& x : v) x = rng.uniform(-1, 1);
    const auto bank = bank_of(rows, 7);
    const auto s = score<double>(v, bank);
    for (std::size_t m = 0; m < 5; ++m) {
        double dv = 0, nv = 0, nt = 0;
        for (std::size_t j = 0; j < 7; ++j) {
            dv += v[j] * rows[m * 7 + j];
            nv += v[j] * v[j];
            nt += rows[m * 7 + j] * rows[m * 7 + j];
        }
        EXPECT_NEAR(s[m], dv / std::sqrt(nv * nt), 1e-6);
    }
}

TEST(Argmax, TiesGoToLowestIndex) {
    const std::vector<double> s{0.1, 0.7, 0.7, 0.2};
    EXPECT_EQ(argmax<double>(s), 1u);
}

TEST(Argmax, InvariantUnderTemperature) {
    SplitMix64 rng(2);
    std::vector<double> s(10);
    for (double& x : s) x = rng.uniform(-1, 1);
    const auto base = argmax<double>(s);
    for (double tau : {0.01, 1.0, 100.0}) {
        EXPECT_EQ(argmax<double>(class_probabilities<double>(s, tau)), base);
    }
}

TEST(MarginGate, Examples) {
    const std::vector<double> s{0.9, 0.2};
    EXPECT_TRUE(margin_exit<double>(s, 0.5));
    EXPECT_TRUE(margin_exit<double>(s, 0.0));
    const std::vector<double> tie{0.4, 0.4, 0.1};
    EXPECT_TRUE(margin_exit<double>(tie, 0.0));
    EXPECT_FALSE(margin_exit<double>(tie, 1e-9));
}

TEST(ProbGate, Examples) {
    const std::vector<double> uniform(4, 0.25);
    EXPECT_FALSE(prob_exit<double>(uniform, 0.25));
    EXPECT_TRUE(prob_exit<double>(uniform, 0.0));
    const std::vector<double> sims{0.8, 0.2};
    const auto p = class_probabilities<double>(sims, 100.0);
    EXPECT_NEAR(p[0], 1.0, 1e-12);
    EXPECT_TRUE(prob_exit<double>(p, 0.99));
}

TEST(GateConfig, PerClassThreshold) {
    GateConfig g;
    g.mode = ThresholdMode::PerClass;
    g.per_class_factor = 0.002;
    EXPECT_DOUBLE_EQ(g.effective_threshold(1000), 2.0);
    g.per_class_factor = -1.0;
    EXPECT_THROW(g.effective_threshold(10), ConfigError);
    GateConfig a;
    a.threshold = 0.3;
    EXPECT_DOUBLE_EQ(a.effective_threshold(1000), 0.3);
}

struct Scene {
    ModelConfig cfg;
    SyntheticModel<double> model;
    TokenPlan plan;
    SubbandPyramid<double> pyr;
};

Scene make_scene(std::uint64_t seed, int levels = 2) {
    ModelConfig cfg{32, 2, 4, 4, 8, levels, 16};
    Scene s{cfg, gen_synthetic<double>(seed, cfg), build_token_plan(64, 64, 8, levels), {}};
    s.pyr = decompose(rgb_to_ycbcr(structured_rgb_image<double>(seed, 64, 64)), levels);
    return s;
}

TEST(Classify, ZeroThresholdExitsAtLevelZero) {
    for (GateKind kind : {GateKind::Margin, GateKind::Prob}) {
        const auto s = make_scene(1);
        GateConfig g;
        g.kind = kind;
        const auto tr = classify_progressive(s.pyr, s.model.params, s.model.bank, g, s.plan);
        EXPECT_EQ(tr.exit_level, 0);
        EXPECT_EQ(tr.levels.size(), 1u);
        EXPECT_EQ(tr.tokens, token_counts(64, 64, 8, 2, 0));
        EXPECT_EQ(tr.macs_cached, tr.macs_naive);
    }
}

TEST(Classify, InfiniteThresholdReachesFullTokenSet) {
    const auto s = make_scene(2);
    GateConfig g;
    g.threshold = kInf;
    const auto tr = classify_progressive(s.pyr, s.model.params, s.model.bank, g, s.plan);
    EXPECT_EQ(tr.exit_level, 2);
    EXPECT_EQ(tr.levels.size(), 3u);
    EXPECT_EQ(tr.tokens, token_counts(64, 64, 8, 2, 2));
    EXPECT_LT(tr.macs_cached, tr.macs_naive);
    EXPECT_FALSE(tr.levels[0].exit);
    EXPECT_TRUE(tr.levels[2].exit);
    EXPECT_EQ(tr.predicted_label, s.model.bank.labels()[tr.predicted]);
    EXPECT_LE(tr.levels[0].top.size(), kTraceTopK);
}

// Two-class bank built so the coarse readout is equidistant from both
// classes and the fine readout points straight at class 0.
TEST(Classify, RefinesPastAmbiguousCoarseLevel) {
    const auto s = make_scene(5, 1);
    const auto readouts = encode_progressive(s.pyr, s.plan, s.model.params, 1).readouts;
    const auto a = normalized<double>(readouts[0]);
    const auto t1 = normalized<double>(readouts[1]);
    const double c = dot<double>(a, t1);
    std::vector<double> rows(t1);
    for (std::size_t j = 0; j < a.size(); ++j) rows.push_back(2 * c * a[j] - t1[j]);
    const EmbeddingBank<double> bank(Matrix<double>(2, a.size(), rows), {"target", "decoy"}, 100.0);

    GateConfig g;
    g.space = ScoreSpace::Similarity;
    g.threshold = 1e-6;
    const auto tr = classify_progressive(s.pyr, s.model.params, bank, g, s.plan);
    ASSERT_EQ(tr.levels.size(), 2u);
    EXPECT_LT(tr.levels[0].margin, 1e-9);
    EXPECT_FALSE(tr.levels[0].exit);
    EXPECT_GE(tr.levels[1].margin, g.threshold);
    EXPECT_EQ(tr.exit_level, 1);
    EXPECT_EQ(tr.predicted, 0u);
    EXPECT_EQ(tr.predicted_label, "target");
}

TEST(Classify, GateReplayMatchesLiveRun) {
    const auto s = make_scene(6);
    const auto readouts = encode_progressive(s.pyr, s.plan, s.model.params, 2).readouts;
    for (double theta : {0.0, 0.05, 0.3, 0.9, kInf}) {
        GateConfig g;
        g.threshold = theta;
        const auto live = classify_progressive(s.pyr, s.model.params, s.model.bank, g, s.plan);
        const auto replay = gate_readouts(readouts, s.model.params, s.model.bank, g, s.plan);
        EXPECT_EQ(live.exit_level, replay.exit_level);
        EXPECT_EQ(live.predicted, replay.predicted);
        EXPECT_EQ(live.macs_cached, replay.macs_cached);
    }
}

TEST(Classify, BankDimensionMismatchThrows) {
    const auto s = make_scene(3);
    const auto bank = bank_of({1, 0, 0, 1}, 2);
    EXPECT_ANY_THROW(classify_progressive(s.pyr, s.model.params, bank, GateConfig{}, s.plan));
}

TEST(Sweep, ExtremesAndMonotonicity) {
    std::vector<SubbandPyramid<double>> images;
    const auto s = make_scene(7);
    for (std::uint64_t i = 0; i < 8; ++i)
        images.push_back(decompose(rgb_to_ycbcr(structured_rgb_image<double>(100 + i, 64, 64)), 2));
    const std::vector<double> thetas{0.0, 1e-3, 1e-2, 0.05, 0.2, 0.5, 0.9, kInf};
    for (GateKind kind : {GateKind::Margin, GateKind::Prob}) {
        for (ScoreSpace space : {ScoreSpace::Probability, ScoreSpace::Similarity}) {
            GateConfig g;
            g.kind = kind;
            g.space = space;
            const auto res = sweep(images, s.model.params, s.model.bank, g, thetas, s.plan);
            ASSERT_EQ(res.rows.size(), thetas.size());
            EXPECT_EQ(res.rows.front().mean_tokens, static_cast<double>(token_counts(64, 64, 8, 2, 0)));
            EXPECT_EQ(res.rows.back().mean_tokens, static_cast<double>(token_counts(64, 64, 8, 2, 2)));
            EXPECT_EQ(res.rows.back().agreement, 1.0);
            for (std::size_t t = 1; t < thetas.size(); ++t) {
                EXPECT_GE(res.rows[t].mean_tokens, res.rows[t - 1].mean_tokens);
                EXPECT_GE(res.rows[t].mean_macs_cached, res.rows[t - 1].mean_macs_cached);
                for (std::size_t i = 0; i < images.size(); ++i)
                    EXPECT_GE(res.exit_levels[t][i], res.exit_levels[t - 1][i]);
            }
        }
    }
}

TEST(Sweep, PerClassModeScalesByClassCount) {
    const auto s = make_scene(8);
    const std::vector<SubbandPyramid<double>> images{s.pyr};
    GateConfig abs_gate, pc_gate;
    pc_gate.mode = ThresholdMode::PerClass;
    const auto classes = static_cast<double>(s.model.bank.classes());
    const auto a = sweep(images, s.model.params, s.model.bank, abs_gate, {0.1, 0.5}, s.plan);
    const auto p = sweep(images, s.model.params, s.model.bank, pc_gate, {0.1 / classes, 0.5 / classes}, s.plan);
    EXPECT_EQ(a.exit_levels, p.exit_levels);
}

TEST(Sweep, LabelsAndErrors) {
    const auto s = make_scene(9);
    const std::vector<SubbandPyramid<double>> images{s.pyr};
    const auto full = classify_progressive(s.pyr, s.model.params, s.model.bank, GateConfig{GateKind::Margin, kInf}, s.plan);
    const auto right = sweep(images, s.model.params, s.model.bank, GateConfig{}, {kInf}, s.plan,
                             std::vector<std::size_t>{full.predicted});
    EXPECT_EQ(right.rows[0].agreement, 1.0);
    const auto wrong = sweep(images, s.model.params, s.model.bank, GateConfig{}, {kInf}, s.plan,
                             std::vector<std::size_t>{(full.predicted + 1) % 10});
    EXPECT_EQ(wrong.rows[0].agreement, 0.0);
    EXPECT_THROW(sweep(std::vector<SubbandPyramid<double>>{}, s.model.params, s.model.bank, GateConfig{}, {0.0}, s.plan),
                 RangeError);
}

} // namespace
} // namespace wavit
