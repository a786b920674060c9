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
#include <vector>

#include <gtest/gtest.h>

#include "wavit/distill.hpp"
#include "wavit/synthetic.hpp"

namespace wavit {
namespace {

std::vector<double> random_vec(SplitMix64& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1, 1);
    return v;
}

TEST(DistillLoss, ZeroWhenAligned) {
    const std::vector<double> t{0.3, -1.2, 2.0};
    EXPECT_NEAR(distill_loss<double>({t, t, t}, t), 0.0, 1e-15);
    const std::vector<double> scaled{0.6, -2.4, 4.0};
    EXPECT_NEAR(distill_loss<double>({scaled}, t), 0.0, 1e-15);
}

TEST(DistillLoss, AntipodalIsTwo) {
    const std::vector<double> t{1, 2, 3}, v{-1, -2, -3};
    EXPECT_NEAR(distill_loss<double>({v}, t), 2.0, 1e-15);
}

TEST(DistillLoss, MatchesBruteForce) {
    SplitMix64 rng(4);
    const auto t = random_vec(rng, 4);
    const std::vector<std::vector<double>> readouts{random_vec(rng, 4), random_vec(rng, 4), random_vec(rng, 4)};
    double expect = 0.0;
    for (const auto& v : readouts) {
        double d = 0, nv = 0, nt = 0;
        for (std::size_t i = 0; i < 4; ++i) {
            d += v[i] * t[i];
            nv += v[i] * v[i];
            nt += t[i] * t[i];
        }
        expect += 1.0 - d / (std::sqrt(nv) * std::sqrt(nt));
    }
    EXPECT_NEAR(distill_loss<double>(readouts, t), expect, 1e-12);
}

TEST(DistillLoss, ScaleInvariant) {
    SplitMix64 rng(5);
    const auto v = random_vec(rng, 6), t = random_vec(rng, 6);
    auto v2 = v, t2 = t;
    for (double& x : v2) x *= 3.7;
    for (double& x : t2) x *= 0.25;
    EXPECT_NEAR(distill_loss<double>({v2}, t2), distill_loss<double>({v}, t), 1e-12);
}

TEST(DistillLoss, ZeroNormAndShapeErrors) {
    const std::vector<double> z{0, 0}, t{1, 0};
    EXPECT_THROW(distill_loss<double>({z}, t), NumericError);
    EXPECT_THROW(distill_loss_grad<double>(t, z), NumericError);
    EXPECT_THROW(distill_loss<double>({std::vector<double>{1, 2, 3}}, t), DimensionError);
    EXPECT_THROW(distill_loss<double>({}, t), RangeError);
}

TEST(DistillGrad, ZeroAtMinimum) {
    const std::vector<double> t{1, -2, 0.5}, v{2, -4, 1};
    for (double g : distill_loss_grad<double>(v, t)) EXPECT_NEAR(g, 0.0, 1e-15);
}

TEST(DistillGrad, OrthogonalToInput) {
    SplitMix64 rng(6);
    for (int c = 0; c < 50; ++c) {
        const auto v = random_vec(rng, 8), t = random_vec(rng, 8);
        EXPECT_NEAR(dot<double>(distill_loss_grad<double>(v, t), v), 0.0, 1e-10);
    }
}

TEST(DistillGrad, MatchesCentralDifferences) {
    SplitMix64 rng(7);
    for (int c = 0; c < 100; ++c) {
        const auto v = random_vec(rng, 5), t = random_vec(rng, 5);
        const auto g = distill_loss_grad<double>(v, t);
        for (std::size_t i = 0; i < v.size(); ++i) {
            auto vp = v, vm = v;
            vp[i] += 1e-6;
            vm[i] -= 1e-6;
            const double fd = (cosine_distance<double>(vp, t) - cosine_distance<double>(vm, t)) / 2e-6;
            EXPECT_LE(std::abs(fd - g[i]), 1e-5 * std::max(std::abs(g[i]), 1e-3)) << c << "," << i;
        }
    }
}

TEST(FitProjection, ZeroLossWhenTargetsAlreadyMatch) {
    const Matrix<double> h(2, 2, std::vector<double>{1, 2, -1, 0.5});
    const Matrix<double> w(2, 3, std::vector<double>{1, 0, 2, 0, 1, -1});
    const auto res = fit_projection(h, matmul(h, w), w, 3, 0.1);
    EXPECT_NEAR(res.loss_history.front(), 0.0, 1e-15);
}

TEST(FitProjection, TwoDimFixtureStrictlyDecreases) {
    const Matrix<double> h(1, 2, std::vector<double>{1.0, 0.5});
    const Matrix<double> t(1, 2, std::vector<double>{-0.3, 1.0});
    const auto res = fit_projection(h, t, Matrix<double>::identity(2), 100, 0.1);
    ASSERT_EQ(res.loss_history.size(), 101u);
    for (std::size_t i = 1; i < res.loss_history.size(); ++i) EXPECT_LT(res.loss_history[i], res.loss_history[i - 1]) << i;
    EXPECT_FALSE(res.diverged);
}

TEST(FitProjection, TargetScaleLeavesTrajectoryUnchanged) {
    SplitMix64 rng(8);
    Matrix<double> h(4, 3), t(4, 2), w(3, 2);
    for (double& x : h.values()) x = rng.uniform(-1, 1);
    for (double& x : t.values()) x = rng.uniform(-1, 1);
    for (double& x : w.values()) x = rng.uniform(-1, 1);
    Matrix<double> t3 = t;
    for (double& x : t3.values()) x *= 3.0;
    const auto a = fit_projection(h, t, w, 20, 0.05), b = fit_projection(h, t3, w, 20, 0.05);
    for (std::size_t i = 0; i < a.loss_history.size(); ++i) EXPECT_NEAR(a.loss_history[i], b.loss_history[i], 1e-12);
    EXPECT_LE(max_abs_diff<double>(a.weight.values(), b.weight.values()), 1e-12);
}

TEST(FitProjection, DivergenceIsReportedNotFatal) {
    const Matrix<double> h(1, 2, std::vector<double>{1.0, 0.5});
    const Matrix<double> t(1, 2, std::vector<double>{-0.3, 1.0});
    const auto res = fit_projection(h, t, Matrix<double>::identity(2), 60, 1e4);
    EXPECT_EQ(res.loss_history.size(), 61u);
    for (double l : res.loss_history) EXPECT_TRUE(std::isfinite(l));
}

TEST(FitProjection, ShapeErrors) {
    const Matrix<double> h(2, 2), t(3, 2);
    EXPECT_THROW(fit_projection(h, t, Matrix<double>::identity(2), 1, 0.1), DimensionError);
    EXPECT_THROW(fit_projection(h, Matrix<double>(2, 2), Matrix<double>(3, 2), 1, 0.1), DimensionError);
}

} // namespace
} // namespace wavit
