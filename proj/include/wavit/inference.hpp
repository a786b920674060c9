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

// Zero-shot scoring, exit gates and the coarse-to-fine classification loop.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "wavit/encoder.hpp"
#include "wavit/error.hpp"
#include "wavit/flops.hpp"
#include "wavit/numerics.hpp"
#include "wavit/tokenizer.hpp"
#include "wavit/wavelet.hpp"

namespace wavit {

/// Class text embeddings, unit-normalized on construction.
template <Real T>
class EmbeddingBank {
public:
    EmbeddingBank() = default;
    EmbeddingBank(Matrix<T> rows, std::vector<std::string> labels, double temperature)
        : rows_(std::move(rows)), labels_(std::move(labels)), temperature_(temperature) {
        if (rows_.rows() < 2) throw ConfigError("embedding bank: need at least 2 classes");
        if (!labels_.empty() && labels_.size() != rows_.rows()) {
            throw DimensionError("embedding bank: " + std::to_string(labels_.size()) + " labels for " +
                                 std::to_string(rows_.rows()) + " rows");
        }
        if (labels_.empty())
            for (std::size_t m = 0; m < rows_.rows(); ++m) labels_.push_back("class_" + std::to_string(m));
        if (!(temperature_ > 0.0) || !std::isfinite(temperature_)) {
            throw ConfigError("embedding bank: temperature must be positive and finite");
        }
        // Rows already unit-norm to within rounding are kept verbatim, so a
        // saved bank reloads bit-identically.
        const double keep_tol = 8.0 * static_cast<double>(std::numeric_limits<T>::epsilon());
        for (std::size_t m = 0; m < rows_.rows(); ++m) {
            const double n = static_cast<double>(l2_norm<T>(rows_.row(m)));
            if (std::abs(n - 1.0) > 1e-5) renormalized_ = true;
            if (std::abs(n - 1.0) <= keep_tol) continue;
            const auto unit = normalized<T>(rows_.row(m));
            std::copy(unit.begin(), unit.end(), rows_.row(m).begin());
        }
    }

    std::size_t classes() const noexcept { return rows_.rows(); }
    std::size_t dim() const noexcept { return rows_.cols(); }
    const Matrix<T>& rows() const noexcept { return rows_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    double temperature() const noexcept { return temperature_; }
    /// True when some row was not unit-norm (beyond 1e-5) before normalization.
    bool renormalized() const noexcept { return renormalized_; }

private:
    Matrix<T> rows_;
    std::vector<std::string> labels_;
    double temperature_ = 100.0;
    bool renormalized_ = false;
};

enum class GateKind { Margin, Prob };
enum class ThresholdMode { Absolute, PerClass };
enum class ScoreSpace { Similarity, Probability };

struct GateConfig {
    GateKind kind = GateKind::Margin;
    double threshold = 0.0;
    ThresholdMode mode = ThresholdMode::Absolute;
    double per_class_factor = 0.0;  // p in theta_eff = p * M
    ScoreSpace space = ScoreSpace::Probability;  // margin gate only

    double effective_threshold(std::size_t classes) const {
        const double t = mode == ThresholdMode::PerClass ? per_class_factor * static_cast<double>(classes) : threshold;
        if (!(t >= 0.0)) throw ConfigError("gate: threshold must be >= 0");
        return t;
    }
};

/// Cosine similarity of `v` against every bank row.
template <Real T>
std::vector<T> score(std::span<const T> v, const EmbeddingBank<T>& bank) {
    if (v.size() != bank.dim()) {
        throw DimensionError("score: readout has " + std::to_string(v.size()) + " dims, bank has " +
                             std::to_string(bank.dim()));
    }
    const std::vector<T> unit = normalized<T>(v);
    std::vector<T> out(bank.classes());
    for (std::size_t m = 0; m < bank.classes(); ++m) out[m] = dot<T>(unit, bank.rows().row(m));
    return out;
}

/// softmax(temperature * similarities).
template <Real T>
std::vector<T> class_probabilities(std::span<const T> sims, double temperature) {
    std::vector<T> logits(sims.begin(), sims.end());
    for (T& l : logits) l *= static_cast<T>(temperature);
    return softmax_row<T>(logits);
}

/// Index of the largest score; lowest index wins ties.
template <Real T>
std::size_t argmax(std::span<const T> scores) {
    if (scores.empty()) throw RangeError("argmax: empty scores");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return best;
}

template <Real T>
std::pair<T, T> top_two(std::span<const T> scores) {
    if (scores.size() < 2) throw RangeError("top_two: need at least two scores");
    T first = -std::numeric_limits<T>::infinity(), second = first;
    for (T s : scores) {
        if (s > first) {
            second = first;
            first = s;
        } else if (s > second) {
            second = s;
        }
    }
    return {first, second};
}

template <Real T>
bool margin_exit(std::span<const T> scores, double threshold) {
    const auto [first, second] = top_two(scores);
    return static_cast<double>(first - second) >= threshold;
}

template <Real T>
bool prob_exit(std::span<const T> probs, double threshold) {
    if (probs.empty()) throw RangeError("prob_exit: empty probabilities");
    return static_cast<double>(*std::max_element(probs.begin(), probs.end())) > threshold;
}

struct ClassScore {
    std::size_t index = 0;
    double similarity = 0.0;
    double probability = 0.0;
};

struct LevelRecord {
    int level = 0;
    std::vector<ClassScore> top;  // best first, at most kTraceTopK entries
    double margin = 0.0;          // in the gate's score space
    double max_prob = 0.0;
    std::size_t predicted = 0;
    bool exit = false;
};

inline constexpr std::size_t kTraceTopK = 5;

struct InferenceTrace {
    std::vector<LevelRecord> levels;
    int exit_level = 0;
    std::size_t predicted = 0;
    std::string predicted_label;
    std::size_t tokens = 0;
    Macs macs_cached = 0;
    Macs macs_naive = 0;
};

/// Scores one readout and applies the gate. `last` forces an exit.
template <Real T>
LevelRecord evaluate_level(std::span<const T> readout, int level, bool last, const EmbeddingBank<T>& bank,
                           const GateConfig& gate) {
    const std::vector<T> sims = score<T>(readout, bank);
    const std::vector<T> probs = class_probabilities<T>(sims, bank.temperature());
    const double theta = gate.effective_threshold(bank.classes());

    LevelRecord rec;
    rec.level = level;
    rec.predicted = argmax<T>(sims);
    rec.max_prob = static_cast<double>(*std::max_element(probs.begin(), probs.end()));
    if (gate.kind == GateKind::Margin) {
        const auto& space = gate.space == ScoreSpace::Probability ? probs : sims;
        const auto [a, b] = top_two<T>(space);
        rec.margin = static_cast<double>(a - b);
        rec.exit = margin_exit<T>(space, theta);
    } else {
        const auto [a, b] = top_two<T>(probs);
        rec.margin = static_cast<double>(a - b);
        rec.exit = prob_exit<T>(probs, theta);
    }
    rec.exit = rec.exit || last;

    std::vector<std::size_t> order(sims.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sims[x] > sims[y]; });
    for (std::size_t i = 0; i < std::min(kTraceTopK, order.size()); ++i) {
        rec.top.push_back({order[i], static_cast<double>(sims[order[i]]), static_cast<double>(probs[order[i]])});
    }
    return rec;
}

inline CostConfig cost_config_for(const ModelConfig& cfg) {
    CostConfig c;
    c.dim = static_cast<std::uint64_t>(cfg.dim);
    c.blocks = static_cast<std::uint64_t>(cfg.blocks);
    c.mlp_ratio = static_cast<std::uint64_t>(cfg.mlp_ratio);
    c.patch = static_cast<std::uint64_t>(cfg.patch);
    c.d_out = static_cast<std::uint64_t>(cfg.d_out);
    c.heads = static_cast<std::uint64_t>(cfg.heads);
    return c;
}

namespace detail {

template <Real T>
void finish_trace(InferenceTrace& trace, const TokenPlan& plan, const ModelConfig& cfg, const EmbeddingBank<T>& bank) {
    const LevelRecord& last = trace.levels.back();
    trace.exit_level = last.level;
    trace.predicted = last.predicted;
    trace.predicted_label = bank.labels()[last.predicted];
    trace.tokens = plan.cumulative_tokens(trace.exit_level);
    const CostReport cost = progressive_cost(plan, trace.exit_level, cost_config_for(cfg));
    trace.macs_cached = cost.cached_total();
    trace.macs_naive = cost.naive_total();
}

template <Real T>
void require_bank_matches(const ModelParams<T>& params, const EmbeddingBank<T>& bank) {
    if (bank.dim() != static_cast<std::size_t>(params.config.d_out)) {
        throw DimensionError("bank dim " + std::to_string(bank.dim()) + " does not match model d_out " +
                             std::to_string(params.config.d_out));
    }
}

} // namespace detail

/// Coarse-to-fine loop: encode a group, score, exit if the gate fires,
/// otherwise append the next group reusing the cache. The last level
/// always returns.
template <Real T>
InferenceTrace classify_progressive(const SubbandPyramid<T>& pyramid, const ModelParams<T>& params,
                                    const EmbeddingBank<T>& bank, const GateConfig& gate, const TokenPlan& plan) {
    detail::require_bank_matches(params, bank);
    gate.effective_threshold(bank.classes());
    ProgressiveEncoder<T> enc(pyramid, plan, params);
    InferenceTrace trace;
    while (!enc.done()) {
        const int level = enc.next_group();
        const auto& step = enc.step();
        trace.levels.push_back(evaluate_level<T>(step.readout, level, level == plan.levels, bank, gate));
        if (trace.levels.back().exit) break;
    }
    detail::finish_trace(trace, plan, params.config, bank);
    return trace;
}

template <Real T>
InferenceTrace classify_progressive(const RgbImage<T>& image, const ModelParams<T>& params,
                                    const EmbeddingBank<T>& bank, const GateConfig& gate, const TokenPlan& plan) {
    const auto pyramid = decompose(rgb_to_ycbcr(image), plan.levels);
    return classify_progressive(pyramid, params, bank, gate, plan);
}

/// Replays the gate over precomputed readouts v^[0..L]; identical decisions
/// to classify_progressive because v^[s] never depends on later groups.
template <Real T>
InferenceTrace gate_readouts(const std::vector<std::vector<T>>& readouts, const ModelParams<T>& params,
                             const EmbeddingBank<T>& bank, const GateConfig& gate, const TokenPlan& plan) {
    if (readouts.size() != static_cast<std::size_t>(plan.levels + 1)) {
        throw RangeError("gate_readouts: need one readout per level");
    }
    InferenceTrace trace;
    for (int s = 0; s <= plan.levels; ++s) {
        trace.levels.push_back(evaluate_level<T>(readouts[static_cast<std::size_t>(s)], s, s == plan.levels, bank, gate));
        if (trace.levels.back().exit) break;
    }
    detail::finish_trace(trace, plan, params.config, bank);
    return trace;
}

struct SweepRow {
    double theta = 0.0;
    double mean_tokens = 0.0;
    double mean_macs_cached = 0.0;
    double mean_macs_naive = 0.0;
    double agreement = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    /// exit_levels[t][i]: exit level of image i at threshold t.
    std::vector<std::vector<int>> exit_levels;
};

/// Threshold sweep. Agreement is measured against `labels` when given,
/// otherwise against each image's full-token (level L) prediction.
/// `thetas` are interpreted as the gate's absolute threshold, or as the
/// per-class factor p when the template gate is in per-class mode.
template <Real T>
SweepResult sweep(const std::vector<SubbandPyramid<T>>& images, const ModelParams<T>& params,
                  const EmbeddingBank<T>& bank, const GateConfig& gate_template, const std::vector<double>& thetas,
                  const TokenPlan& plan, const std::optional<std::vector<std::size_t>>& labels = std::nullopt) {
    if (images.empty()) throw RangeError("sweep: empty image set");
    if (labels && labels->size() != images.size()) throw DimensionError("sweep: one label per image required");
    detail::require_bank_matches(params, bank);

    std::vector<std::vector<std::vector<T>>> readouts;
    readouts.reserve(images.size());
    for (const auto& img : images) readouts.push_back(encode_progressive(img, plan, params, plan.levels).readouts);

    std::vector<std::size_t> reference(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (labels) {
            reference[i] = (*labels)[i];
        } else {
            const auto sims = score<T>(readouts[i].back(), bank);
            reference[i] = argmax<T>(sims);
        }
    }

    SweepResult result;
    const double n = static_cast<double>(images.size());
    for (double theta : thetas) {
        GateConfig gate = gate_template;
        if (gate.mode == ThresholdMode::PerClass) gate.per_class_factor = theta;
        else gate.threshold = theta;

        SweepRow row;
        row.theta = theta;
        std::vector<int> exits;
        double tokens = 0.0, cached = 0.0, naive = 0.0, agree = 0.0;
        for (std::size_t i = 0; i < images.size(); ++i) {
            const InferenceTrace tr = gate_readouts(readouts[i], params, bank, gate, plan);
            exits.push_back(tr.exit_level);
            tokens += static_cast<double>(tr.tokens);
            cached += static_cast<double>(tr.macs_cached);
            naive += static_cast<double>(tr.macs_naive);
            agree += tr.predicted == reference[i] ? 1.0 : 0.0;
        }
        row.mean_tokens = tokens / n;
        row.mean_macs_cached = cached / n;
        row.mean_macs_naive = naive / n;
        row.agreement = agree / n;
        result.rows.push_back(row);
        result.exit_levels.push_back(std::move(exits));
    }
    return result;
}

} // namespace wavit
