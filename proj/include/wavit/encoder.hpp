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

// Pre-norm transformer encoder with a block-causal cross-level mask.
//
// A query introduced with group s may attend to every key of groups <= s,
// bidirectionally inside its own group. Keys and values are cached per
// block after projection, so a refinement step computes queries, keys and
// values for the new tokens only and attends over cache || new.
//
// Both the incremental path (forward_step) and the one-shot masked path
// (encode_full_masked) go through run_blocks below, and every reduction is
// sequential in index order, so a query sees exactly the same operands in
// the same order on either path.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wavit/error.hpp"
#include "wavit/numerics.hpp"
#include "wavit/params.hpp"
#include "wavit/tokenizer.hpp"
#include "wavit/wavelet.hpp"

namespace wavit {

constexpr bool attention_allowed(int query_group, int key_group) noexcept {
    return key_group <= query_group;
}

/// Post-projection keys and values of every processed token, per block.
template <Real T>
struct KVCache {
    std::vector<Matrix<T>> keys;    // one n_cached x dim matrix per block
    std::vector<Matrix<T>> values;
    std::vector<int> group_ids;

    KVCache() = default;
    KVCache(int blocks, int dim)
        : keys(static_cast<std::size_t>(blocks), Matrix<T>(0, static_cast<std::size_t>(dim))),
          values(static_cast<std::size_t>(blocks), Matrix<T>(0, static_cast<std::size_t>(dim))) {}

    std::size_t size() const noexcept { return group_ids.size(); }
    int last_group() const noexcept { return group_ids.empty() ? -1 : group_ids.back(); }
};

template <Real T>
struct StepOutput {
    Matrix<T> hidden;        // final residual stream of the new tokens
    std::vector<T> readout;  // head(final_norm(hidden[readout_row]))
};

template <Real T>
struct FullOutput {
    Matrix<T> hidden;
    std::vector<std::vector<T>> readouts;  // one per group
};

namespace detail {

/// Per-head attention probabilities (nq x nk each) of `q` over `k` under
/// the level mask; rows tagged by group ids.
template <Real T>
std::vector<Matrix<T>> attention_weights(const Matrix<T>& q, const std::vector<int>& q_groups, const Matrix<T>& k,
                                         const std::vector<int>& k_groups, int heads) {
    const std::size_t nq = q.rows(), nk = k.rows(), d = q.cols();
    const std::size_t hd = d / static_cast<std::size_t>(heads);
    const T scale = T(1) / std::sqrt(static_cast<T>(hd));
    std::vector<Matrix<T>> weights(static_cast<std::size_t>(heads), Matrix<T>(nq, nk));
    std::vector<T> logits(nk);
    const auto allowed = std::make_unique<bool[]>(nk);
    const std::span<const bool> mask(allowed.get(), nk);
    for (std::size_t i = 0; i < nq; ++i) {
        for (std::size_t j = 0; j < nk; ++j) allowed[j] = attention_allowed(q_groups[i], k_groups[j]);
        for (std::size_t h = 0; h < weights.size(); ++h) {
            const std::size_t off = h * hd;
            for (std::size_t j = 0; j < nk; ++j) {
                if (!allowed[j]) {
                    logits[j] = T(0);
                    continue;
                }
                T acc = T(0);
                for (std::size_t c = 0; c < hd; ++c) acc += q(i, off + c) * k(j, off + c);
                logits[j] = acc * scale;
            }
            const std::vector<T> probs = softmax_row<T>(logits, mask);
            std::copy(probs.begin(), probs.end(), weights[h].row(i).begin());
        }
    }
    return weights;
}

/// Multi-head attention output; masked keys are skipped, not multiplied by 0.
template <Real T>
Matrix<T> masked_attention(const Matrix<T>& q, const std::vector<int>& q_groups, const Matrix<T>& k,
                           const Matrix<T>& v, const std::vector<int>& k_groups, int heads) {
    const auto weights = attention_weights(q, q_groups, k, k_groups, heads);
    const std::size_t nq = q.rows(), nk = k.rows(), d = q.cols();
    const std::size_t hd = d / static_cast<std::size_t>(heads);
    Matrix<T> out(nq, d);
    for (std::size_t i = 0; i < nq; ++i) {
        for (std::size_t h = 0; h < weights.size(); ++h) {
            const std::size_t off = h * hd;
            for (std::size_t c = 0; c < hd; ++c) {
                T acc = T(0);
                for (std::size_t j = 0; j < nk; ++j) {
                    if (attention_allowed(q_groups[i], k_groups[j])) acc += weights[h](i, j) * v(j, off + c);
                }
                out(i, off + c) = acc;
            }
        }
    }
    return out;
}

template <Real T>
std::vector<T> readout_projection(std::span<const T> hidden_row, const ModelParams<T>& params) {
    const auto normed = layernorm<T>(hidden_row, params.final_gain, params.final_bias);
    Matrix<T> row(1, normed.size(), normed);
    const Matrix<T> out = matmul(row, params.head);
    return {out.values().begin(), out.values().end()};
}

/// Runs every block on `x`, appending its keys/values to `cache`.
template <Real T>
Matrix<T> run_blocks(Matrix<T> x, const std::vector<int>& x_groups, KVCache<T>& cache,
                     const ModelParams<T>& params) {
    const auto& cfg = params.config;
    if (x.cols() != static_cast<std::size_t>(cfg.dim) || x.rows() != x_groups.size()) {
        throw DimensionError("encoder: token matrix is " + std::to_string(x.rows()) + "x" +
                             std::to_string(x.cols()) + ", expected " + std::to_string(x_groups.size()) +
                             "x" + std::to_string(cfg.dim));
    }
    if (cache.keys.size() != params.blocks.size() || cache.values.size() != params.blocks.size()) {
        throw DimensionError("encoder: cache has " + std::to_string(cache.keys.size()) +
                             " blocks, model has " + std::to_string(params.blocks.size()));
    }
    std::vector<int> k_groups = cache.group_ids;
    k_groups.insert(k_groups.end(), x_groups.begin(), x_groups.end());

    for (std::size_t b = 0; b < params.blocks.size(); ++b) {
        const auto& blk = params.blocks[b];
        const Matrix<T> h = layernorm_rows<T>(x, blk.ln1_gain, blk.ln1_bias);
        const Matrix<T> q = linear<T>(h, blk.wq, blk.bq);
        cache.keys[b].append_rows(linear<T>(h, blk.wk, blk.bk));
        cache.values[b].append_rows(linear<T>(h, blk.wv, blk.bv));
        const Matrix<T> attn = masked_attention(q, x_groups, cache.keys[b], cache.values[b], k_groups, cfg.heads);
        const Matrix<T> proj = linear<T>(attn, blk.wo, blk.bo);
        for (std::size_t i = 0; i < x.size(); ++i) x.values()[i] += proj.values()[i];

        const Matrix<T> h2 = layernorm_rows<T>(x, blk.ln2_gain, blk.ln2_bias);
        Matrix<T> mid = linear<T>(h2, blk.fc1, blk.fc1_bias);
        for (T& m : mid.values()) m = gelu(m);
        const Matrix<T> mlp = linear<T>(mid, blk.fc2, blk.fc2_bias);
        for (std::size_t i = 0; i < x.size(); ++i) x.values()[i] += mlp.values()[i];
    }
    cache.group_ids = std::move(k_groups);
    return x;
}

} // namespace detail

/// One refinement step: `tokens` all belong to group `group`, every cached
/// token belongs to a group <= `group`. Extends `cache` with the new keys
/// and values and returns the readout taken at `readout_row` of the new
/// tokens.
template <Real T>
StepOutput<T> forward_step(const Matrix<T>& tokens, int group, std::size_t readout_row, KVCache<T>& cache,
                           const ModelParams<T>& params) {
    if (cache.last_group() > group) {
        throw SequencingError("forward_step: group " + std::to_string(group) +
                              " arrives after cached group " + std::to_string(cache.last_group()));
    }
    if (readout_row >= tokens.rows()) throw RangeError("forward_step: readout row out of range");
    const std::vector<int> groups(tokens.rows(), group);
    StepOutput<T> out;
    out.hidden = detail::run_blocks(tokens, groups, cache, params);
    out.readout = detail::readout_projection<T>(out.hidden.row(readout_row), params);
    return out;
}

/// Whole sequence in one pass under the full level mask.
template <Real T>
FullOutput<T> encode_full_masked(const TokenSequence<T>& seq, const TokenPlan& plan, const ModelParams<T>& params) {
    for (std::size_t i = 1; i < seq.group_ids.size(); ++i) {
        if (seq.group_ids[i] < seq.group_ids[i - 1]) {
            throw SequencingError("encode_full_masked: group ids must be non-decreasing");
        }
    }
    KVCache<T> cache(params.config.blocks, params.config.dim);
    FullOutput<T> out;
    out.hidden = detail::run_blocks(seq.embeddings, seq.group_ids, cache, params);
    for (int s = 0; s <= plan.levels; ++s) {
        const std::size_t off = plan.group_offset(s);
        if (off >= out.hidden.rows()) break;
        const std::size_t row = off + plan.groups[static_cast<std::size_t>(s)].readout_index;
        out.readouts.push_back(detail::readout_projection<T>(out.hidden.row(row), params));
    }
    return out;
}

/// Coarse-to-fine driver over one image; owns the image's KV cache.
template <Real T>
class ProgressiveEncoder {
public:
    ProgressiveEncoder(const SubbandPyramid<T>& pyramid, const TokenPlan& plan, const ModelParams<T>& params)
        : pyramid_(pyramid), plan_(plan), params_(params), cache_(params.config.blocks, params.config.dim) {
        detail::require_plan_matches(pyramid, plan, params.config);
    }

    /// Next group index to be processed.
    int next_group() const noexcept { return next_; }
    bool done() const noexcept { return next_ > plan_.levels; }

    /// Embeds and encodes the next group; returns its readout.
    const StepOutput<T>& step() {
        if (done()) throw SequencingError("ProgressiveEncoder: all groups already processed");
        const Matrix<T> tokens = embed_group(pyramid_, plan_, params_, next_);
        const auto& g = plan_.groups[static_cast<std::size_t>(next_)];
        last_ = forward_step(tokens, next_, g.readout_index, cache_, params_);
        ++next_;
        return last_;
    }

    const KVCache<T>& cache() const noexcept { return cache_; }
    KVCache<T> release_cache() && { return std::move(cache_); }

private:
    const SubbandPyramid<T>& pyramid_;
    const TokenPlan& plan_;
    const ModelParams<T>& params_;
    KVCache<T> cache_;
    StepOutput<T> last_;
    int next_ = 0;
};

template <Real T>
struct ProgressiveOutput {
    std::vector<std::vector<T>> readouts;
    Matrix<T> hidden;  // final hidden states of every processed token
    KVCache<T> cache;
};

template <Real T>
ProgressiveOutput<T> encode_progressive(const SubbandPyramid<T>& pyramid, const TokenPlan& plan,
                                        const ModelParams<T>& params, int upto) {
    if (upto < 0 || upto > plan.levels) {
        throw RangeError("encode_progressive: upto " + std::to_string(upto) + " outside [0, " +
                         std::to_string(plan.levels) + "]");
    }
    ProgressiveEncoder<T> enc(pyramid, plan, params);
    ProgressiveOutput<T> out;
    out.hidden = Matrix<T>(0, static_cast<std::size_t>(params.config.dim));
    for (int s = 0; s <= upto; ++s) {
        const auto& step = enc.step();
        out.readouts.push_back(step.readout);
        out.hidden.append_rows(step.hidden);
    }
    out.cache = std::move(enc).release_cache();
    return out;
}

} // namespace wavit
