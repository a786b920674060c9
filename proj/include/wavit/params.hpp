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

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "wavit/error.hpp"
#include "wavit/numerics.hpp"

namespace wavit {

/// Token kinds; the first four index the per-kind projection tables.
enum class SubbandKind : int { LL = 0, LH = 1, HL = 2, HH = 3, Readout = 4 };

inline const char* to_string(SubbandKind k) {
    switch (k) {
        case SubbandKind::LL: return "LL";
        case SubbandKind::LH: return "LH";
        case SubbandKind::HL: return "HL";
        case SubbandKind::HH: return "HH";
        case SubbandKind::Readout: return "READOUT";
    }
    return "?";
}

struct ModelConfig {
    int dim = 32;
    int blocks = 2;
    int heads = 4;
    int mlp_ratio = 4;
    int patch = 8;
    int levels = 2;
    int d_out = 16;

    int head_dim() const { return dim / heads; }
    int hidden() const { return dim * mlp_ratio; }
    int patch_len() const { return 3 * patch * patch; }
    int groups() const { return levels + 1; }

    void validate() const {
        if (dim <= 0 || blocks <= 0 || heads <= 0 || mlp_ratio <= 0 || patch <= 0 || levels < 1 ||
            d_out <= 0) {
            throw ConfigError("model config: all sizes must be positive and levels >= 1");
        }
        if (dim % heads != 0) {
            throw ConfigError("model config: dim " + std::to_string(dim) +
                              " is not divisible by heads " + std::to_string(heads));
        }
        if (dim % 4 != 0) {
            throw ConfigError("model config: dim must be a multiple of 4 for 2D sinusoidal positions");
        }
    }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <Real T>
struct BlockParams {
    std::vector<T> ln1_gain, ln1_bias;
    Matrix<T> wq, wk, wv, wo;  // dim x dim
    std::vector<T> bq, bk, bv, bo;
    std::vector<T> ln2_gain, ln2_bias;
    Matrix<T> fc1;  // dim x hidden
    std::vector<T> fc1_bias;
    Matrix<T> fc2;  // hidden x dim
    std::vector<T> fc2_bias;

    friend bool operator==(const BlockParams&, const BlockParams&) = default;
};

/// Every encoder weight. Built once (loaded or generated), then shared as const.
template <Real T>
struct ModelParams {
    ModelConfig config;
    std::array<Matrix<T>, 4> patch_proj;  // per kind, patch_len x dim
    std::array<std::vector<T>, 4> patch_bias;
    Matrix<T> level_embed;    // groups x dim, indexed by group id
    Matrix<T> kind_embed;     // 4 x dim
    Matrix<T> readout_embed;  // groups x dim
    std::vector<BlockParams<T>> blocks;
    std::vector<T> final_gain, final_bias;
    Matrix<T> head;  // dim x d_out

    /// Zero-filled parameters with unit norm gains.
    static ModelParams zeros(const ModelConfig& cfg) {
        cfg.validate();
        const auto d = static_cast<std::size_t>(cfg.dim);
        const auto hid = static_cast<std::size_t>(cfg.hidden());
        const auto groups = static_cast<std::size_t>(cfg.groups());
        ModelParams p;
        p.config = cfg;
        for (std::size_t k = 0; k < 4; ++k) {
            p.patch_proj[k] = Matrix<T>(static_cast<std::size_t>(cfg.patch_len()), d);
            p.patch_bias[k].assign(d, T(0));
        }
        p.level_embed = Matrix<T>(groups, d);
        p.kind_embed = Matrix<T>(4, d);
        p.readout_embed = Matrix<T>(groups, d);
        p.blocks.resize(static_cast<std::size_t>(cfg.blocks));
        for (auto& b : p.blocks) {
            b.ln1_gain.assign(d, T(1));
            b.ln1_bias.assign(d, T(0));
            b.ln2_gain.assign(d, T(1));
            b.ln2_bias.assign(d, T(0));
            b.wq = b.wk = b.wv = b.wo = Matrix<T>(d, d);
            b.bq.assign(d, T(0));
            b.bk.assign(d, T(0));
            b.bv.assign(d, T(0));
            b.bo.assign(d, T(0));
            b.fc1 = Matrix<T>(d, hid);
            b.fc1_bias.assign(hid, T(0));
            b.fc2 = Matrix<T>(hid, d);
            b.fc2_bias.assign(d, T(0));
        }
        p.final_gain.assign(d, T(1));
        p.final_bias.assign(d, T(0));
        p.head = Matrix<T>(d, static_cast<std::size_t>(cfg.d_out));
        return p;
    }

    /// Checks every tensor shape against `config`.
    void validate() const;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Shape of a named tensor: {n} for vectors, {rows, cols} for matrices.
using TensorShape = std::vector<std::size_t>;

/// Calls `fn(name, shape, values)` for every tensor of `p` in a fixed order.
/// `values` is a mutable span when `p` is non-const.
template <typename Params, typename Fn>
    requires std::is_same_v<std::remove_const_t<Params>, ModelParams<float>> ||
             std::is_same_v<std::remove_const_t<Params>, ModelParams<double>>
void visit_tensors(Params& p, Fn&& fn) {
    auto mat = [&](const std::string& name, auto& m) { fn(name, TensorShape{m.rows(), m.cols()}, m.values()); };
    auto vec = [&](const std::string& name, auto& v) {
        fn(name, TensorShape{v.size()}, std::span(v.data(), v.size()));
    };
    static constexpr std::array<const char*, 4> kinds{"ll", "lh", "hl", "hh"};
    for (std::size_t k = 0; k < 4; ++k) {
        mat(std::string("embed.proj.") + kinds[k] + ".weight", p.patch_proj[k]);
        vec(std::string("embed.proj.") + kinds[k] + ".bias", p.patch_bias[k]);
    }
    mat("embed.level", p.level_embed);
    mat("embed.kind", p.kind_embed);
    mat("embed.readout", p.readout_embed);
    for (std::size_t i = 0; i < p.blocks.size(); ++i) {
        auto& b = p.blocks[i];
        const std::string pre = "blocks." + std::to_string(i) + ".";
        vec(pre + "ln1.gain", b.ln1_gain);
        vec(pre + "ln1.bias", b.ln1_bias);
        mat(pre + "attn.q.weight", b.wq);
        vec(pre + "attn.q.bias", b.bq);
        mat(pre + "attn.k.weight", b.wk);
        vec(pre + "attn.k.bias", b.bk);
        mat(pre + "attn.v.weight", b.wv);
        vec(pre + "attn.v.bias", b.bv);
        mat(pre + "attn.o.weight", b.wo);
        vec(pre + "attn.o.bias", b.bo);
        vec(pre + "ln2.gain", b.ln2_gain);
        vec(pre + "ln2.bias", b.ln2_bias);
        mat(pre + "mlp.fc1.weight", b.fc1);
        vec(pre + "mlp.fc1.bias", b.fc1_bias);
        mat(pre + "mlp.fc2.weight", b.fc2);
        vec(pre + "mlp.fc2.bias", b.fc2_bias);
    }
    vec("final_ln.gain", p.final_gain);
    vec("final_ln.bias", p.final_bias);
    mat("head.weight", p.head);
}

template <Real T>
void ModelParams<T>::validate() const {
    config.validate();
    if (blocks.size() != static_cast<std::size_t>(config.blocks)) {
        throw DimensionError("model params: expected " + std::to_string(config.blocks) +
                             " blocks, found " + std::to_string(blocks.size()));
    }
    const ModelParams<T> ref = zeros(config);
    std::vector<std::pair<std::string, TensorShape>> expected;
    visit_tensors(ref, [&](const std::string& name, const TensorShape& shape, auto) {
        expected.emplace_back(name, shape);
    });
    std::size_t i = 0;
    visit_tensors(*this, [&](const std::string& name, const TensorShape& shape, auto values) {
        const auto& [ename, eshape] = expected[i++];
        std::size_t count = 1;
        for (auto s : shape) count *= s;
        if (shape != eshape || values.size() != count) {
            throw DimensionError("model params: tensor '" + name + "' has inconsistent shape");
        }
        (void)ename;
    });
}

} // namespace wavit
