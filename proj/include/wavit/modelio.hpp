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

// File formats: a JSON manifest plus one little-endian binary blob for
// tensors (model parameters, embedding banks, image planes), and binary
// PPM (P6) images. See docs/formats.md for the byte layout.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "wavit/error.hpp"
#include "wavit/inference.hpp"
#include "wavit/numerics.hpp"
#include "wavit/params.hpp"
#include "wavit/wavelet.hpp"

namespace wavit {

inline constexpr int kFormatVersion = 1;

enum class DType { F32, F64 };

inline const char* to_string(DType d) { return d == DType::F32 ? "f32" : "f64"; }
inline std::size_t dtype_size(DType d) { return d == DType::F32 ? 4 : 8; }

inline DType parse_dtype(const std::string& s) {
    if (s == "f32") return DType::F32;
    if (s == "f64") return DType::F64;
    throw FormatError("unknown dtype '" + s + "'");
}

template <Real T>
constexpr DType dtype_of() {
    return std::is_same_v<T, float> ? DType::F32 : DType::F64;
}

struct TensorRecord {
    std::string name;
    TensorShape shape;
    std::vector<unsigned char> bytes;  // little-endian

    std::size_t elements() const {
        std::size_t n = 1;
        for (auto s : shape) n *= s;
        return n;
    }
};

namespace detail {

template <typename U>
void store_le(U value, unsigned char* out) {
    unsigned char raw[sizeof(U)];
    std::memcpy(raw, &value, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(U));
    std::memcpy(out, raw, sizeof(U));
}

template <typename U>
U load_le(const unsigned char* in) {
    unsigned char raw[sizeof(U)];
    std::memcpy(raw, in, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(U));
    U value;
    std::memcpy(&value, raw, sizeof(U));
    return value;
}

} // namespace detail

/// In-memory form of a manifest + blob pair.
struct TensorContainer {
    DType dtype = DType::F32;
    nlohmann::json metadata = nlohmann::json::object();
    std::vector<TensorRecord> tensors;

    /// Appends a tensor, converting values to the container dtype.
    template <Real T>
    void add(const std::string& name, const TensorShape& shape, std::span<const T> values) {
        TensorRecord rec{name, shape, {}};
        if (rec.elements() != values.size()) throw DimensionError("tensor '" + name + "': shape/value count mismatch");
        const std::size_t es = dtype_size(dtype);
        rec.bytes.resize(values.size() * es);
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (dtype == DType::F32) detail::store_le(static_cast<float>(values[i]), rec.bytes.data() + i * es);
            else detail::store_le(static_cast<double>(values[i]), rec.bytes.data() + i * es);
        }
        tensors.push_back(std::move(rec));
    }

    const TensorRecord* find(const std::string& name) const {
        for (const auto& t : tensors)
            if (t.name == name) return &t;
        return nullptr;
    }

    const TensorRecord& at(const std::string& name) const {
        const auto* t = find(name);
        if (!t) throw FormatError("tensor '" + name + "' not found");
        return *t;
    }

    template <Real T>
    std::vector<T> values(const TensorRecord& rec) const {
        const std::size_t es = dtype_size(dtype);
        std::vector<T> out(rec.elements());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = dtype == DType::F32 ? static_cast<T>(detail::load_le<float>(rec.bytes.data() + i * es))
                                         : static_cast<T>(detail::load_le<double>(rec.bytes.data() + i * es));
        }
        return out;
    }
};

inline std::filesystem::path blob_path_for(const std::filesystem::path& manifest) {
    auto p = manifest;
    p.replace_extension(".bin");
    return p;
}

/// Writes `<manifest>` (JSON) and its blob next to it (same stem, .bin).
inline void save_container(const TensorContainer& c, const std::filesystem::path& manifest) {
    const auto blob = blob_path_for(manifest);
    nlohmann::json j;
    j["version"] = kFormatVersion;
    j["dtype"] = to_string(c.dtype);
    j["blob"] = blob.filename().string();
    j["metadata"] = c.metadata;
    j["tensors"] = nlohmann::json::array();
    std::set<std::string> names;
    std::uint64_t offset = 0;
    for (const auto& t : c.tensors) {
        if (!names.insert(t.name).second) throw FormatError("duplicate tensor name '" + t.name + "'");
        j["tensors"].push_back({{"name", t.name}, {"shape", t.shape}, {"byte_offset", offset}, {"byte_len", t.bytes.size()}});
        offset += t.bytes.size();
    }
    if (manifest.has_parent_path()) std::filesystem::create_directories(manifest.parent_path());
    std::ofstream bout(blob, std::ios::binary | std::ios::trunc);
    if (!bout) throw FormatError("cannot write " + blob.string());
    for (const auto& t : c.tensors) bout.write(reinterpret_cast<const char*>(t.bytes.data()), static_cast<std::streamsize>(t.bytes.size()));
    if (!bout) throw FormatError("failed writing " + blob.string());
    std::ofstream mout(manifest, std::ios::trunc);
    if (!mout) throw FormatError("cannot write " + manifest.string());
    mout << j.dump(2) << '\n';
    if (!mout) throw FormatError("failed writing " + manifest.string());
}

inline TensorContainer load_container(const std::filesystem::path& manifest) {
    std::ifstream min(manifest);
    if (!min) throw FormatError("cannot open manifest " + manifest.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(min);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest " + manifest.string() + ": " + e.what());
    }
    TensorContainer c;
    std::vector<unsigned char> blob;
    try {
        if (j.at("version").get<int>() != kFormatVersion) {
            throw FormatError("manifest version " + j.at("version").dump() + " is not supported (expected " +
                              std::to_string(kFormatVersion) + ")");
        }
        c.dtype = parse_dtype(j.at("dtype").get<std::string>());
        c.metadata = j.value("metadata", nlohmann::json::object());
        const auto blob_file = manifest.parent_path() / j.at("blob").get<std::string>();
        std::ifstream bin(blob_file, std::ios::binary);
        if (!bin) throw FormatError("cannot open blob " + blob_file.string());
        blob.assign(std::istreambuf_iterator<char>(bin), std::istreambuf_iterator<char>());

        std::set<std::string> names;
        std::uint64_t expected_offset = 0;
        for (const auto& t : j.at("tensors")) {
            TensorRecord rec;
            rec.name = t.at("name").get<std::string>();
            rec.shape = t.at("shape").get<TensorShape>();
            const auto off = t.at("byte_offset").get<std::uint64_t>();
            const auto len = t.at("byte_len").get<std::uint64_t>();
            if (!names.insert(rec.name).second) throw FormatError("duplicate tensor name '" + rec.name + "'");
            if (len != rec.elements() * dtype_size(c.dtype)) {
                throw FormatError("tensor '" + rec.name + "': byte_len " + std::to_string(len) +
                                  " does not match shape and dtype (" +
                                  std::to_string(rec.elements() * dtype_size(c.dtype)) + ")");
            }
            if (off < expected_offset) {
                throw FormatError("tensor '" + rec.name + "': byte_offset " + std::to_string(off) +
                                  " overlaps the previous tensor");
            }
            if (off != expected_offset) {
                throw FormatError("tensor '" + rec.name + "': gap before byte_offset " + std::to_string(off));
            }
            if (off + len > blob.size()) {
                throw FormatError("tensor '" + rec.name + "': blob truncated (" + std::to_string(blob.size()) +
                                  " bytes, need " + std::to_string(off + len) + ")");
            }
            rec.bytes.assign(blob.begin() + static_cast<std::ptrdiff_t>(off),
                             blob.begin() + static_cast<std::ptrdiff_t>(off + len));
            expected_offset = off + len;
            c.tensors.push_back(std::move(rec));
        }
        if (expected_offset != blob.size()) {
            throw FormatError("blob has " + std::to_string(blob.size() - expected_offset) + " trailing bytes");
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest " + manifest.string() + ": " + e.what());
    }
    return c;
}

// ---------------------------------------------------------------------------
// Model parameters

template <Real T>
TensorContainer to_container(const ModelParams<T>& p) {
    TensorContainer c;
    c.dtype = dtype_of<T>();
    const auto& cfg = p.config;
    c.metadata = {{"kind", "model"}, {"d", cfg.dim},         {"B", cfg.blocks}, {"heads", cfg.heads},
                  {"mlp_ratio", cfg.mlp_ratio}, {"P", cfg.patch}, {"L", cfg.levels}, {"d_out", cfg.d_out}};
    visit_tensors(p, [&](const std::string& name, const TensorShape& shape, std::span<const T> v) {
        c.add<T>(name, shape, v);
    });
    return c;
}

inline ModelConfig model_config_from(const nlohmann::json& meta) {
    try {
        if (meta.value("kind", std::string("model")) != "model") throw FormatError("manifest is not a model");
        ModelConfig cfg{meta.at("d").get<int>(),     meta.at("B").get<int>(), meta.at("heads").get<int>(),
                        meta.at("mlp_ratio").get<int>(), meta.at("P").get<int>(), meta.at("L").get<int>(),
                        meta.at("d_out").get<int>()};
        cfg.validate();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model metadata: ") + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("model metadata: ") + e.what());
    }
}

template <Real T>
ModelParams<T> from_container(const TensorContainer& c) {
    const ModelConfig cfg = model_config_from(c.metadata);
    ModelParams<T> p = ModelParams<T>::zeros(cfg);
    std::set<std::string> expected;
    std::vector<std::string> missing;
    visit_tensors(p, [&](const std::string& name, const TensorShape& shape, std::span<T> dst) {
        expected.insert(name);
        const TensorRecord* rec = c.find(name);
        if (!rec) {
            missing.push_back(name);
            return;
        }
        if (rec->shape != shape) {
            throw FormatError("tensor '" + name + "': shape does not match metadata");
        }
        const auto v = c.values<T>(*rec);
        std::copy(v.begin(), v.end(), dst.begin());
    });
    std::vector<std::string> extra;
    for (const auto& t : c.tensors)
        if (!expected.count(t.name)) extra.push_back(t.name);
    if (!missing.empty() || !extra.empty()) {
        std::string msg = "model manifest tensor set mismatch;";
        auto join = [](const std::vector<std::string>& v) {
            std::string s;
            for (const auto& n : v) s += (s.empty() ? "" : ", ") + n;
            return s;
        };
        if (!missing.empty()) msg += " missing: " + join(missing) + ";";
        if (!extra.empty()) msg += " extra: " + join(extra) + ";";
        throw FormatError(msg);
    }
    p.validate();
    return p;
}

template <Real T>
void save_model(const ModelParams<T>& p, const std::filesystem::path& manifest) {
    save_container(to_container(p), manifest);
}

template <Real T>
ModelParams<T> load_model(const std::filesystem::path& manifest) {
    return from_container<T>(load_container(manifest));
}

// ---------------------------------------------------------------------------
// Embedding banks

inline constexpr const char* kBankTensor = "bank.embeddings";

template <Real T>
void save_bank(const EmbeddingBank<T>& bank, const std::filesystem::path& manifest) {
    TensorContainer c;
    c.dtype = dtype_of<T>();
    c.metadata = {{"kind", "bank"},
                  {"d_out", bank.dim()},
                  {"classes", bank.classes()},
                  {"temperature", bank.temperature()},
                  {"labels", bank.labels()}};
    c.add<T>(kBankTensor, {bank.classes(), bank.dim()}, bank.rows().values());
    save_container(c, manifest);
}

/// Loads and unit-normalizes a bank; check renormalized() to warn.
template <Real T>
EmbeddingBank<T> load_bank(const std::filesystem::path& manifest) {
    const TensorContainer c = load_container(manifest);
    try {
        if (c.metadata.value("kind", std::string("bank")) != "bank") throw FormatError("manifest is not a bank");
        const auto& rec = c.at(kBankTensor);
        if (c.tensors.size() != 1) throw FormatError("bank manifest must hold exactly one tensor");
        if (rec.shape.size() != 2) throw FormatError("bank tensor must be 2-D");
        if (c.metadata.contains("d_out") && c.metadata.at("d_out").get<std::size_t>() != rec.shape[1]) {
            throw FormatError("bank metadata d_out does not match tensor shape");
        }
        if (c.metadata.contains("classes") && c.metadata.at("classes").get<std::size_t>() != rec.shape[0]) {
            throw FormatError("bank metadata classes does not match tensor shape");
        }
        Matrix<T> rows(rec.shape[0], rec.shape[1], c.values<T>(rec));
        auto labels = c.metadata.value("labels", std::vector<std::string>{});
        return EmbeddingBank<T>(std::move(rows), std::move(labels), c.metadata.value("temperature", 100.0));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bank metadata: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Image planes

template <Real T>
void save_planes(const std::vector<std::pair<std::string, const ImagePlane<T>*>>& planes,
                 const std::filesystem::path& manifest, nlohmann::json metadata = nlohmann::json::object()) {
    TensorContainer c;
    c.dtype = dtype_of<T>();
    c.metadata = std::move(metadata);
    for (const auto& [name, plane] : planes) c.add<T>(name, {plane->rows(), plane->cols()}, plane->values());
    save_container(c, manifest);
}

template <Real T>
ImagePlane<T> plane_from(const TensorContainer& c, const std::string& name) {
    const auto& rec = c.at(name);
    if (rec.shape.size() != 2) throw FormatError("tensor '" + name + "' is not a 2-D plane");
    return ImagePlane<T>(rec.shape[0], rec.shape[1], c.values<T>(rec));
}

// ---------------------------------------------------------------------------
// PPM (P6, maxval 255)

template <Real T>
RgbImage<T> parse_ppm(std::span<const unsigned char> data) {
    std::size_t pos = 0;
    auto fail = [&](const std::string& what) -> FormatError {
        return FormatError("ppm: " + what + " at byte offset " + std::to_string(pos));
    };
    auto expect = [&](char ch) {
        if (pos >= data.size() || data[pos] != static_cast<unsigned char>(ch)) {
            throw fail(std::string("expected ") + (ch == '\n' ? "newline" : ch == ' ' ? "space" : std::string(1, ch)));
        }
        ++pos;
    };
    auto number = [&]() {
        const std::size_t start = pos;
        std::uint64_t v = 0;
        while (pos < data.size() && data[pos] >= '0' && data[pos] <= '9') {
            v = v * 10 + (data[pos] - '0');
            if (v > (1u << 24)) throw fail("dimension too large");
            ++pos;
        }
        if (pos == start) throw fail("expected a decimal number");
        return static_cast<std::size_t>(v);
    };
    expect('P');
    expect('6');
    expect('\n');
    const std::size_t w = number();
    expect(' ');
    const std::size_t h = number();
    expect('\n');
    const std::size_t maxval = number();
    if (maxval != 255) throw fail("maxval must be 255");
    expect('\n');
    if (w == 0 || h == 0) throw fail("zero image dimension");
    const std::size_t need = 3 * w * h;
    if (data.size() - pos < need) throw fail("pixel data truncated (need " + std::to_string(need) + " bytes)");
    if (data.size() - pos > need) {
        pos += need;
        throw fail("trailing bytes after pixel data");
    }
    RgbImage<T> img{ImagePlane<T>(h, w), ImagePlane<T>(h, w), ImagePlane<T>(h, w)};
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            const unsigned char* px = data.data() + pos + 3 * (i * w + j);
            img.r(i, j) = static_cast<T>(px[0] / 255.0);
            img.g(i, j) = static_cast<T>(px[1] / 255.0);
            img.b(i, j) = static_cast<T>(px[2] / 255.0);
        }
    }
    return img;
}

template <Real T>
RgbImage<T> load_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open image " + path.string());
    const std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return parse_ppm<T>(data);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

/// Quantizes to 8 bits (round to nearest, clamped to [0, 1]).
template <Real T>
void save_ppm(const RgbImage<T>& img, const std::filesystem::path& path) {
    const std::size_t h = img.r.rows(), w = img.r.cols();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write image " + path.string());
    out << "P6\n" << w << ' ' << h << "\n255\n";
    auto q = [](T v) {
        const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
        return static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0)));
    };
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
            const char px[3] = {q(img.r(i, j)), q(img.g(i, j)), q(img.b(i, j))};
            out.write(px, 3);
        }
    if (!out) throw FormatError("failed writing " + path.string());
}

} // namespace wavit
