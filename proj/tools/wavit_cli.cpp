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

// Command-line front end. Data goes to stdout (or the named output file),
// diagnostics to stderr. Exit codes: 0 ok, 1 invariant failure, 2 usage or
// configuration error, 3 I/O error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "wavit/wavit.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kInvariant = 1, kUsage = 2, kIo = 3 };

struct Common {
    std::string precision = "f32";
    std::uint64_t seed = 0;
};

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string fmt_theta(double v) { return std::isinf(v) ? "inf" : fmt("%.9g", v); }

double parse_theta(const std::string& s) {
    if (s == "inf" || s == "+inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw wavit::ConfigError("invalid threshold '" + s + "'");
    }
    if (used != s.size()) throw wavit::ConfigError("invalid threshold '" + s + "'");
    return v;
}

std::vector<double> parse_theta_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(parse_theta(item));
    }
    if (out.empty()) throw wavit::ConfigError("--thetas needs at least one value");
    return out;
}

/// Writes to `path`, or stdout when empty.
void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw wavit::FormatError("cannot write " + path);
    out << text;
}

template <typename Fn>
int dispatch_precision(const std::string& precision, Fn&& fn) {
    if (precision == "f32") return fn(float{});
    if (precision == "f64") return fn(double{});
    throw wavit::ConfigError("--precision must be f32 or f64");
}

// --- dwt -------------------------------------------------------------------

struct DwtArgs {
    std::string image;
    std::vector<std::size_t> hw{64, 64};
    int levels = 3;
    std::string out;
};

template <wavit::Real T>
int run_dwt(const DwtArgs& a, const Common& c) {
    const auto rgb = a.image.empty()
                         ? wavit::random_rgb_image<T>(c.seed, a.hw.at(0), a.hw.size() > 1 ? a.hw[1] : a.hw[0])
                         : wavit::load_ppm<T>(a.image);
    const auto img = wavit::rgb_to_ycbcr(rgb);
    const auto pyr = wavit::decompose(img, a.levels);
    const auto back = wavit::reconstruct(pyr);
    const double err = static_cast<double>(wavit::max_abs_diff(back, img));
    const double e0 = wavit::image_energy(img);
    const double energy_rel = e0 > 0.0 ? std::abs(wavit::pyramid_energy(pyr) - e0) / e0 : 0.0;
    const double tol = std::is_same_v<T, float> ? 1e-5 : 1e-12;

    std::cout << "image " << pyr.height << "x" << pyr.width << " levels " << pyr.levels << "\n";
    std::cout << "ll " << pyr.ll[0].rows() << "x" << pyr.ll[0].cols() << "\n";
    for (int l = 1; l <= pyr.levels; ++l) {
        const auto& d = pyr.detail(l).lh[0];
        std::cout << "detail level " << l << " " << d.rows() << "x" << d.cols() << "\n";
    }
    std::cout << "max_abs_reconstruction_error " << fmt("%.6e", err) << "\n";
    std::cout << "energy_relative_error " << fmt("%.6e", energy_rel) << "\n";

    if (!a.out.empty()) {
        std::vector<std::pair<std::string, const wavit::ImagePlane<T>*>> planes;
        static const char* ch[3] = {"y", "cb", "cr"};
        for (std::size_t k = 0; k < 3; ++k) planes.emplace_back(std::string("ll.") + ch[k], &pyr.ll[k]);
        for (int l = 1; l <= pyr.levels; ++l) {
            const auto& d = pyr.detail(l);
            for (std::size_t k = 0; k < 3; ++k) {
                const std::string lv = std::to_string(l) + "." + ch[k];
                planes.emplace_back("lh." + lv, &d.lh[k]);
                planes.emplace_back("hl." + lv, &d.hl[k]);
                planes.emplace_back("hh." + lv, &d.hh[k]);
            }
        }
        wavit::save_planes<T>(planes, a.out, {{"kind", "pyramid"}, {"L", pyr.levels}, {"H", pyr.height}, {"W", pyr.width}});
    }
    if (err > tol) {
        std::cerr << "reconstruction error " << err << " exceeds " << tol << "\n";
        return kInvariant;
    }
    return kOk;
}

// --- tokenize --------------------------------------------------------------

struct TokenizeArgs {
    std::vector<std::size_t> hw{224, 224};
    int patch = 16;
    int levels = 2;
    bool table = false;
    std::string json_out;
};

json plan_to_json(const wavit::TokenPlan& plan) {
    json j;
    j["height"] = plan.height;
    j["width"] = plan.width;
    j["patch"] = plan.patch;
    j["levels"] = plan.levels;
    j["groups"] = json::array();
    for (const auto& g : plan.groups) {
        json gj;
        gj["id"] = g.id;
        gj["level"] = g.level;
        gj["grid"] = {g.grid_rows, g.grid_cols};
        gj["readout_index"] = g.readout_index;
        gj["tokens"] = g.size();
        gj["spatial_tokens"] = g.spatial();
        json kinds = json::array();
        std::string last;
        for (const auto& t : g.tokens) {
            const std::string k = wavit::to_string(t.kind);
            if (k != last) kinds.push_back(k);
            last = k;
        }
        gj["order"] = kinds;
        j["groups"].push_back(gj);
    }
    j["cumulative_tokens"] = json::array();
    for (int s = 0; s <= plan.levels; ++s) j["cumulative_tokens"].push_back(plan.cumulative_tokens(s));
    return j;
}

int run_tokenize(const TokenizeArgs& a) {
    const std::size_t h = a.hw.at(0), w = a.hw.size() > 1 ? a.hw[1] : a.hw[0];
    if (a.table) {
        const std::size_t n_full = h * w / (static_cast<std::size_t>(a.patch) * static_cast<std::size_t>(a.patch));
        std::cout << "# token counts, P=" << a.patch << " H=" << h << " W=" << w << " (columns ell=1..L)\n";
        for (int levels = 1; levels <= a.levels; ++levels) {
            std::cout << "L=" << levels << ":";
            for (int col = 1; col <= levels; ++col) std::cout << " " << wavit::table1_counts(n_full, levels, col);
            std::cout << "\n";
        }
        return kOk;
    }
    const auto plan = wavit::build_token_plan(h, w, a.patch, a.levels);
    emit(a.json_out, plan_to_json(plan).dump(2) + "\n");
    return kOk;
}

// --- classify / sweep ------------------------------------------------------

struct GateArgs {
    std::string gate = "margin";
    std::string theta = "0";
    std::optional<double> per_class;
    std::string space = "prob";
};

wavit::GateConfig make_gate(const GateArgs& g) {
    wavit::GateConfig cfg;
    if (g.gate == "margin") cfg.kind = wavit::GateKind::Margin;
    else if (g.gate == "prob") cfg.kind = wavit::GateKind::Prob;
    else throw wavit::ConfigError("--gate must be margin or prob");
    if (g.space == "sim") cfg.space = wavit::ScoreSpace::Similarity;
    else if (g.space == "prob") cfg.space = wavit::ScoreSpace::Probability;
    else throw wavit::ConfigError("--score-space must be sim or prob");
    cfg.threshold = parse_theta(g.theta);
    if (g.per_class) {
        cfg.mode = wavit::ThresholdMode::PerClass;
        cfg.per_class_factor = *g.per_class;
    }
    if (!(cfg.threshold >= 0.0) || (g.per_class && !(*g.per_class >= 0.0))) {
        throw wavit::ConfigError("thresholds must be >= 0");
    }
    return cfg;
}

struct ClassifyArgs {
    std::string image, model, bank, trace;
    GateArgs gate;
};

template <wavit::Real T>
void warn_bank(const wavit::EmbeddingBank<T>& bank, const std::string& path) {
    if (bank.renormalized()) std::cerr << "warning: " << path << ": bank rows were not unit-norm; normalized on load\n";
}

json trace_to_json(const wavit::InferenceTrace& tr, const std::vector<std::string>& labels, const wavit::GateConfig& g,
                   std::size_t classes) {
    json j;
    j["exit_level"] = tr.exit_level;
    j["predicted"] = tr.predicted;
    j["label"] = tr.predicted_label;
    j["tokens"] = tr.tokens;
    j["macs_cached"] = tr.macs_cached;
    j["macs_naive"] = tr.macs_naive;
    j["gate"] = {{"kind", g.kind == wavit::GateKind::Margin ? "margin" : "prob"},
                 {"score_space", g.space == wavit::ScoreSpace::Probability ? "prob" : "sim"},
                 {"theta_eff", std::isinf(g.effective_threshold(classes)) ? json("inf") : json(g.effective_threshold(classes))}};
    j["levels"] = json::array();
    for (const auto& l : tr.levels) {
        json lj{{"level", l.level}, {"margin", l.margin}, {"max_prob", l.max_prob}, {"exit", l.exit}, {"predicted", l.predicted}};
        lj["top"] = json::array();
        for (const auto& s : l.top)
            lj["top"].push_back({{"index", s.index}, {"label", labels[s.index]}, {"similarity", s.similarity}, {"probability", s.probability}});
        j["levels"].push_back(lj);
    }
    return j;
}

template <wavit::Real T>
int run_classify(const ClassifyArgs& a) {
    const auto gate = make_gate(a.gate);
    const auto params = wavit::load_model<T>(a.model);
    const auto bank = wavit::load_bank<T>(a.bank);
    warn_bank(bank, a.bank);
    const auto rgb = wavit::load_ppm<T>(a.image);
    const auto plan = wavit::build_token_plan(rgb.r.rows(), rgb.r.cols(), params.config.patch, params.config.levels);
    const auto trace = wavit::classify_progressive(rgb, params, bank, gate, plan);
    std::cout << "predicted " << trace.predicted << " " << trace.predicted_label << " exit_level " << trace.exit_level
              << " tokens " << trace.tokens << " macs_cached " << trace.macs_cached << " macs_naive " << trace.macs_naive
              << "\n";
    if (!a.trace.empty()) emit(a.trace, trace_to_json(trace, bank.labels(), gate, bank.classes()).dump(2) + "\n");
    return kOk;
}

struct SweepArgs {
    std::string images, model, bank, csv;
    std::string thetas = "0,inf";
    GateArgs gate;
    bool per_class = false;
};

template <wavit::Real T>
int run_sweep(const SweepArgs& a) {
    GateArgs ga = a.gate;
    ga.theta = "0";
    auto gate = make_gate(ga);
    if (a.per_class) gate.mode = wavit::ThresholdMode::PerClass;
    const auto thetas = parse_theta_list(a.thetas);
    const auto params = wavit::load_model<T>(a.model);
    const auto bank = wavit::load_bank<T>(a.bank);
    warn_bank(bank, a.bank);

    std::vector<fs::path> files;
    if (!fs::is_directory(a.images)) throw wavit::FormatError("not a directory: " + a.images);
    for (const auto& e : fs::directory_iterator(a.images))
        if (e.is_regular_file() && e.path().extension() == ".ppm") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw wavit::ConfigError("no .ppm images in " + a.images);

    std::vector<wavit::SubbandPyramid<T>> pyramids;
    std::optional<wavit::TokenPlan> plan;
    for (const auto& f : files) {
        const auto rgb = wavit::load_ppm<T>(f);
        if (!plan) plan = wavit::build_token_plan(rgb.r.rows(), rgb.r.cols(), params.config.patch, params.config.levels);
        if (rgb.r.rows() != plan->height || rgb.r.cols() != plan->width) {
            throw wavit::ConfigError(f.string() + ": all sweep images must share one size");
        }
        pyramids.push_back(wavit::decompose(wavit::rgb_to_ycbcr(rgb), params.config.levels));
    }
    const auto res = wavit::sweep(pyramids, params, bank, gate, thetas, *plan);
    std::string text = "theta,mean_tokens,mean_macs_cached,mean_macs_naive,agreement\n";
    for (const auto& r : res.rows) {
        text += fmt_theta(r.theta) + "," + fmt("%.6f", r.mean_tokens) + "," + fmt("%.1f", r.mean_macs_cached) + "," +
                fmt("%.1f", r.mean_macs_naive) + "," + fmt("%.6f", r.agreement) + "\n";
    }
    emit(a.csv, text);
    return kOk;
}

// --- flops -----------------------------------------------------------------

struct FlopsArgs {
    std::string preset = "vit-b16";
    std::optional<std::uint64_t> tokens;
    std::optional<int> levels;
    std::vector<std::size_t> hw{224, 224};
    bool strict = false;
    std::optional<std::uint64_t> dim, blocks, mlp_ratio, patch, d_out, heads;
    bool elementwise = false;
    std::string csv;
};

int run_flops(const FlopsArgs& a) {
    wavit::CostConfig cfg;
    if (a.preset == "vit-b16") cfg = wavit::CostConfig::vit_b16();
    else if (a.preset == "desk") cfg = {32, 2, 4, 8, 16, 4, false};
    else throw wavit::ConfigError("unknown --preset '" + a.preset + "' (vit-b16, desk)");
    if (a.dim) cfg.dim = *a.dim;
    if (a.blocks) cfg.blocks = *a.blocks;
    if (a.mlp_ratio) cfg.mlp_ratio = *a.mlp_ratio;
    if (a.patch) cfg.patch = *a.patch;
    if (a.d_out) cfg.d_out = *a.d_out;
    if (a.heads) cfg.heads = *a.heads;
    cfg.include_elementwise = a.elementwise;
    cfg.validate();

    if (a.tokens) {
        const auto c = wavit::full_cost(*a.tokens, cfg);
        std::cout << "tokens " << *a.tokens << "\n";
        std::cout << "embed " << c.embed << "\nprojections " << c.projections << "\nattention " << c.attention
                  << "\nmlp " << c.mlp << "\nelementwise " << c.elementwise << "\nreadout " << c.readout << "\n";
        std::cout << "total_macs " << c.total() << "\n";
        std::cout << "total_gflops " << fmt("%.4f", static_cast<double>(c.total()) / 1e9) << "\n";
        if (!a.levels) return kOk;
    }
    if (!a.levels) throw wavit::ConfigError("flops needs --tokens and/or --levels");

    const std::size_t h = a.hw.at(0), w = a.hw.size() > 1 ? a.hw[1] : a.hw[0];
    std::vector<std::uint64_t> sizes;
    if (a.strict) {
        sizes = wavit::plan_group_sizes(wavit::build_token_plan(h, w, static_cast<int>(cfg.patch), *a.levels));
    } else {
        const std::uint64_t n_full = h * w / (cfg.patch * cfg.patch);
        sizes = wavit::table_group_sizes(n_full, *a.levels);
    }
    const auto report = wavit::progressive_cost(sizes, static_cast<int>(sizes.size()) - 1, cfg);
    std::string text = "step,tokens_new,tokens_total,cached_step_macs,naive_step_macs,step_delta_macs,cached_cumulative_macs,naive_cumulative_macs,cumulative_delta_macs\n";
    for (const auto& r : report.rows) {
        text += std::to_string(r.step) + "," + std::to_string(r.tokens_new) + "," + std::to_string(r.tokens_total) + "," +
                std::to_string(r.cached.total()) + "," + std::to_string(r.naive_step) + "," + std::to_string(r.step_delta()) +
                "," + std::to_string(r.cached_cumulative) + "," + std::to_string(r.naive_cumulative) + "," +
                std::to_string(r.cumulative_delta()) + "\n";
    }
    if (!a.csv.empty()) emit(a.csv, text);
    std::printf("%-5s %-7s %-9s %-9s %-11s %-11s\n", "step", "tokens", "cached_G", "naive_G", "step_delta", "cum_delta");
    for (const auto& r : report.rows) {
        std::printf("%-5d %-7llu %-9.3f %-9.3f %-11s %-11s\n", r.step, static_cast<unsigned long long>(r.tokens_total),
                    r.cached_cumulative / 1e9, r.naive_cumulative / 1e9, fmt("+%.3f", r.step_delta() / 1e9).c_str(),
                    fmt("+%.3f", r.cumulative_delta() / 1e9).c_str());
    }
    std::fflush(stdout);
    std::cout << "naive_overhead_fraction " << fmt("%.4f", report.naive_overhead_fraction()) << "\n";
    return kOk;
}

// --- gen-synthetic ---------------------------------------------------------

struct GenArgs {
    std::string out = "synthetic";
    wavit::ModelConfig cfg{32, 2, 4, 4, 8, 2, 16};
    std::size_t classes = 10;
    double temperature = 100.0;
    std::size_t images = 0;
    std::vector<std::size_t> hw{64, 64};
};

template <wavit::Real T>
int run_gen(const GenArgs& a, const Common& c) {
    const auto model = wavit::gen_synthetic<T>(c.seed, a.cfg, a.classes, a.temperature);
    const fs::path dir(a.out);
    wavit::save_model(model.params, dir / "model.json");
    wavit::save_bank(model.bank, dir / "bank.json");
    std::cout << "wrote " << (dir / "model.json").string() << " and " << (dir / "bank.json").string() << "\n";
    if (a.images > 0) {
        const std::size_t h = a.hw.at(0), w = a.hw.size() > 1 ? a.hw[1] : a.hw[0];
        fs::create_directories(dir / "images");
        for (std::size_t i = 0; i < a.images; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "img_%04zu.ppm", i);
            wavit::save_ppm(wavit::structured_rgb_image<double>(c.seed * 1000003ULL + i, h, w), dir / "images" / name);
        }
        std::cout << "wrote " << a.images << " images to " << (dir / "images").string() << "\n";
    }
    return kOk;
}

// --- selfcheck -------------------------------------------------------------

int run_selfcheck(const Common& c) {
    const auto results = wavit::run_selfcheck(c.seed);
    std::size_t passed = 0;
    for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        passed += r.passed ? 1 : 0;
    }
    std::cout << "selfcheck: " << passed << "/" << results.size() << " passed\n";
    return passed == results.size() ? kOk : kInvariant;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"wavit: progressive wavelet-token ViT inference engine"};
    app.require_subcommand(0, 1);
    bool show_version = false;
    app.add_flag("--version", show_version, "Print version and manifest format compatibility");

    Common common;
    auto add_common = [&](CLI::App* sub, bool precision) {
        sub->add_option("--seed", common.seed, "Random seed");
        if (precision) sub->add_option("--precision", common.precision, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}));
    };

    DwtArgs dwt;
    auto* s_dwt = app.add_subcommand("dwt", "Decompose/reconstruct an image and report reconstruction error");
    s_dwt->add_option("--image", dwt.image, "PPM (P6) input; random image when omitted");
    s_dwt->add_option("--hw", dwt.hw, "Random image size H [W]")->expected(1, 2);
    s_dwt->add_option("--levels", dwt.levels, "Wavelet levels");
    s_dwt->add_option("--out", dwt.out, "Write subbands to this manifest");
    add_common(s_dwt, true);

    TokenizeArgs tok;
    auto* s_tok = app.add_subcommand("tokenize", "Print the token plan or the count table");
    s_tok->add_option("--hw", tok.hw, "Image size H [W]")->expected(1, 2);
    s_tok->add_option("--patch", tok.patch, "Patch size P");
    s_tok->add_option("--levels", tok.levels, "Wavelet levels L");
    s_tok->add_flag("--table", tok.table, "Print the count table for L = 1..levels");
    s_tok->add_option("--json", tok.json_out, "Write the plan JSON here instead of stdout");

    ClassifyArgs cls;
    auto* s_cls = app.add_subcommand("classify", "Progressive zero-shot classification of one image");
    s_cls->add_option("--image", cls.image, "PPM (P6) image")->required();
    s_cls->add_option("--model", cls.model, "Model manifest")->required();
    s_cls->add_option("--bank", cls.bank, "Embedding bank manifest")->required();
    s_cls->add_option("--gate", cls.gate.gate, "margin or prob");
    s_cls->add_option("--theta", cls.gate.theta, "Absolute threshold (inf allowed)");
    s_cls->add_option("--theta-per-class", cls.gate.per_class, "Per-class factor p; threshold = p * classes");
    s_cls->add_option("--score-space", cls.gate.space, "sim or prob (margin gate)");
    s_cls->add_option("--trace", cls.trace, "Write the inference trace JSON here");
    add_common(s_cls, true);

    SweepArgs swp;
    auto* s_swp = app.add_subcommand("sweep", "Threshold sweep over a directory of images");
    s_swp->add_option("--images", swp.images, "Directory of .ppm images")->required();
    s_swp->add_option("--model", swp.model, "Model manifest")->required();
    s_swp->add_option("--bank", swp.bank, "Embedding bank manifest")->required();
    s_swp->add_option("--gate", swp.gate.gate, "margin or prob");
    s_swp->add_option("--thetas", swp.thetas, "Comma-separated thresholds (inf allowed)");
    s_swp->add_flag("--theta-per-class", swp.per_class, "Interpret thresholds as per-class factors p");
    s_swp->add_option("--score-space", swp.gate.space, "sim or prob (margin gate)");
    s_swp->add_option("--csv", swp.csv, "Write CSV here instead of stdout");
    add_common(s_swp, true);

    FlopsArgs fl;
    auto* s_fl = app.add_subcommand("flops", "Analytic MAC report (1 MAC = 1 FLOP)");
    s_fl->add_option("--preset", fl.preset, "vit-b16 or desk");
    s_fl->add_option("--tokens", fl.tokens, "Cost of one full forward over N tokens");
    s_fl->add_option("--levels", fl.levels, "Per-step cached vs naive report for L levels");
    s_fl->add_option("--hw", fl.hw, "Image size H [W]")->expected(1, 2);
    s_fl->add_flag("--strict", fl.strict, "Use the exact token plan instead of the table convention");
    s_fl->add_option("--dim", fl.dim);
    s_fl->add_option("--blocks", fl.blocks);
    s_fl->add_option("--mlp-ratio", fl.mlp_ratio);
    s_fl->add_option("--patch", fl.patch);
    s_fl->add_option("--d-out", fl.d_out);
    s_fl->add_option("--heads", fl.heads);
    s_fl->add_flag("--elementwise", fl.elementwise, "Also count norms, softmax and GELU");
    s_fl->add_option("--csv", fl.csv, "Write the per-step report as CSV");

    GenArgs gen;
    auto* s_gen = app.add_subcommand("gen-synthetic", "Write a seeded synthetic model, bank and optional images");
    s_gen->add_option("--out", gen.out, "Output directory");
    s_gen->add_option("--dim", gen.cfg.dim);
    s_gen->add_option("--blocks", gen.cfg.blocks);
    s_gen->add_option("--heads", gen.cfg.heads);
    s_gen->add_option("--mlp-ratio", gen.cfg.mlp_ratio);
    s_gen->add_option("--patch", gen.cfg.patch);
    s_gen->add_option("--levels", gen.cfg.levels);
    s_gen->add_option("--d-out", gen.cfg.d_out);
    s_gen->add_option("--classes", gen.classes);
    s_gen->add_option("--temperature", gen.temperature);
    s_gen->add_option("--images", gen.images, "Also write N synthetic PPM images");
    s_gen->add_option("--hw", gen.hw, "Synthetic image size H [W]")->expected(1, 2);
    add_common(s_gen, true);

    auto* s_chk = app.add_subcommand("selfcheck", "Run the invariant suite; exit 0 iff all pass");
    common.seed = 7;
    add_common(s_chk, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    if (show_version) {
        std::cout << "wavit " << kVersion << " (manifest format version " << wavit::kFormatVersion << ")\n";
        return kOk;
    }

    try {
        if (*s_dwt) return dispatch_precision(common.precision, [&](auto t) { return run_dwt<decltype(t)>(dwt, common); });
        if (*s_tok) return run_tokenize(tok);
        if (*s_cls) return dispatch_precision(common.precision, [&](auto t) { return run_classify<decltype(t)>(cls); });
        if (*s_swp) return dispatch_precision(common.precision, [&](auto t) { return run_sweep<decltype(t)>(swp); });
        if (*s_fl) return run_flops(fl);
        if (*s_gen) return dispatch_precision(common.precision, [&](auto t) { return run_gen<decltype(t)>(gen, common); });
        if (*s_chk) return run_selfcheck(common);
        std::cerr << app.help();
        return kUsage;
    } catch (const wavit::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const wavit::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
}
