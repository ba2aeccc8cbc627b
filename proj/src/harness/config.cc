// Copyright 2026 The QKLab Authors
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

#include "qklab/config.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "qklab/errors.h"
#include "qklab/text_util.h"

namespace qklab {
namespace {

bool parse_bool(std::string_view v) {
    v = trim(v);
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ValidationError("not a boolean: '" + std::string(v) + "'");
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

int parse_count(std::string_view v) {
    const long long n = parse_int(v);
    if (n < -(1LL << 31) || n > (1LL << 31) - 1) throw ValidationError("integer out of range: " + std::string(v));
    return static_cast<int>(n);
}

std::vector<double> parse_reals(std::string_view v) {
    std::vector<double> out;
    for (const auto &p : split(v, ',')) out.push_back(parse_double(p));
    return out;
}

std::vector<KernelKind> parse_kinds(std::string_view v) {
    std::vector<KernelKind> out;
    for (const auto &p : split(v, ',')) {
        const KernelKind k = parse_kernel_kind(p);
        if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    }
    return out;
}

std::string reals_text(const std::vector<double> &v) {
    std::vector<std::string> parts;
    for (double x : v) parts.push_back(format_double(x));
    return join(parts, ",");
}

std::string kinds_text(const std::vector<KernelKind> &v) {
    std::vector<std::string> parts;
    for (auto k : v) parts.emplace_back(kernel_kind_name(k));
    return join(parts, ",");
}

using Getter = std::function<std::string(const ExperimentConfig &)>;
using Setter = std::function<void(ExperimentConfig &, std::string_view)>;

struct Field {
    std::string key;
    Getter get;
    Setter set;
};

const std::vector<Field> &fields() {
    static const std::vector<Field> f = {
        {"task", [](const auto &c) { return std::string(task_name(c.task)); },
         [](auto &c, auto v) { c.task = parse_task(trim(v)); }},
        {"kinds", [](const auto &c) { return kinds_text(c.kinds); },
         [](auto &c, auto v) { c.kinds = parse_kinds(v); }},
        {"noisy_kinds", [](const auto &c) { return kinds_text(c.noisy_kinds); },
         [](auto &c, auto v) { c.noisy_kinds = parse_kinds(v); }},
        {"a_over_rb", [](const auto &c) { return reals_text(c.a_over_rb); },
         [](auto &c, auto v) { c.a_over_rb = parse_reals(v); }},
        {"M", [](const auto &c) { return std::to_string(c.M); }, [](auto &c, auto v) { c.M = parse_count(v); }},
        {"d", [](const auto &c) { return std::to_string(c.d); }, [](auto &c, auto v) { c.d = parse_count(v); }},
        {"n_train", [](const auto &c) { return std::to_string(c.n_train); },
         [](auto &c, auto v) { c.n_train = parse_count(v); }},
        {"n_test", [](const auto &c) { return std::to_string(c.n_test); },
         [](auto &c, auto v) { c.n_test = parse_count(v); }},
        {"seeds",
         [](const auto &c) {
             std::vector<std::string> p;
             for (auto s : c.seeds) p.push_back(std::to_string(s));
             return join(p, ",");
         },
         [](auto &c, auto v) {
             c.seeds.clear();
             for (const auto &p : split(v, ',')) {
                 const long long s = parse_int(p);
                 if (s < 0) throw ValidationError("seeds must be non-negative");
                 c.seeds.push_back(static_cast<std::uint64_t>(s));
             }
         }},
        {"C_grid", [](const auto &c) { return reals_text(c.C_grid); },
         [](auto &c, auto v) { c.C_grid = parse_reals(v); }},
        {"epsilon_grid", [](const auto &c) { return reals_text(c.epsilon_grid); },
         [](auto &c, auto v) { c.epsilon_grid = parse_reals(v); }},
        {"cv_folds", [](const auto &c) { return std::to_string(c.cv_folds); },
         [](auto &c, auto v) { c.cv_folds = parse_count(v); }},
        {"svr_tol", [](const auto &c) { return format_double(c.svr_tol); },
         [](auto &c, auto v) { c.svr_tol = parse_double(v); }},
        {"standardize_labels",
         [](const auto &c) { return c.standardize_labels ? bool_text(*c.standardize_labels) : std::string("auto"); },
         [](auto &c, auto v) {
             if (trim(v) == "auto") {
                 c.standardize_labels.reset();
             } else {
                 c.standardize_labels = parse_bool(v);
             }
         }},
        {"sigma_detuning", [](const auto &c) { return format_double(c.noise.sigma_detuning); },
         [](auto &c, auto v) { c.noise.sigma_detuning = parse_double(v); }},
        {"sigma_rabi_rel", [](const auto &c) { return format_double(c.noise.sigma_rabi_rel); },
         [](auto &c, auto v) { c.noise.sigma_rabi_rel = parse_double(v); }},
        {"sigma_position", [](const auto &c) { return format_double(c.noise.sigma_position); },
         [](auto &c, auto v) { c.noise.sigma_position = parse_double(v); }},
        {"sigma_cnot_theta", [](const auto &c) { return format_double(c.noise.sigma_cnot_theta); },
         [](auto &c, auto v) { c.noise.sigma_cnot_theta = parse_double(v); }},
        {"normalize_noisy", [](const auto &c) { return bool_text(c.normalize_noisy); },
         [](auto &c, auto v) { c.normalize_noisy = parse_bool(v); }},
        {"rbf_gamma", [](const auto &c) { return format_double(c.rbf_gamma); },
         [](auto &c, auto v) { c.rbf_gamma = parse_double(v); }},
        {"eta", [](const auto &c) { return format_double(c.eta); }, [](auto &c, auto v) { c.eta = parse_double(v); }},
        {"train_only_preprocessing", [](const auto &c) { return bool_text(c.train_only_preprocessing); },
         [](auto &c, auto v) { c.train_only_preprocessing = parse_bool(v); }},
        {"idx_images", [](const auto &c) { return c.idx_images; },
         [](auto &c, auto v) { c.idx_images = std::string(trim(v)); }},
        {"idx_labels", [](const auto &c) { return c.idx_labels; },
         [](auto &c, auto v) { c.idx_labels = std::string(trim(v)); }},
        {"dataset", [](const auto &c) { return c.dataset; }, [](auto &c, auto v) { c.dataset = std::string(trim(v)); }},
        {"output_dir", [](const auto &c) { return c.output_dir.string(); },
         [](auto &c, auto v) { c.output_dir = std::string(trim(v)); }},
        {"cache_dir", [](const auto &c) { return c.cache_dir.string(); },
         [](auto &c, auto v) { c.cache_dir = std::string(trim(v)); }},
    };
    return f;
}

const Field *find_field(std::string_view key) {
    for (const auto &f : fields()) {
        if (f.key == key) return &f;
    }
    return nullptr;
}

}  // namespace

std::vector<ConfigEntry> parse_config_text(std::string_view text) {
    std::vector<ConfigEntry> out;
    std::set<std::string, std::less<>> seen;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "config line " + std::to_string(line_no) + ": ";
        if (eq == std::string_view::npos) throw ValidationError(where + "expected 'key = value'");
        std::string key(trim(line.substr(0, eq)));
        if (key.empty()) throw ValidationError(where + "empty key");
        if (!seen.insert(key).second) throw ValidationError(where + "duplicate key '" + key + "'");
        out.push_back({std::move(key), std::string(trim(line.substr(eq + 1))), line_no});
    }
    return out;
}

std::vector<ConfigEntry> read_config_file(const std::filesystem::path &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open config file " + path.string());
    std::ostringstream s;
    s << f.rdbuf();
    return parse_config_text(s.str());
}

std::string_view task_name(Task t) { return t == Task::kBenchmark ? "benchmark" : "nonmarkov"; }

Task parse_task(std::string_view name) {
    if (name == "benchmark") return Task::kBenchmark;
    if (name == "nonmarkov") return Task::kNonmarkov;
    throw ValidationError("unknown task '" + std::string(name) + "' (expected benchmark or nonmarkov)");
}

ExperimentConfig ExperimentConfig::desk() { return {}; }

ExperimentConfig ExperimentConfig::paper() {
    ExperimentConfig c;
    c.apply_preset("paper");
    return c;
}

void ExperimentConfig::apply_preset(std::string_view name) {
    name = trim(name);
    if (name == "desk") {
        d = 6;
        M = 64;
        n_train = 100;
        n_test = 50;
    } else if (name == "paper") {
        d = 10;
        M = 1000;
        n_train = 400;
        n_test = 200;
    } else {
        throw ValidationError("unknown preset '" + std::string(name) + "' (expected desk or paper)");
    }
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
    if (key == "preset") {
        apply_preset(value);
        return;
    }
    const Field *f = find_field(key);
    if (!f) throw ValidationError("unknown config key '" + std::string(key) + "'");
    try {
        f->set(*this, value);
    } catch (const ValidationError &e) {
        throw ValidationError("config key '" + std::string(key) + "': " + e.what());
    }
}

void ExperimentConfig::apply(const std::vector<ConfigEntry> &entries) {
    for (const auto &e : entries) {
        if (e.key == "preset") set(e.key, e.value);
    }
    for (const auto &e : entries) {
        if (e.key == "preset") continue;
        try {
            set(e.key, e.value);
        } catch (const ValidationError &err) {
            if (e.line > 0) throw ValidationError("config line " + std::to_string(e.line) + ": " + err.what());
            throw;
        }
    }
}

void ExperimentConfig::validate() const {
    if (kinds.empty()) throw ValidationError("kinds must not be empty");
    for (auto k : noisy_kinds) {
        if (!is_quantum(k)) throw ValidationError("noisy_kinds may only list quantum kernels");
    }
    if (a_over_rb.empty()) throw ValidationError("a_over_rb must not be empty");
    for (double a : a_over_rb) {
        if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("a_over_rb must be > 0");
    }
    if (M < 1) throw ValidationError("M must be >= 1");
    if (d < 1) throw ValidationError("d must be >= 1");
    if (n_train < 2) throw ValidationError("n_train must be >= 2");
    if (n_test < 1) throw ValidationError("n_test must be >= 1");
    if (seeds.empty()) throw ValidationError("seeds must not be empty");
    if (C_grid.empty() || epsilon_grid.empty()) throw ValidationError("SVR grids must not be empty");
    for (double c : C_grid) {
        if (!(c > 0.0)) throw ValidationError("C_grid values must be > 0");
    }
    for (double e : epsilon_grid) {
        if (!(e >= 0.0)) throw ValidationError("epsilon_grid values must be >= 0");
    }
    if (cv_folds < 2 || cv_folds > n_train) throw ValidationError("cv_folds must lie in [2, n_train]");
    if (!(svr_tol > 0.0)) throw ValidationError("svr_tol must be > 0");
    if (!(eta > 0.0)) throw ValidationError("eta must be > 0");
    if (task == Task::kNonmarkov && d > 20) throw ValidationError("nonmarkov features have 20 components; d must be <= 20");
    if (idx_labels.size() && idx_images.empty()) throw ValidationError("idx_labels given without idx_images");
    if (output_dir.empty()) throw ValidationError("output_dir must not be empty");
    effective_noise().validate();
}

bool ExperimentConfig::effective_standardize() const {
    return standardize_labels.value_or(task == Task::kNonmarkov);
}

std::filesystem::path ExperimentConfig::effective_cache_dir() const {
    return cache_dir.empty() ? output_dir / "cache" : cache_dir;
}

NoiseSpec ExperimentConfig::effective_noise() const {
    NoiseSpec n = noise;
    n.ensemble_size = M;
    return n;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto &f : fields()) out.emplace_back(f.key, f.get(*this));
    return out;
}

std::string ExperimentConfig::to_text() const {
    std::string s;
    for (const auto &[k, v] : entries()) s += k + " = " + v + "\n";
    return s;
}

Digest ExperimentConfig::digest() const { return sha256(to_text()); }

const std::vector<std::string> &ExperimentConfig::keys() {
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out;
        for (const auto &f : fields()) out.push_back(f.key);
        return out;
    }();
    return k;
}

}  // namespace qklab
