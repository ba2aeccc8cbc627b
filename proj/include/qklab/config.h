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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qklab/feature_maps.h"
#include "qklab/kernels.h"

namespace qklab {

/// One `key = value` line; line is 1-based.
struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
};

/// Parses the flat config format: one `key = value` per line, `#` starts a
/// comment, blank lines are ignored, and a key may appear only once.
std::vector<ConfigEntry> parse_config_text(std::string_view text);
std::vector<ConfigEntry> read_config_file(const std::filesystem::path &path);

enum class Task : std::uint8_t { kBenchmark, kNonmarkov };

std::string_view task_name(Task t);
Task parse_task(std::string_view name);

struct ExperimentConfig {
    Task task = Task::kNonmarkov;
    std::vector<KernelKind> kinds{KernelKind::kDigital, KernelKind::kAnalog, KernelKind::kHybrid, KernelKind::kRbf};
    /// Quantum kinds that also get a noisy variant.
    std::vector<KernelKind> noisy_kinds{KernelKind::kDigital, KernelKind::kAnalog, KernelKind::kHybrid};
    std::vector<double> a_over_rb{1.05};
    int M = 64;
    int d = 6;
    int n_train = 100;
    int n_test = 50;
    std::vector<std::uint64_t> seeds{1};
    std::vector<double> C_grid{0.1, 1.0, 10.0, 100.0};
    std::vector<double> epsilon_grid{0.01, 0.1};
    int cv_folds = 5;
    double svr_tol = 1e-3;
    /// Unset means on for the nonmarkov task and off for the benchmark.
    std::optional<bool> standardize_labels;
    NoiseSpec noise;  // ensemble_size is replaced by M
    bool normalize_noisy = false;
    double rbf_gamma = 0.0;
    double eta = 1.0;
    bool train_only_preprocessing = false;
    /// Benchmark images; synthetic images when empty.
    std::string idx_images;
    std::string idx_labels;
    /// Existing dataset CSV; generated from the seed when empty.
    std::string dataset;
    std::filesystem::path output_dir = "qklab_out";
    /// Defaults to output_dir/cache.
    std::filesystem::path cache_dir;

    /// d = 6, M = 64, 100/50.
    static ExperimentConfig desk();
    /// d = 10, M = 1000, 400/200.
    static ExperimentConfig paper();

    void apply_preset(std::string_view name);
    /// Sets one field from its text form; throws ValidationError for unknown keys.
    void set(std::string_view key, std::string_view value);
    /// `preset` entries are applied before all others.
    void apply(const std::vector<ConfigEntry> &entries);
    void validate() const;

    bool effective_standardize() const;
    std::filesystem::path effective_cache_dir() const;
    NoiseSpec effective_noise() const;
    /// Every key in stable order with its canonical value.
    std::vector<std::pair<std::string, std::string>> entries() const;
    std::string to_text() const;
    Digest digest() const;

    static const std::vector<std::string> &keys();
};

}  // namespace qklab
