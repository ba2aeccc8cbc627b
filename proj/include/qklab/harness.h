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
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "qklab/config.h"
#include "qklab/datasets.h"
#include "qklab/kernels.h"
#include "qklab/svr.h"

namespace qklab {

struct ModelResult {
    /// Unique, file-name safe: kind_variant plus _a<a> and _s<seed> when needed.
    std::string label;
    KernelKind kind = KernelKind::kRbf;
    bool noisy = false;
    /// Only meaningful for analog and hybrid kernels.
    double a_over_rb = 0.0;
    std::uint64_t seed = 0;
    double C = 0.0;
    double epsilon = 0.0;
    double cv_mse = 0.0;
    double train_mse = 0.0;
    double test_mse = 0.0;
    double test_r2 = 0.0;
    double weight_norm = 0.0;
    /// Noisy models only: weight norm when retrained at the paired ideal
    /// model's (C, epsilon). NaN otherwise.
    double paired_weight_norm = 0.0;
    int n_support = 0;
    long long iterations = 0;
    bool converged = false;
    double kkt_violation = 0.0;
    PsdReport train_psd;
    Digest train_digest;
    Digest test_digest;
    std::vector<std::uint64_t> test_ids;
    std::vector<double> truth;
    std::vector<double> prediction;
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
    bool cache_hit = false;
};

struct RunReport {
    ExperimentConfig config;
    std::vector<std::pair<std::uint64_t, Digest>> dataset_digests;  // per seed
    std::vector<ModelResult> models;
    std::vector<StageTiming> timings;
    double wall_seconds = 0.0;

    const ModelResult *find(KernelKind kind, bool noisy, double a_over_rb, std::uint64_t seed) const;
};

using LogFn = std::function<void(std::string_view)>;

/// Raw dataset for a seed: 20 dephasing features plus (s, T) for the
/// nonmarkov task, preprocessed d-dimensional features for the benchmark.
LabeledDataset make_dataset(const ExperimentConfig &cfg, std::uint64_t seed);
/// Model inputs: PCA to d and min-max scaling for the nonmarkov task; the
/// benchmark dataset is returned unchanged after a dimension check.
LabeledDataset model_inputs(const ExperimentConfig &cfg, const LabeledDataset &raw);
/// Digest of everything that determines make_dataset's output.
Digest dataset_digest(const ExperimentConfig &cfg, std::uint64_t seed);
KernelConfig kernel_config(const ExperimentConfig &cfg, KernelKind kind, bool noisy, double a_over_rb,
                           std::uint64_t seed);
SvrOptions svr_options(const ExperimentConfig &cfg);

/// Generates or loads datasets, builds or loads Grams, cross-validates,
/// trains and predicts every configured model, then writes report.txt,
/// predictions.csv and the plot files into cfg.output_dir. Failures are
/// rethrown with the stage name prefixed and keep their error category.
RunReport run_pipeline(const ExperimentConfig &cfg, const LogFn &log = {});

/// Structured text with stable key order. The [runtime] section holds the
/// only run-dependent values (timings and cache hits).
std::string report_to_text(const RunReport &r, bool include_runtime = true);

struct PlotOutput {
    std::vector<std::filesystem::path> files;
    std::string notice;  // set when nothing was written
};

/// One scatter plot per model, an MSE bar chart, and a weight-norm bar chart
/// when the report holds noisy models; every SVG has a CSV of its values.
PlotOutput emit_plots(const RunReport &r, const std::filesystem::path &dir);

}  // namespace qklab
