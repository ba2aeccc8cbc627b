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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qklab/kernels.h"

namespace qklab {

/// Grayscale images as rows of pixels in [0, 1].
struct ImageSet {
    int height = 0;
    int width = 0;
    Eigen::MatrixXd pixels;    // n x (height * width)
    std::vector<int> labels;   // empty for synthetic sets

    int size() const { return static_cast<int>(pixels.rows()); }
};

/// IDX image file (magic 0x00000803) with an optional label file (0x00000801).
ImageSet read_idx(const std::filesystem::path &images, const std::filesystem::path &labels = {});

/// Deterministic 28x28 smooth random fields.
ImageSet synth_images(int n, std::uint64_t seed);

struct PcaModel {
    Eigen::VectorXd mean;        // d_in
    Eigen::MatrixXd components;  // k x d_in, orthonormal rows
    Eigen::VectorXd eigenvalues; // k, non-increasing
    double total_variance = 0.0;

    int k() const { return static_cast<int>(components.rows()); }
    double explained_variance_ratio() const;
};

PcaModel pca_fit(const Eigen::MatrixXd &x, int k);
Eigen::MatrixXd pca_transform(const PcaModel &m, const Eigen::MatrixXd &x);
Eigen::MatrixXd pca_inverse(const PcaModel &m, const Eigen::MatrixXd &z);

struct MinMaxModel {
    Eigen::VectorXd min;
    Eigen::VectorXd max;
    std::vector<bool> degenerate;  // constant column, mapped to 0

    bool any_degenerate() const;
};

MinMaxModel minmax_fit(const Eigen::MatrixXd &x);
Eigen::MatrixXd minmax_apply(const MinMaxModel &m, const Eigen::MatrixXd &x);
Eigen::MatrixXd minmax_inverse(const MinMaxModel &m, const Eigen::MatrixXd &z);

enum class Split : std::uint8_t { kTrain, kTest };

struct LabeledDataset {
    Eigen::MatrixXd features;  // N x d
    std::vector<double> labels;
    std::vector<Split> split;
    /// Environment parameters per sample; empty for the benchmark task.
    std::vector<double> s;
    std::vector<double> T;

    int size() const { return static_cast<int>(features.rows()); }
    int dim() const { return static_cast<int>(features.cols()); }
    bool has_env() const { return !s.empty(); }
    void validate() const;

    std::vector<int> indices(Split which) const;
    /// Rows of one split; ids are the global sample indices.
    FeatureSet feature_set(Split which) const;
    std::vector<double> split_labels(Split which) const;
};

struct PreprocessOptions {
    int k = 10;
    /// Fit PCA and min-max on the training split only.
    bool train_only = false;
};

/// PCA to k components followed by component-wise min-max.
LabeledDataset preprocess(const LabeledDataset &raw, const PreprocessOptions &opts, bool *degenerate = nullptr);

struct BenchmarkOptions {
    int n_train = 400;
    int n_test = 200;
    int d = 10;
    std::uint64_t theta_seed = 1;
    std::uint64_t split_seed = 2;
    bool train_only_preprocessing = false;
};

/// Label: <Z_1> after the ZZ circuit on x followed by the ZZ circuit on theta.
double benchmark_label(std::span<const double> x, std::span<const double> theta);
std::vector<double> benchmark_theta(int d, std::uint64_t seed);
LabeledDataset gen_benchmark(const ImageSet &images, const BenchmarkOptions &opts);

/// Columns: [s, T,] f1..fd, label, split.
void write_dataset_csv(const std::filesystem::path &path, const LabeledDataset &ds);
LabeledDataset read_dataset_csv(const std::filesystem::path &path);

}  // namespace qklab
