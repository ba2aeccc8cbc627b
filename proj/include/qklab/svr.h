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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qklab/kernels.h"

namespace qklab {

struct SvrOptions {
    double C = 1.0;
    double epsilon = 0.1;
    /// Stop when the maximal KKT violation m(a) - M(a) is at most tol.
    double tol = 1e-3;
    /// Pair updates; <= 0 means 1e5 * N.
    long long max_iter = 0;
    /// Fit on (y - mean) / sd and undo it at prediction time.
    bool standardize_labels = false;
    /// If set, receives the dual objective after every update.
    std::vector<double> *objective_trace = nullptr;
};

struct SvrModel {
    std::vector<double> beta;  // alpha - alpha*
    double b = 0.0;
    std::vector<int> support_indices;
    double C = 1.0;
    double epsilon = 0.1;
    Digest kernel_digest;
    /// lambda added to the diagonal of an indefinite Gram.
    double diag_shift = 0.0;
    double label_mean = 0.0;
    double label_scale = 1.0;
    long long iterations = 0;
    bool converged = false;
    double kkt_violation = 0.0;
    /// Dual objective of the (scaled) problem at the solution.
    double dual_objective = 0.0;

    int size() const { return static_cast<int>(beta.size()); }
};

/// SMO on the 2N-variable dual with maximal-violating-pair selection.
SvrModel train_svr(const GramMatrix &gram, std::span<const double> y, const SvrOptions &opts = {});
SvrModel train_svr(const Eigen::MatrixXd &k, std::span<const double> y, const SvrOptions &opts = {},
                   const Digest &digest = {});

/// sum_j beta_j k_j + b for one row of the cross Gram.
double predict(const SvrModel &model, std::span<const double> cross_gram_row);
std::vector<double> predict_all(const SvrModel &model, const GramMatrix &cross);

/// beta^T K beta, clamped at zero.
double weight_norm(const SvrModel &model, const GramMatrix &training_gram);

/// Dual objective -1/2 b^T K b - eps |b|_1 + y^T b.
double svr_dual_objective(const Eigen::MatrixXd &k, std::span<const double> y, std::span<const double> beta,
                          double epsilon);

double mse(std::span<const double> predictions, std::span<const double> truth);
double r2_score(std::span<const double> predictions, std::span<const double> truth);

struct CvCell {
    double C = 0.0;
    double epsilon = 0.0;
    double mse = 0.0;
};

struct CvResult {
    double best_C = 0.0;
    double best_epsilon = 0.0;
    double best_mse = 0.0;
    std::vector<CvCell> cells;  // ascending C, then ascending epsilon
};

/// k-fold CV on Gram submatrices; ties go to smaller C, then smaller epsilon.
CvResult cross_validate(const Eigen::MatrixXd &k, std::span<const double> y, std::vector<double> C_grid,
                        std::vector<double> eps_grid, int k_folds, std::uint64_t seed, const SvrOptions &base = {});

void write_model(const std::filesystem::path &path, const SvrModel &m);
SvrModel read_model(const std::filesystem::path &path);
std::string model_to_text(const SvrModel &m);
SvrModel model_from_text(const std::string &text);

}  // namespace qklab
