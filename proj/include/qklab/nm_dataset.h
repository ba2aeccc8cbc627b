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
#include <vector>

#include "qklab/datasets.h"
#include "qklab/dephasing.h"

namespace qklab {

struct NmOptions {
    int n_train = 400;
    int n_test = 200;
    double s_min = 1.1, s_max = 6.5;
    double T_min = 0.5, T_max = 4.5;
    /// Ten strictly increasing sampling times; empty means t_j = 0.5 j / wc.
    std::vector<double> times;
    std::uint64_t seed = 1;
    /// eta, omega_c and varphi are taken from here; s and T are sampled.
    EnvParams base;
    BlpOptions blp;

    std::vector<double> sample_times() const;
    void validate() const;
};

/// Re/Im of phi(t_j) for the ten times, interleaved.
std::vector<double> nm_features(const EnvParams &p, const std::vector<double> &times);

/// Uniform (s, T) draws with 20 raw dephasing features and the BLP label.
LabeledDataset gen_nm_dataset(const NmOptions &opts);

}  // namespace qklab
