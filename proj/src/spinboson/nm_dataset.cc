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

#include "qklab/nm_dataset.h"

#include <cmath>
#include <random>
#include <string>

#include "common/parallel.h"
#include "qklab/errors.h"

namespace qklab {

std::vector<double> NmOptions::sample_times() const {
    if (!times.empty()) return times;
    std::vector<double> t(10);
    for (int j = 0; j < 10; ++j) t[j] = 0.5 * (j + 1) / base.omega_c;
    return t;
}

void NmOptions::validate() const {
    if (n_train < 0 || n_test < 0 || n_train + n_test < 1) throw ValidationError("dataset needs at least one sample");
    if (!(s_min > 1.0) || !(s_max >= s_min)) throw ValidationError("s range must lie above 1 and be ordered");
    if (!(T_min >= 0.0) || !(T_max >= T_min)) throw ValidationError("T range must be non-negative and ordered");
    base.validate();
    const auto t = sample_times();
    if (t.size() != 10) throw ValidationError("exactly 10 sampling times are required");
    for (std::size_t j = 0; j < t.size(); ++j) {
        if (!std::isfinite(t[j]) || t[j] < 0.0 || (j > 0 && !(t[j] > t[j - 1]))) {
            throw ValidationError("sampling times must be finite, non-negative and strictly increasing");
        }
    }
}

std::vector<double> nm_features(const EnvParams &p, const std::vector<double> &times) {
    std::vector<double> f;
    f.reserve(2 * times.size());
    for (double t : times) {
        const auto phi = dephasing_factor(p, t);
        f.push_back(phi.real());
        f.push_back(phi.imag());
    }
    return f;
}

LabeledDataset gen_nm_dataset(const NmOptions &opts) {
    opts.validate();
    const int n = opts.n_train + opts.n_test;
    const auto times = opts.sample_times();
    LabeledDataset ds;
    ds.s.resize(n);
    ds.T.resize(n);
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> us(opts.s_min, opts.s_max), ut(opts.T_min, opts.T_max);
    for (int i = 0; i < n; ++i) {
        ds.s[i] = us(rng);
        ds.T[i] = ut(rng);
    }
    ds.features.resize(n, 20);
    ds.labels.resize(n);
    ds.split.resize(n);
    internal::parallel_for(n, [&](std::int64_t i) {
        EnvParams p = opts.base;
        p.s = ds.s[i];
        p.T = ds.T[i];
        try {
            const auto f = nm_features(p, times);
            for (int k = 0; k < 20; ++k) ds.features(i, k) = f[k];
            ds.labels[i] = blp_measure(p, opts.blp).value;
        } catch (const NumericalError &e) {
            throw NumericalError("sample " + std::to_string(i) + ": " + e.what());
        }
        ds.split[i] = i < opts.n_train ? Split::kTrain : Split::kTest;
    });
    return ds;
}

}  // namespace qklab
