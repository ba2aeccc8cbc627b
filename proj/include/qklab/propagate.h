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

#include <Eigen/Dense>

#include "qklab/rydberg.h"
#include "qklab/state_vector.h"

namespace qklab {

enum class Backend { kDenseEigen, kKrylov, kAuto };

struct PropagationOptions {
    Backend backend = Backend::kAuto;
    /// kAuto picks the dense eigensolver up to this dimension, Krylov above.
    int auto_dense_max_dim = 64;
    /// Largest Lanczos basis built before the time step is shortened.
    int krylov_max_subspace = 60;
    /// Convergence threshold on the last Krylov coefficient of the propagated vector.
    double krylov_tol = 1e-12;
    /// Hard cap on sub-steps; beyond this Krylov reports failure.
    int krylov_max_steps = 4096;
    /// On Krylov failure, fall back to the dense path when dim is at most this.
    int dense_fallback_max_dim = 1024;
};

/// Diagnostic counters from one propagation.
struct PropagationStats {
    Backend used = Backend::kDenseEigen;
    int steps = 0;
    int max_subspace = 0;
    bool fell_back = false;
};

/// exp(-i H t)|psi>.
StateVector evolve(const StateVector &psi, const HermitianMatrix &h, double t, const PropagationOptions &opts = {},
                   PropagationStats *stats = nullptr);

/// Dense exp(-i H t) from a Hermitian eigendecomposition.
Eigen::MatrixXcd dense_propagator(const HermitianMatrix &h, double t);

/// U|psi> for a dense operator of matching dimension.
StateVector apply_operator(const Eigen::MatrixXcd &u, const StateVector &psi);

}  // namespace qklab
