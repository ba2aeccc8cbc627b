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
#include <Eigen/Sparse>
#include <numbers>
#include <span>
#include <vector>

#include "qklab/state_vector.h"

namespace qklab {

/// Default device constants. Frequencies are angular, in rad/us.
inline constexpr double kDefaultRabi = 8.0 * std::numbers::pi;
inline constexpr double kDefaultDetuningRatio = 0.5;
inline constexpr double kDefaultC6 = 5.42e6;  // rad um^6 / us
inline constexpr double kDefaultEvolutionTime = 0.25;  // us, one Rabi cycle at kDefaultRabi

/// A 1D chain of Rydberg atoms together with the drive and evolution time.
struct RydbergGeometry {
    std::vector<double> positions;  // um, strictly increasing
    double rabi = kDefaultRabi;
    double detuning = kDefaultDetuningRatio * kDefaultRabi;
    double c6 = kDefaultC6;
    double time = kDefaultEvolutionTime;

    int n_atoms() const { return static_cast<int>(positions.size()); }
    double blockade_radius() const;
    double interaction(int mu, int nu) const;  // 1-based atom indices
    /// Throws ValidationError if any invariant fails.
    void validate() const;

    /// Evenly spaced chain of `n` atoms with nearest-neighbour distance
    /// `a_over_rb` times the blockade radius of the given drive.
    static RydbergGeometry chain(int n, double a_over_rb, double rabi = kDefaultRabi,
                                 double detuning = kDefaultDetuningRatio * kDefaultRabi, double c6 = kDefaultC6,
                                 double time = kDefaultEvolutionTime);
};

double blockade_radius(double c6, double rabi);

/// Sparse Hermitian operator on a 2^n dimensional register.
class HermitianMatrix {
   public:
    using Sparse = Eigen::SparseMatrix<cdouble, Eigen::RowMajor>;

    HermitianMatrix() = default;
    /// Throws ValidationError unless `m` is square and Hermitian within `tol`.
    explicit HermitianMatrix(Sparse m, double tol = 1e-12);
    static HermitianMatrix from_dense(const Eigen::MatrixXcd &m, double tol = 1e-12);

    int dim() const { return static_cast<int>(m_.rows()); }
    const Sparse &sparse() const { return m_; }
    Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(m_); }
    /// Max |H_ij - conj(H_ji)|.
    double hermiticity_defect() const;

    /// y = H x.
    void apply(std::span<const cdouble> x, std::span<cdouble> y) const;
    /// <psi|H|psi>, real part.
    double expectation(const StateVector &psi) const;

   private:
    Sparse m_;
};

/// H = (D/2) sum_mu x_mu Z_mu + (offset/2) sum_mu Z_mu + (W/2) sum_mu X_mu
///     + sum_{mu<nu} C6/|r_mu - r_nu|^6 n_mu n_nu
/// with |0> = |g>, |1> = |r>, Z = diag(1,-1) and n = |1><1|.
/// `detuning_offset` models a uniform detuning drift that acts regardless of x.
HermitianMatrix build_rydberg_hamiltonian(const RydbergGeometry &geometry, std::span<const double> x,
                                          double detuning_offset = 0.0);

}  // namespace qklab
