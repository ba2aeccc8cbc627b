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

#include "qklab/propagate.h"

#include <cmath>
#include <string>
#include <vector>

#include "qklab/errors.h"

namespace qklab {
namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

void check_inputs(const StateVector &psi, const HermitianMatrix &h, double t) {
    if (static_cast<std::size_t>(h.dim()) != psi.dim()) {
        throw ValidationError("Hamiltonian dimension " + std::to_string(h.dim()) + " does not match state dimension " +
                              std::to_string(psi.dim()));
    }
    if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("evolution time must be finite and >= 0");
}

StateVector evolve_dense(const StateVector &psi, const HermitianMatrix &h, double t) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h.dense());
    if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
    const MatrixXcd &v = es.eigenvectors();
    const auto amps = psi.amplitudes();
    const Eigen::Map<const VectorXcd> in(amps.data(), static_cast<Eigen::Index>(amps.size()));
    VectorXcd coeff = v.adjoint() * in;
    for (Eigen::Index k = 0; k < coeff.size(); ++k) coeff[k] *= std::polar(1.0, -es.eigenvalues()[k] * t);
    const VectorXcd out = v * coeff;
    return StateVector(std::vector<cdouble>(out.data(), out.data() + out.size()));
}

// exp(-i T tau) e_1 for the leading j x j block of a real symmetric
// tridiagonal matrix.
VectorXcd small_exponential(const std::vector<double> &alpha, const std::vector<double> &beta, int j, double tau) {
    MatrixXd tri = MatrixXd::Zero(j, j);
    for (int k = 0; k < j; ++k) {
        tri(k, k) = alpha[k];
        if (k + 1 < j) tri(k, k + 1) = tri(k + 1, k) = beta[k];
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(tri);
    const MatrixXd &q = es.eigenvectors();
    VectorXcd c(j);
    for (int k = 0; k < j; ++k) c[k] = std::polar(q(0, k), -es.eigenvalues()[k] * tau);
    return q.cast<cdouble>() * c;
}

// Lanczos with full reorthogonalization. Each step grows the basis until the
// last coefficient of exp(-iT tau)e_1 drops below tol; if the basis hits the
// size cap first, tau is halved until it does.
bool evolve_krylov(std::vector<cdouble> &vec, const HermitianMatrix &h, double t, const PropagationOptions &opts,
                   PropagationStats &stats) {
    const auto n = static_cast<Eigen::Index>(vec.size());
    const int m_cap = std::max(2, std::min<int>(opts.krylov_max_subspace, static_cast<int>(n)));
    double remaining = t;
    double tau = t;
    std::vector<VectorXcd> basis;
    std::vector<double> alpha, beta;
    std::vector<cdouble> w(vec.size());
    while (remaining > 0.0) {
        if (stats.steps >= opts.krylov_max_steps) return false;
        ++stats.steps;
        tau = std::min(tau, remaining);
        const double norm0 = Eigen::Map<const VectorXcd>(vec.data(), n).norm();
        basis.clear();
        alpha.clear();
        beta.clear();
        basis.emplace_back(Eigen::Map<const VectorXcd>(vec.data(), n) / norm0);
        VectorXcd coeffs;
        bool converged = false;
        for (int j = 1; j <= m_cap; ++j) {
            const VectorXcd &vj = basis.back();
            h.apply(std::span<const cdouble>(vj.data(), vj.size()), w);
            Eigen::Map<VectorXcd> wv(w.data(), n);
            alpha.push_back(vj.dot(wv).real());
            for (int pass = 0; pass < 2; ++pass) {
                for (const auto &b : basis) wv -= b * b.dot(wv);
            }
            beta.push_back(wv.norm());
            const bool breakdown = beta.back() < 1e-13 * (std::abs(alpha.back()) + 1.0);
            coeffs = small_exponential(alpha, beta, j, tau);
            if (breakdown || std::abs(coeffs[j - 1]) < opts.krylov_tol) {
                converged = true;
                break;
            }
            if (j < m_cap) basis.emplace_back(wv / beta.back());
        }
        if (!converged) {
            // Basis is exhausted at this tau; shorten the step and reuse it.
            const int j = static_cast<int>(basis.size());
            do {
                tau *= 0.5;
                if (tau < t * 1e-12) return false;
                coeffs = small_exponential(alpha, beta, j, tau);
            } while (std::abs(coeffs[j - 1]) >= opts.krylov_tol);
        }
        stats.max_subspace = std::max<int>(stats.max_subspace, static_cast<int>(coeffs.size()));
        VectorXcd next = VectorXcd::Zero(n);
        for (Eigen::Index k = 0; k < coeffs.size(); ++k) next += basis[k] * coeffs[k];
        next *= norm0;
        std::copy(next.data(), next.data() + n, vec.begin());
        remaining -= tau;
        if (remaining < t * 1e-15) remaining = 0.0;
        if (converged) tau *= 1.25;
    }
    return true;
}

}  // namespace

StateVector evolve(const StateVector &psi, const HermitianMatrix &h, double t, const PropagationOptions &opts,
                   PropagationStats *stats) {
    check_inputs(psi, h, t);
    PropagationStats local;
    PropagationStats &st = stats ? *stats : local;
    st = PropagationStats{};
    if (t == 0.0) return psi;

    Backend backend = opts.backend;
    if (backend == Backend::kAuto) {
        backend = static_cast<int>(psi.dim()) <= opts.auto_dense_max_dim ? Backend::kDenseEigen : Backend::kKrylov;
    }
    if (backend == Backend::kDenseEigen) {
        st.used = Backend::kDenseEigen;
        st.steps = 1;
        return evolve_dense(psi, h, t);
    }
    st.used = Backend::kKrylov;
    std::vector<cdouble> vec(psi.amplitudes().begin(), psi.amplitudes().end());
    if (evolve_krylov(vec, h, t, opts, st)) return StateVector(std::move(vec));
    if (static_cast<int>(psi.dim()) <= opts.dense_fallback_max_dim) {
        st.fell_back = true;
        st.used = Backend::kDenseEigen;
        return evolve_dense(psi, h, t);
    }
    throw NumericalError("Krylov propagation did not converge within " + std::to_string(opts.krylov_max_steps) +
                         " steps at subspace size " + std::to_string(opts.krylov_max_subspace));
}

MatrixXcd dense_propagator(const HermitianMatrix &h, double t) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h.dense());
    if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
    VectorXcd phases(es.eigenvalues().size());
    for (Eigen::Index k = 0; k < phases.size(); ++k) phases[k] = std::polar(1.0, -es.eigenvalues()[k] * t);
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

StateVector apply_operator(const MatrixXcd &u, const StateVector &psi) {
    if (u.rows() != u.cols() || static_cast<std::size_t>(u.rows()) != psi.dim()) {
        throw ValidationError("operator dimension does not match state");
    }
    const auto amps = psi.amplitudes();
    const VectorXcd out = u * Eigen::Map<const VectorXcd>(amps.data(), static_cast<Eigen::Index>(amps.size()));
    return StateVector(std::vector<cdouble>(out.data(), out.data() + out.size()));
}

}  // namespace qklab
