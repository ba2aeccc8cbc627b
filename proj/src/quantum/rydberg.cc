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

#include "qklab/rydberg.h"

#include <cmath>
#include <string>

#include "qklab/errors.h"

namespace qklab {

double blockade_radius(double c6, double rabi) { return std::pow(c6 / rabi, 1.0 / 6.0); }

double RydbergGeometry::blockade_radius() const { return qklab::blockade_radius(c6, rabi); }

double RydbergGeometry::interaction(int mu, int nu) const {
    const double r = std::abs(positions.at(mu - 1) - positions.at(nu - 1));
    if (!(r > 0.0)) {
        throw ValidationError("atoms " + std::to_string(mu) + " and " + std::to_string(nu) + " coincide");
    }
    const double r3 = r * r * r;
    return c6 / (r3 * r3);
}

void RydbergGeometry::validate() const {
    if (positions.empty()) throw ValidationError("geometry needs at least one atom");
    for (double p : positions) {
        if (!std::isfinite(p)) throw ValidationError("non-finite atom position");
    }
    for (std::size_t i = 1; i < positions.size(); ++i) {
        if (!(positions[i] > positions[i - 1])) {
            throw ValidationError("atom positions must be strictly increasing (atoms " + std::to_string(i) +
                                  " and " + std::to_string(i + 1) + ")");
        }
    }
    if (!(rabi > 0.0) || !(c6 > 0.0) || !(time > 0.0) || !std::isfinite(detuning)) {
        throw ValidationError("geometry requires rabi > 0, c6 > 0, time > 0 and finite detuning");
    }
    const double rb = blockade_radius();
    if (!std::isfinite(rb) || !(rb > 0.0)) throw ValidationError("blockade radius is not finite");
}

RydbergGeometry RydbergGeometry::chain(int n, double a_over_rb, double rabi, double detuning, double c6,
                                       double time) {
    if (n < 1) throw ValidationError("chain needs at least one atom");
    if (!(a_over_rb > 0.0)) throw ValidationError("a_over_rb must be positive");
    RydbergGeometry g;
    g.rabi = rabi;
    g.detuning = detuning;
    g.c6 = c6;
    g.time = time;
    const double a = a_over_rb * qklab::blockade_radius(c6, rabi);
    g.positions.resize(n);
    for (int i = 0; i < n; ++i) g.positions[i] = a * i;
    g.validate();
    return g;
}

HermitianMatrix::HermitianMatrix(Sparse m, double tol) : m_(std::move(m)) {
    m_.makeCompressed();
    if (m_.rows() != m_.cols()) throw ValidationError("Hamiltonian must be square");
    const double defect = hermiticity_defect();
    if (defect > tol) {
        throw ValidationError("matrix is not Hermitian (defect " + std::to_string(defect) + ")");
    }
}

HermitianMatrix HermitianMatrix::from_dense(const Eigen::MatrixXcd &m, double tol) {
    return HermitianMatrix(Sparse(m.sparseView()), tol);
}

double HermitianMatrix::hermiticity_defect() const {
    const Sparse diff = m_ - Sparse(m_.adjoint());
    double worst = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k) {
        for (Sparse::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    }
    return worst;
}

void HermitianMatrix::apply(std::span<const cdouble> x, std::span<cdouble> y) const {
    const auto n = static_cast<std::size_t>(dim());
    if (x.size() != n || y.size() != n) throw ValidationError("Hamiltonian/vector dimension mismatch");
    for (int r = 0; r < m_.outerSize(); ++r) {
        cdouble acc{0.0, 0.0};
        for (Sparse::InnerIterator it(m_, r); it; ++it) acc += it.value() * x[it.col()];
        y[r] = acc;
    }
}

double HermitianMatrix::expectation(const StateVector &psi) const {
    std::vector<cdouble> hpsi(psi.dim());
    apply(psi.amplitudes(), hpsi);
    return inner_product(psi.amplitudes(), std::span<const cdouble>(hpsi)).real();
}

HermitianMatrix build_rydberg_hamiltonian(const RydbergGeometry &geometry, std::span<const double> x,
                                          double detuning_offset) {
    geometry.validate();
    const int n = geometry.n_atoms();
    if (static_cast<int>(x.size()) != n) {
        throw ValidationError("feature length " + std::to_string(x.size()) + " does not match atom count " +
                              std::to_string(n));
    }
    for (double v : x) {
        if (!std::isfinite(v)) throw ValidationError("non-finite feature component");
    }

    // Pair couplings, computed once.
    std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
    for (int mu = 1; mu <= n; ++mu) {
        for (int nu = mu + 1; nu <= n; ++nu) v[(mu - 1) * n + (nu - 1)] = geometry.interaction(mu, nu);
    }

    const std::uint64_t dim = std::uint64_t{1} << n;
    const double half_rabi = geometry.rabi / 2;
    std::vector<Eigen::Triplet<cdouble>> triplets;
    triplets.reserve(dim * (n + 1));
    for (std::uint64_t i = 0; i < dim; ++i) {
        double diag = 0.0;
        for (int mu = 1; mu <= n; ++mu) {
            const bool up = (i >> (n - mu)) & 1u;
            const double z = up ? -1.0 : 1.0;
            diag += 0.5 * (geometry.detuning * x[mu - 1] + detuning_offset) * z;
            if (!up) continue;
            for (int nu = mu + 1; nu <= n; ++nu) {
                if ((i >> (n - nu)) & 1u) diag += v[(mu - 1) * n + (nu - 1)];
            }
        }
        triplets.emplace_back(i, i, diag);
        for (int mu = 1; mu <= n; ++mu) {
            triplets.emplace_back(i, i ^ (std::uint64_t{1} << (n - mu)), half_rabi);
        }
    }
    HermitianMatrix::Sparse h(dim, dim);
    h.setFromTriplets(triplets.begin(), triplets.end());
    return HermitianMatrix(std::move(h));
}

}  // namespace qklab
