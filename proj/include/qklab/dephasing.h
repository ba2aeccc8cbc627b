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

#include <array>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

namespace qklab {

/// Bosonic bath of the biased spin-boson model with a super-Ohmic spectral
/// density J(w) = eta w^s wc^{1-s} exp(-w/wc). Units: hbar = k_B = 1, so the
/// temperature is k_B T / (hbar wc) and times are in units of 1/wc.
struct EnvParams {
    double s = 3.0;       // ohmicity, > 1
    double T = 1.0;       // temperature, >= 0
    double eta = 1.0;     // coupling strength, > 0
    double omega_c = 1.0; // cutoff frequency, > 0
    double varphi = std::numbers::pi / 2;  // relative coupling phase

    void validate() const;
};

/// Imaginary exponent vartheta(t) of the dephasing factor (closed form).
double vartheta_t(const EnvParams &p, double t);
/// Decay exponent Phi(t) of the dephasing factor (closed form, Hurwitz zeta
/// combination; digamma limit within 1e-4 of s = 2).
double bigPhi_t(const EnvParams &p, double t);
/// exp(-i vartheta(t) - Phi(t)).
std::complex<double> dephasing_factor(const EnvParams &p, double t);

/// Both exponents by direct adaptive quadrature of the spectral integrals.
struct QuadratureExponents {
    double vartheta;
    double bigPhi;
};
QuadratureExponents dephasing_exponents_quad(const EnvParams &p, double t);
/// exp(-i vartheta - Phi) with both exponents from quadrature.
std::complex<double> dephasing_factor_quad(const EnvParams &p, double t);

/// Trace distance of two 2x2 density matrices (row-major).
using Density2 = std::array<std::complex<double>, 4>;
double trace_distance_2x2(const Density2 &rho1, const Density2 &rho2);

struct BlpResult {
    double value = 0.0;       // non-Markovianity measure
    int n_grid = 0;           // grid intervals actually used
    double achieved_change = 0.0;  // |M(n) - M(n/2)| at the last refinement
};

struct BlpOptions {
    double t_max = 20.0;
    int n_grid = 4000;
    double refine_tol = 1e-4;
    int max_grid = 1 << 20;
};

/// Sum of positive increments of |phi(t)| over a uniform grid on
/// [0, t_max], doubling the grid until successive values agree to
/// refine_tol. Throws NumericalError if max_grid is reached first.
BlpResult blp_measure(const EnvParams &p, const BlpOptions &opts = {});

/// Positive-increment sum of an already sampled trace-distance profile.
double positive_increment_sum(std::span<const double> profile);

}  // namespace qklab
