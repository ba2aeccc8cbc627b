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

#include "qklab/dephasing.h"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <string>

#include "qklab/errors.h"
#include "qklab/special_functions.h"

namespace qklab {
namespace {

using cd = std::complex<double>;

// Half-width of the digamma window around s = 2, where the zeta arguments
// s - 1 approach the pole.
constexpr double kPoleWindow = 1e-4;

// 2 - [(1 + ix)^{s-1} + (1 - ix)^{s-1}] / (1 + x^2)^{s-1}
double vacuum_bracket(double s, double x) {
    const cd a = std::pow(cd(1.0, x), s - 1.0);
    const cd b = std::pow(cd(1.0, -x), s - 1.0);
    const cd br = 2.0 - (a + b) / std::pow(1.0 + x * x, s - 1.0);
    if (std::abs(br.imag()) > 1e-12 * (1.0 + std::abs(br.real()))) {
        throw NumericalError("vacuum bracket has a non-negligible imaginary part");
    }
    return br.real();
}

// Offset from s = 2 of the interpolation nodes used inside the window.
constexpr double kWindowNode = 1e-3;

double direct_zeta_combination(double s, double a, double x) {
    const cd q(a, a * x);
    // zeta(s, conj q) = conj zeta(s, q).
    return 2.0 * hurwitz_zeta(s - 1.0, cd(a, 0.0)).real() - 2.0 * hurwitz_zeta(s - 1.0, q).real();
}

// 2 zeta(s-1, a) - zeta(s-1, a(1+ix)) - zeta(s-1, a(1-ix)). Inside the window
// the value at s = 2 is the limit psi(a(1+ix)) + psi(a(1-ix)) - 2 psi(a), and
// the s dependence comes from the quadratic through that limit and the direct
// sums at s = 2 -/+ kWindowNode, where cancellation against the pole is mild.
double thermal_zeta_combination(double s, double a, double x) {
    const double delta = s - 2.0;
    if (std::abs(delta) >= kPoleWindow) return direct_zeta_combination(s, a, x);
    // psi(conj q) = conj psi(q).
    const double f0 = 2.0 * digamma(cd(a, a * x)).real() - 2.0 * digamma(cd(a, 0.0)).real();
    if (delta == 0.0) return f0;
    const double h = kWindowNode;
    const double fm = direct_zeta_combination(2.0 - h, a, x), fp = direct_zeta_combination(2.0 + h, a, x);
    const double d1 = (fp - fm) / (2.0 * h), d2 = (fp - 2.0 * f0 + fm) / (h * h);
    return f0 + delta * d1 + 0.5 * delta * delta * d2;
}

double one_minus_cos(double wt) {
    const double h = std::sin(0.5 * wt);
    return 2.0 * h * h;
}

// Upper frequency limit beyond which the exponential cutoff leaves less than
// ~1e-14 of relative mass.
double frequency_cutoff(const EnvParams &p) {
    double w = 30.0;
    while (std::pow(w, p.s) * std::exp(-w) > 1e-16 * std::max(1.0, gamma_fn(p.s + 1.0))) w *= 1.25;
    return w * p.omega_c;
}

double coth(double x) { return 1.0 / std::tanh(x); }

// int_0^W f(w) dw split into panels no wider than one half-period of cos(wt).
template <class F>
double integrate_spectral(F f, const EnvParams &p, double t) {
    const double w_max = frequency_cutoff(p);
    double width = p.omega_c;
    if (t > 0.0) width = std::min(width, std::numbers::pi / t);
    const int panels = static_cast<int>(std::ceil(w_max / width));
    width = w_max / panels;
    double total = 0.0;
    // The first panel carries the w^{s-2} type endpoint behaviour.
    boost::math::quadrature::tanh_sinh<double> ts;
    total += ts.integrate(f, 0.0, width, 1e-14);
    for (int k = 1; k < panels; ++k) {
        double err = 0.0;
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, k * width, (k + 1) * width, 12,
                                                                                 1e-13, &err);
    }
    return total;
}

}  // namespace

void EnvParams::validate() const {
    if (!(s > 1.0) || !std::isfinite(s)) throw ValidationError("ohmicity s must be > 1");
    if (!(T >= 0.0) || !std::isfinite(T)) throw ValidationError("temperature must be >= 0");
    if (!(eta > 0.0) || !(omega_c > 0.0)) throw ValidationError("eta and omega_c must be > 0");
    if (!std::isfinite(varphi)) throw ValidationError("varphi must be finite");
}

double vartheta_t(const EnvParams &p, double t) {
    p.validate();
    if (!(t >= 0.0)) throw ValidationError("time must be >= 0");
    if (t == 0.0) return 0.0;
    return p.eta * std::sin(p.varphi) * gamma_fn(p.s - 1.0) * vacuum_bracket(p.s, p.omega_c * t);
}

double bigPhi_t(const EnvParams &p, double t) {
    p.validate();
    if (!(t >= 0.0)) throw ValidationError("time must be >= 0");
    const double dephase = 1.0 - std::cos(p.varphi);
    if (t == 0.0 || dephase == 0.0) return 0.0;
    const double x = p.omega_c * t;
    const double g = gamma_fn(p.s - 1.0);
    const double vacuum = p.eta * dephase * g * vacuum_bracket(p.s, x);
    if (p.T == 0.0) return vacuum;  // coth -> 1
    const double a = p.T / p.omega_c;
    const double thermal = 2.0 * dephase * p.eta * g * std::pow(a, p.s - 1.0) * thermal_zeta_combination(p.s, a, x);
    const double phi = thermal - vacuum;
    if (phi < -1e-10 * (std::abs(thermal) + std::abs(vacuum) + 1.0)) {
        throw NumericalError("Phi(t) evaluated negative: " + std::to_string(phi));
    }
    return std::max(phi, 0.0);
}

cd dephasing_factor(const EnvParams &p, double t) {
    return std::exp(cd(-bigPhi_t(p, t), -vartheta_t(p, t)));
}

QuadratureExponents dephasing_exponents_quad(const EnvParams &p, double t) {
    p.validate();
    if (!(t >= 0.0)) throw ValidationError("time must be >= 0");
    if (t == 0.0) return {0.0, 0.0};
    // J(w)/w^2 = eta w^{s-2} wc^{1-s} e^{-w/wc}
    auto kernel = [&](double w) {
        if (w <= 0.0) return 0.0;
        return p.eta * std::pow(w, p.s - 2.0) * std::pow(p.omega_c, 1.0 - p.s) * std::exp(-w / p.omega_c) *
               one_minus_cos(w * t);
    };
    const double base = integrate_spectral(kernel, p, t);
    double thermal = base;
    if (p.T > 0.0) {
        thermal = integrate_spectral([&](double w) { return w <= 0.0 ? 0.0 : kernel(w) * coth(w / (2.0 * p.T)); },
                                     p, t);
    }
    if (!std::isfinite(base) || !std::isfinite(thermal)) throw NumericalError("spectral quadrature diverged");
    return {2.0 * std::sin(p.varphi) * base, 2.0 * (1.0 - std::cos(p.varphi)) * thermal};
}

cd dephasing_factor_quad(const EnvParams &p, double t) {
    const auto e = dephasing_exponents_quad(p, t);
    return std::exp(cd(-e.bigPhi, -e.vartheta));
}

double trace_distance_2x2(const Density2 &rho1, const Density2 &rho2) {
    for (const Density2 *rho : {&rho1, &rho2}) {
        const auto &m = *rho;
        if (std::abs(m[0] + m[3] - 1.0) > 1e-10) throw ValidationError("density matrix trace differs from 1");
        if (std::abs(m[1] - std::conj(m[2])) > 1e-10 || std::abs(m[0].imag()) > 1e-10 ||
            std::abs(m[3].imag()) > 1e-10) {
            throw ValidationError("density matrix is not Hermitian");
        }
        // Eigenvalues of a unit-trace 2x2 Hermitian matrix: 1/2 +- r.
        const double d = 0.5 * (m[0].real() - m[3].real());
        const double rad = std::sqrt(d * d + std::norm(m[1]));
        if (0.5 - rad < -1e-10) throw ValidationError("density matrix has a negative eigenvalue");
    }
    // rho1 - rho2 is traceless Hermitian with eigenvalues +-r.
    const double d = 0.5 * ((rho1[0] - rho2[0]).real() - (rho1[3] - rho2[3]).real());
    const cd off = rho1[1] - rho2[1];
    return std::sqrt(d * d + std::norm(off));
}

double positive_increment_sum(std::span<const double> profile) {
    double acc = 0.0;
    for (std::size_t i = 1; i < profile.size(); ++i) acc += std::max(0.0, profile[i] - profile[i - 1]);
    return acc;
}

BlpResult blp_measure(const EnvParams &p, const BlpOptions &opts) {
    p.validate();
    if (!(opts.t_max > 0.0) || opts.n_grid < 2) throw ValidationError("blp_measure needs t_max > 0 and n_grid >= 2");
    // Coarse grid values are kept and only the new midpoints are evaluated
    // when the grid doubles.
    int n = opts.n_grid;
    std::vector<double> profile(n + 1);
    for (int i = 0; i <= n; ++i) profile[i] = std::exp(-bigPhi_t(p, opts.t_max * i / n));
    double previous = positive_increment_sum(profile);
    while (true) {
        if (2LL * n > opts.max_grid) {
            throw NumericalError("blp_measure refinement cap reached at n_grid = " + std::to_string(n));
        }
        std::vector<double> fine(2 * n + 1);
        for (int i = 0; i <= n; ++i) fine[2 * i] = profile[i];
        for (int i = 0; i < n; ++i) fine[2 * i + 1] = std::exp(-bigPhi_t(p, opts.t_max * (2 * i + 1) / (2.0 * n)));
        n *= 2;
        profile = std::move(fine);
        const double current = positive_increment_sum(profile);
        const double change = std::abs(current - previous);
        if (change < opts.refine_tol) return {current, n, change};
        previous = current;
    }
}

}  // namespace qklab
