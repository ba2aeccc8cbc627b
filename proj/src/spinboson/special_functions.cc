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

#include "qklab/special_functions.h"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "qklab/errors.h"

namespace qklab {
namespace {

using cd = std::complex<double>;

// B_2k / (2k)! for k = 1..7. The k = 7 entry is only used to bound the
// truncation error.
constexpr std::array<double, 7> kBernoulliOverFactorial = {
    1.0 / 12.0,                      // B2/2!
    -1.0 / 720.0,                    // B4/4!
    1.0 / 30240.0,                   // B6/6!
    -1.0 / 1209600.0,                // B8/8!
    1.0 / 47900160.0,                // B10/10!
    -691.0 / 1307674368000.0,        // B12/12!
    1.0 / 74724249600.0,             // B14/14!
};

// Lanczos coefficients for g = 7, n = 9.
constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7,
};

double lanczos_gamma(double x) {
    if (x < 0.5) return std::numbers::pi / (std::sin(std::numbers::pi * x) * lanczos_gamma(1.0 - x));
    x -= 1.0;
    double a = kLanczos[0];
    const double t = x + kLanczosG + 0.5;
    for (std::size_t i = 1; i < kLanczos.size(); ++i) a += kLanczos[i] / (x + static_cast<double>(i));
    return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, x + 0.5) * std::exp(-t) * a;
}

}  // namespace

double gamma_fn(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw ValidationError("gamma_fn requires a positive finite argument, got " + std::to_string(x));
    }
    // Shift small arguments up so the Lanczos sum is evaluated where it is
    // most accurate, then divide back down.
    double scale = 1.0;
    while (x < 1.0) {
        scale *= x;
        x += 1.0;
    }
    return lanczos_gamma(x) / scale;
}

cd hurwitz_zeta(double s, cd q) {
    if (!std::isfinite(s) || std::abs(s - 1.0) <= 1e-4) {
        throw ValidationError("hurwitz_zeta: s = " + std::to_string(s) + " is at or near the pole s = 1");
    }
    if (!(q.real() > 0.0)) throw ValidationError("hurwitz_zeta requires Re(q) > 0");

    // Partial sum is grown incrementally; the tail is re-evaluated at each N
    // until the first omitted Bernoulli term is negligible.
    cd partial{0.0, 0.0};
    int n_done = 0;
    int n_target = std::max(8, static_cast<int>(std::ceil(10.0 - q.real())));
    for (int attempt = 0; attempt < 40; ++attempt) {
        for (; n_done < n_target; ++n_done) partial += std::pow(q + static_cast<double>(n_done), -s);
        const cd z = q + static_cast<double>(n_target);
        const cd zs = std::pow(z, -s);
        cd tail = z * zs / (s - 1.0) + 0.5 * zs;
        // Rising factorial s (s+1) ... (s+2k-2) times z^{-s-2k+1}.
        cd term_power = zs / z;
        double rising = s;
        const cd inv_z2 = 1.0 / (z * z);
        for (int k = 1; k <= 6; ++k) {
            tail += kBernoulliOverFactorial[k - 1] * rising * term_power;
            rising *= (s + 2 * k - 1) * (s + 2 * k);
            term_power *= inv_z2;
        }
        const cd result = partial + tail;
        const double omitted = std::abs(kBernoulliOverFactorial[6] * rising * term_power);
        if (omitted < 1e-13 * std::abs(result)) return result;
        n_target *= 2;
    }
    throw NumericalError("hurwitz_zeta did not converge for s = " + std::to_string(s));
}

cd digamma(cd q) {
    if (!(q.real() > 0.0)) throw ValidationError("digamma requires Re(q) > 0");
    // psi(q) = psi(q + n) - sum_{k<n} 1/(q + k); asymptotic series once |q| is large.
    cd shift{0.0, 0.0};
    while (std::abs(q) < 16.0) {
        shift -= 1.0 / q;
        q += 1.0;
    }
    const cd inv2 = 1.0 / (q * q);
    // sum_k B_2k / (2k q^{2k}) for k = 1..7.
    constexpr std::array<double, 7> b2k = {1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730, 7.0 / 6};
    cd series{0.0, 0.0};
    cd p = inv2;
    for (int k = 1; k <= 7; ++k) {
        series += b2k[k - 1] / (2.0 * k) * p;
        p *= inv2;
    }
    return std::log(q) - 0.5 / q - series + shift;
}

}  // namespace qklab
