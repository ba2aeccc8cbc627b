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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qklab/errors.h"

using namespace qklab;
using cd = std::complex<double>;

namespace {

EnvParams params(double s, double T, double eta = 1.0, double varphi = std::numbers::pi / 2) {
    EnvParams p;
    p.s = s;
    p.T = T;
    p.eta = eta;
    p.varphi = varphi;
    return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(Vartheta, trivial_limits) {
    EXPECT_EQ(vartheta_t(params(3.0, 1.0), 0.0), 0.0);
    for (double t : {0.3, 2.0, 9.0}) EXPECT_EQ(vartheta_t(params(2.7, 1.0, 1.0, 0.0), t), 0.0);
}

TEST(Vartheta, closed_form_s3) {
    // s = 3: int w e^{-w}(1 - cos w t) dw = 1 - (1 - t^2)/(1 + t^2)^2; at t = 1 this is 1.
    EXPECT_NEAR(vartheta_t(params(3.0, 2.0), 1.0), 2.0, 1e-13);
    const auto q = dephasing_exponents_quad(params(3.0, 2.0), 1.0);
    EXPECT_LT(rel(q.vartheta, vartheta_t(params(3.0, 2.0), 1.0)), 1e-6);
}

TEST(BigPhi, trivial_limits) {
    EXPECT_EQ(bigPhi_t(params(3.0, 1.0), 0.0), 0.0);
    for (double t : {0.3, 2.0, 9.0}) EXPECT_EQ(bigPhi_t(params(2.7, 1.0, 1.0, 0.0), t), 0.0);
    EXPECT_THROW(bigPhi_t(params(1.0, 1.0), 1.0), ValidationError);
    EXPECT_THROW(bigPhi_t(params(2.0, -1.0), 1.0), ValidationError);
}

TEST(BigPhi, digamma_path_matches_quadrature) {
    const EnvParams p = params(2.0, 1.0);
    const auto q = dephasing_exponents_quad(p, 2.0);
    EXPECT_LT(rel(bigPhi_t(p, 2.0), q.bigPhi), 1e-6);
}

TEST(BigPhi, continuity_across_s2) {
    for (double t : {0.5, 2.0, 7.0}) {
        // Just inside and just outside each window edge, against quadrature.
        for (double ds : {-1.01e-4, -0.99e-4, 0.99e-4, 1.01e-4}) {
            const EnvParams p = params(2.0 + ds, 1.3);
            EXPECT_LT(rel(bigPhi_t(p, t), dephasing_exponents_quad(p, t).bigPhi), 1e-8) << "s=" << p.s << " t=" << t;
        }
        // No kink at the centre: the second difference is small next to the slope.
        const double lo = bigPhi_t(params(2.0 - 1e-5, 1.3), t);
        const double mid = bigPhi_t(params(2.0, 1.3), t);
        const double hi = bigPhi_t(params(2.0 + 1e-5, 1.3), t);
        EXPECT_LT(std::abs((hi - mid) - (mid - lo)), 1e-3 * std::abs(hi - lo));
    }
}

TEST(BigPhi, inside_window_off_center_matches_quadrature) {
    for (double ds : {-9e-5, -5e-5, 3e-5, 8e-5}) {
        for (double T : {0.7, 4.0}) {
            const EnvParams p = params(2.0 + ds, T);
            for (double t : {0.4, 3.6, 9.0}) {
                EXPECT_LT(rel(bigPhi_t(p, t), dephasing_exponents_quad(p, t).bigPhi), 1e-8)
                    << "s=" << p.s << " T=" << T << " t=" << t;
            }
        }
    }
}

TEST(BigPhi, zero_temperature_matches_quadrature) {
    const EnvParams p = params(2.5, 0.0);
    const auto q = dephasing_exponents_quad(p, 1.7);
    EXPECT_LT(rel(bigPhi_t(p, 1.7), q.bigPhi), 1e-6);
    // coth -> 1: Phi equals (1 - cos) / sin times vartheta.
    EXPECT_NEAR(bigPhi_t(p, 1.7), vartheta_t(p, 1.7), 1e-12);
}

TEST(DephasingFactor, examples) {
    EXPECT_EQ(dephasing_factor(params(3.0, 1.0), 0.0), cd(1.0));
    EXPECT_EQ(dephasing_factor(params(3.0, 1.0, 1.0, 0.0), 4.0), cd(1.0));
    EXPECT_EQ(dephasing_factor_quad(params(3.0, 1.0), 0.0), cd(1.0));
    EXPECT_EQ(dephasing_factor_quad(params(3.0, 1.0, 1.0, 0.0), 4.0), cd(1.0));
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> us(1.1, 6.5), uT(0.5, 4.5), ut(0.0, 20.0), uph(0.0, 6.28);
    for (int i = 0; i < 50; ++i) {
        const EnvParams p = params(us(rng), uT(rng), 0.3, uph(rng));
        const double t = ut(rng);
        const cd f = dephasing_factor(p, t);
        EXPECT_NEAR(std::abs(f), std::exp(-bigPhi_t(p, t)), 1e-12);
        EXPECT_LE(std::abs(f), 1.0 + 1e-12);
    }
}

TEST(DephasingFactor, closed_form_vs_quadrature_sweep) {
    std::mt19937_64 rng(20);
    std::uniform_real_distribution<double> us(1.1, 6.5), uT(0.5, 4.5), ut(0.05, 20.0);
    for (int i = 0; i < 20; ++i) {
        const EnvParams p = params(us(rng), uT(rng), 0.1);
        const double t = ut(rng);
        const cd closed = dephasing_factor(p, t), quad = dephasing_factor_quad(p, t);
        EXPECT_LT(std::abs(closed - quad) / std::abs(quad), 1e-6) << "s=" << p.s << " T=" << p.T << " t=" << t;
    }
}

TEST(TraceDistance, examples) {
    const Density2 zero{1.0, 0.0, 0.0, 0.0};
    const Density2 one{0.0, 0.0, 0.0, 1.0};
    EXPECT_NEAR(trace_distance_2x2(zero, zero), 0.0, 1e-15);
    EXPECT_NEAR(trace_distance_2x2(zero, one), 1.0, 1e-15);
    const Density2 bad_trace{0.7, 0.0, 0.0, 0.7};
    EXPECT_THROW(trace_distance_2x2(bad_trace, zero), ValidationError);
    const Density2 negative{0.5, 0.9, 0.9, 0.5};
    EXPECT_THROW(trace_distance_2x2(negative, zero), ValidationError);
}

TEST(TraceDistance, dephased_plus_minus_pair_equals_modulus) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> us(1.1, 6.5), uT(0.5, 4.5), ut(0.0, 10.0);
    for (int i = 0; i < 50; ++i) {
        const EnvParams p = params(us(rng), uT(rng), 0.1);
        const double t = ut(rng);
        const cd phi = dephasing_factor(p, t);
        const Density2 plus{0.5, 0.5 * phi, 0.5 * std::conj(phi), 0.5};
        const Density2 minus{0.5, -0.5 * phi, -0.5 * std::conj(phi), 0.5};
        EXPECT_NEAR(trace_distance_2x2(plus, minus), std::abs(phi), 1e-12);
    }
}

TEST(Blp, monotone_profile_gives_zero) {
    const std::vector<double> decreasing{1.0, 0.8, 0.5, 0.5, 0.1};
    EXPECT_EQ(positive_increment_sum(decreasing), 0.0);
    const std::vector<double> revival{1.0, 0.5, 0.7, 0.6, 0.9};
    EXPECT_NEAR(positive_increment_sum(revival), 0.5, 1e-15);
    // Additivity over a split at a grid point.
    const std::span<const double> all(revival);
    EXPECT_NEAR(positive_increment_sum(all.subspan(0, 3)) + positive_increment_sum(all.subspan(2)),
                positive_increment_sum(all), 1e-15);
}

TEST(Blp, markovian_and_non_markovian_points) {
    BlpOptions o;
    const BlpResult markov = blp_measure(params(1.5, 4.5), o);
    EXPECT_EQ(markov.value, 0.0);
    const BlpResult nm = blp_measure(params(6.0, 0.5), o);
    EXPECT_GT(nm.value, 0.0);
    EXPECT_LT(nm.achieved_change, 1e-4);
    EXPECT_THROW(blp_measure(params(2.0, 1.0), BlpOptions{.t_max = 0.0}), ValidationError);
}

TEST(Blp, refinement_cap_reported) {
    BlpOptions o;
    o.n_grid = 4;
    o.max_grid = 8;
    o.refine_tol = 0.0;
    EXPECT_THROW(blp_measure(params(4.0, 0.5, 0.1), o), NumericalError);
}
