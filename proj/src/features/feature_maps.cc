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

#include "qklab/feature_maps.h"

#include <cmath>
#include <numbers>
#include <string>

#include "qklab/errors.h"

namespace qklab {
namespace {

void check_features(std::span<const double> x, int expected) {
    if (x.empty()) throw ValidationError("feature vector is empty");
    if (expected > 0 && static_cast<int>(x.size()) != expected) {
        throw ValidationError("feature length " + std::to_string(x.size()) + " does not match register size " +
                              std::to_string(expected));
    }
    for (double v : x) {
        if (!std::isfinite(v)) throw ValidationError("non-finite feature component");
    }
}

void rx_layer(StateVector &psi, std::span<const double> x) {
    const double half_pi = 0.5 * std::numbers::pi;
    for (std::size_t mu = 0; mu < x.size(); ++mu) psi.rx(static_cast<int>(mu) + 1, half_pi * x[mu]);
}

void check_draw(const NoiseDraw &noise, const CircuitShape &shape) {
    if (static_cast<int>(noise.position_shifts.size()) != shape.n_atoms) {
        throw ValidationError("noise draw has " + std::to_string(noise.position_shifts.size()) +
                              " position shifts for " + std::to_string(shape.n_atoms) + " atoms");
    }
    if (static_cast<int>(noise.cnot_thetas.size()) != shape.n_cnots) {
        throw ValidationError("noise draw has " + std::to_string(noise.cnot_thetas.size()) + " CNOT angles for " +
                              std::to_string(shape.n_cnots) + " gates");
    }
}

}  // namespace

std::string_view map_kind_name(MapKind kind) {
    switch (kind) {
        case MapKind::kDigital:
            return "digital";
        case MapKind::kAnalog:
            return "analog";
        case MapKind::kHybrid:
            return "hybrid";
        case MapKind::kZz:
            return "zz";
    }
    return "unknown";
}

MapKind parse_map_kind(std::string_view name) {
    if (name == "digital") return MapKind::kDigital;
    if (name == "analog") return MapKind::kAnalog;
    if (name == "hybrid") return MapKind::kHybrid;
    if (name == "zz") return MapKind::kZz;
    throw ValidationError("unknown feature map '" + std::string(name) + "'");
}

void NoiseSpec::validate() const {
    for (double s : {sigma_detuning, sigma_rabi_rel, sigma_position, sigma_cnot_theta}) {
        if (!(s >= 0.0) || !std::isfinite(s)) throw ValidationError("noise sigmas must be finite and >= 0");
    }
    if (ensemble_size < 1) throw ValidationError("ensemble size must be >= 1");
}

NoiseSpec NoiseSpec::none(int ensemble_size) {
    NoiseSpec s;
    s.sigma_detuning = s.sigma_rabi_rel = s.sigma_position = s.sigma_cnot_theta = 0.0;
    s.ensemble_size = ensemble_size;
    return s;
}

NoiseDraw NoiseDraw::ideal(int n_atoms, int n_cnots) {
    NoiseDraw d;
    d.position_shifts.assign(n_atoms, 0.0);
    d.cnot_thetas.assign(n_cnots, 0.25 * std::numbers::pi);
    return d;
}

CircuitShape circuit_shape(MapKind kind, int d) {
    if (d < 1) throw ValidationError("feature dimension must be >= 1");
    switch (kind) {
        case MapKind::kDigital:
            return {0, d - 1};
        case MapKind::kAnalog:
        case MapKind::kHybrid:
            return {d, 0};
        case MapKind::kZz:
            return {0, 0};
    }
    return {};
}

NoiseDraw sample_noise(const NoiseSpec &spec, const CircuitShape &shape, std::mt19937_64 &rng) {
    spec.validate();
    std::normal_distribution<double> g(0.0, 1.0);
    NoiseDraw d;
    // Fixed draw order: detuning, Rabi, positions, CNOTs. Zero sigmas still
    // consume the stream so that the layout never depends on the noise settings.
    d.detuning_shift = spec.sigma_detuning * g(rng);
    d.rabi_scale = 1.0 + spec.sigma_rabi_rel * g(rng);
    d.position_shifts.resize(shape.n_atoms);
    for (double &s : d.position_shifts) s = spec.sigma_position * g(rng);
    d.cnot_thetas.resize(shape.n_cnots);
    for (double &t : d.cnot_thetas) t = 0.25 * std::numbers::pi + spec.sigma_cnot_theta * g(rng);
    return d;
}

std::mt19937_64 member_stream(std::uint64_t seed, std::uint64_t feature_id, std::uint64_t m) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),       static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(feature_id), static_cast<std::uint32_t>(feature_id >> 32),
                      static_cast<std::uint32_t>(m),          static_cast<std::uint32_t>(m >> 32)};
    return std::mt19937_64(seq);
}

StateVector encode_digital(std::span<const double> x, const NoiseDraw *noise) {
    check_features(x, 0);
    const int d = static_cast<int>(x.size());
    if (noise) check_draw(*noise, circuit_shape(MapKind::kDigital, d));
    StateVector psi(d);
    rx_layer(psi, x);
    for (int mu = 1; mu < d; ++mu) {
        if (noise) {
            psi.noisy_cnot(mu, mu + 1, noise->cnot_thetas[mu - 1]);
        } else {
            psi.cnot(mu, mu + 1);
        }
    }
    rx_layer(psi, x);
    return psi;
}

RydbergGeometry perturbed_geometry(const RydbergGeometry &geometry, const NoiseDraw &noise) {
    check_draw(noise, {geometry.n_atoms(), 0});
    RydbergGeometry g = geometry;
    g.rabi *= noise.rabi_scale;
    for (int i = 0; i < g.n_atoms(); ++i) g.positions[i] += noise.position_shifts[i];
    g.validate();
    return g;
}

StateVector encode_analog(std::span<const double> x, const RydbergGeometry &geometry, const NoiseDraw *noise,
                          const PropagationOptions &opts) {
    check_features(x, geometry.n_atoms());
    const StateVector zero(geometry.n_atoms());
    if (!noise) return evolve(zero, build_rydberg_hamiltonian(geometry, x), geometry.time, opts);
    const RydbergGeometry g = perturbed_geometry(geometry, *noise);
    return evolve(zero, build_rydberg_hamiltonian(g, x, noise->detuning_shift), g.time, opts);
}

StateVector encode_hybrid(std::span<const double> x, const RydbergGeometry &geometry, const NoiseDraw *noise,
                          const PropagationOptions &opts) {
    check_features(x, geometry.n_atoms());
    const std::vector<double> zeros(x.size(), 0.0);
    StateVector psi(geometry.n_atoms());
    rx_layer(psi, x);
    if (noise) {
        const RydbergGeometry g = perturbed_geometry(geometry, *noise);
        psi = evolve(psi, build_rydberg_hamiltonian(g, zeros, noise->detuning_shift), g.time, opts);
    } else {
        psi = evolve(psi, build_rydberg_hamiltonian(geometry, zeros), geometry.time, opts);
    }
    rx_layer(psi, x);
    return psi;
}

StateVector encode_hybrid(std::span<const double> x, const Eigen::MatrixXcd &u0) {
    check_features(x, 0);
    StateVector psi(static_cast<int>(x.size()));
    if (static_cast<std::size_t>(u0.rows()) != psi.dim() || u0.cols() != u0.rows()) {
        throw ValidationError("hybrid propagator dimension does not match the feature length");
    }
    rx_layer(psi, x);
    psi = apply_operator(u0, psi);
    rx_layer(psi, x);
    return psi;
}

StateVector &apply_zz_layer(StateVector &psi, std::span<const double> x) {
    check_features(x, psi.n_qubits());
    const int d = static_cast<int>(x.size());
    const double pi = std::numbers::pi;
    for (int mu = 1; mu <= d; ++mu) psi.h(mu);
    for (int mu = 1; mu <= d; ++mu) psi.phase(mu, 2.0 * x[mu - 1]);
    for (int mu = 1; mu < d; ++mu) {
        psi.cnot(mu, mu + 1);
        psi.phase(mu + 1, 2.0 * (pi - x[mu - 1]) * (pi - x[mu]));
        psi.cnot(mu, mu + 1);
    }
    return psi;
}

StateVector encode_zz(std::span<const double> x) {
    check_features(x, 0);
    StateVector psi(static_cast<int>(x.size()));
    apply_zz_layer(psi, x);
    return psi;
}

FeatureMap::FeatureMap(MapKind kind, int d, double a_over_rb, PropagationOptions opts)
    : kind_(kind), d_(d), opts_(opts) {
    if (d < 1) throw ValidationError("feature dimension must be >= 1");
    if (kind == MapKind::kAnalog || kind == MapKind::kHybrid) {
        geometry_ = RydbergGeometry::chain(d, a_over_rb);
        *this = FeatureMap(kind, geometry_, opts);
    }
}

FeatureMap::FeatureMap(MapKind kind, RydbergGeometry geometry, PropagationOptions opts)
    : kind_(kind), d_(geometry.n_atoms()), geometry_(std::move(geometry)), opts_(opts) {
    if (kind_ == MapKind::kAnalog || kind_ == MapKind::kHybrid) geometry_.validate();
    if (kind_ == MapKind::kHybrid && (1 << d_) <= opts_.dense_fallback_max_dim) {
        const std::vector<double> zeros(d_, 0.0);
        u0_ = std::make_shared<const Eigen::MatrixXcd>(
            dense_propagator(build_rydberg_hamiltonian(geometry_, zeros), geometry_.time));
    }
}

StateVector FeatureMap::encode(std::span<const double> x, const NoiseDraw *noise) const {
    check_features(x, d_);
    switch (kind_) {
        case MapKind::kDigital:
            return encode_digital(x, noise);
        case MapKind::kAnalog:
            return encode_analog(x, geometry_, noise, opts_);
        case MapKind::kHybrid:
            if (!noise && u0_) return encode_hybrid(x, *u0_);
            return encode_hybrid(x, geometry_, noise, opts_);
        case MapKind::kZz:
            return encode_zz(x);
    }
    throw ValidationError("unknown feature map");
}

Eigen::MatrixXcd NoiseEnsemble::matrix() const {
    if (states.empty()) return {};
    Eigen::MatrixXcd m(static_cast<Eigen::Index>(states[0].dim()), size());
    for (int j = 0; j < size(); ++j) {
        const auto a = states[j].amplitudes();
        for (std::size_t i = 0; i < a.size(); ++i) m(static_cast<Eigen::Index>(i), j) = a[i];
    }
    return m;
}

NoiseEnsemble build_ensemble(std::span<const double> x, std::uint64_t feature_id, const FeatureMap &map,
                             const NoiseSpec &spec, std::uint64_t seed) {
    spec.validate();
    NoiseEnsemble ens;
    ens.feature_id = feature_id;
    ens.spec = spec;
    ens.seed = seed;
    ens.states.reserve(spec.ensemble_size);
    const CircuitShape shape = map.shape();
    for (int m = 0; m < spec.ensemble_size; ++m) {
        try {
            if (spec.is_zero()) {
                ens.states.push_back(map.encode(x));
            } else {
                std::mt19937_64 rng = member_stream(seed, feature_id, static_cast<std::uint64_t>(m));
                const NoiseDraw draw = sample_noise(spec, shape, rng);
                ens.states.push_back(map.encode(x, &draw));
            }
        } catch (const NumericalError &e) {
            throw NumericalError("ensemble member " + std::to_string(m) + " of feature " +
                                 std::to_string(feature_id) + ": " + e.what());
        } catch (const ValidationError &e) {
            throw ValidationError("ensemble member " + std::to_string(m) + " of feature " +
                                  std::to_string(feature_id) + ": " + e.what());
        }
    }
    return ens;
}

}  // namespace qklab
