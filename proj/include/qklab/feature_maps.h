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

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qklab/propagate.h"
#include "qklab/rydberg.h"
#include "qklab/state_vector.h"

namespace qklab {

enum class MapKind : std::uint8_t { kDigital = 1, kAnalog = 2, kHybrid = 3, kZz = 4 };

std::string_view map_kind_name(MapKind kind);
/// Parses "digital", "analog", "hybrid" or "zz".
MapKind parse_map_kind(std::string_view name);

/// Gaussian operational noise. Frequencies in rad/us, positions in um.
struct NoiseSpec {
    double sigma_detuning = 0.1;
    double sigma_rabi_rel = 0.01;
    double sigma_position = 0.1;
    double sigma_cnot_theta = 0.035;
    int ensemble_size = 1;

    void validate() const;
    bool is_zero() const {
        return sigma_detuning == 0.0 && sigma_rabi_rel == 0.0 && sigma_position == 0.0 && sigma_cnot_theta == 0.0;
    }
    static NoiseSpec none(int ensemble_size = 1);
};

/// One realisation of the noisy circuit parameters.
struct NoiseDraw {
    double detuning_shift = 0.0;  // shared by all atoms
    double rabi_scale = 1.0;
    std::vector<double> position_shifts;  // per atom
    std::vector<double> cnot_thetas;      // per CNOT, in circuit order

    static NoiseDraw ideal(int n_atoms, int n_cnots);
};

struct CircuitShape {
    int n_atoms = 0;
    int n_cnots = 0;
};

CircuitShape circuit_shape(MapKind kind, int d);

NoiseDraw sample_noise(const NoiseSpec &spec, const CircuitShape &shape, std::mt19937_64 &rng);

/// Stream for member `m` of the ensemble of `feature_id` under `seed`.
std::mt19937_64 member_stream(std::uint64_t seed, std::uint64_t feature_id, std::uint64_t m);

/// RX(pi x/2) layer, CNOT chain, RX(pi x/2) layer.
StateVector encode_digital(std::span<const double> x, const NoiseDraw *noise = nullptr);
/// exp(-i H(x) t)|0...0> on the chain in `geometry`.
StateVector encode_analog(std::span<const double> x, const RydbergGeometry &geometry,
                          const NoiseDraw *noise = nullptr, const PropagationOptions &opts = {});
/// RX layer, evolution under H(0), RX layer.
StateVector encode_hybrid(std::span<const double> x, const RydbergGeometry &geometry,
                          const NoiseDraw *noise = nullptr, const PropagationOptions &opts = {});
/// Same as the ideal encode_hybrid but with a precomputed exp(-i H(0) t).
StateVector encode_hybrid(std::span<const double> x, const Eigen::MatrixXcd &u0);
StateVector encode_zz(std::span<const double> x);
/// The ZZ circuit with parameters `x` applied to an arbitrary state.
StateVector &apply_zz_layer(StateVector &psi, std::span<const double> x);

/// Geometry with drive scaling and position shifts of `noise` applied.
RydbergGeometry perturbed_geometry(const RydbergGeometry &geometry, const NoiseDraw &noise);

/// A feature map bound to its dimension and, for analog kinds, its chain.
class FeatureMap {
   public:
    FeatureMap(MapKind kind, int d, double a_over_rb = 1.05, PropagationOptions opts = {});
    FeatureMap(MapKind kind, RydbergGeometry geometry, PropagationOptions opts = {});

    MapKind kind() const { return kind_; }
    int dim() const { return d_; }
    const RydbergGeometry &geometry() const { return geometry_; }
    const PropagationOptions &propagation() const { return opts_; }
    CircuitShape shape() const { return circuit_shape(kind_, d_); }

    StateVector encode(std::span<const double> x, const NoiseDraw *noise = nullptr) const;

   private:
    MapKind kind_;
    int d_;
    RydbergGeometry geometry_;
    PropagationOptions opts_;
    // Ideal hybrid propagator, shared by all samples.
    std::shared_ptr<const Eigen::MatrixXcd> u0_;
};

/// Pure-state decomposition of the noisy encoded state.
struct NoiseEnsemble {
    std::uint64_t feature_id = 0;
    std::vector<StateVector> states;
    NoiseSpec spec;
    std::uint64_t seed = 0;

    int size() const { return static_cast<int>(states.size()); }
    /// Members as columns of a dim x M matrix.
    Eigen::MatrixXcd matrix() const;
};

/// M = spec.ensemble_size members; member m uses member_stream(seed, feature_id, m).
NoiseEnsemble build_ensemble(std::span<const double> x, std::uint64_t feature_id, const FeatureMap &map,
                             const NoiseSpec &spec, std::uint64_t seed);

}  // namespace qklab
