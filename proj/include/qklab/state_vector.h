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

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qklab {

using cdouble = std::complex<double>;

/// Pure state of an ordered qubit register.
///
/// Qubits are numbered 1..n and qubit 1 is the most significant bit of the
/// basis index, so |q1 q2 ... qn> sits at index q1*2^(n-1) + ... + qn.
class StateVector {
   public:
    /// |0...0> on `n_qubits` qubits.
    explicit StateVector(int n_qubits);
    /// Takes ownership of `amplitudes`; length must be a power of two.
    explicit StateVector(std::vector<cdouble> amplitudes);

    static StateVector basis(int n_qubits, std::uint64_t index);

    int n_qubits() const { return n_qubits_; }
    std::size_t dim() const { return amps_.size(); }
    std::span<const cdouble> amplitudes() const { return amps_; }
    std::span<cdouble> mutable_amplitudes() { return amps_; }
    const cdouble &operator[](std::size_t i) const { return amps_[i]; }
    cdouble &operator[](std::size_t i) { return amps_[i]; }

    double norm() const;
    void normalize();

    // In-place gate application. Each validates its qubit arguments and
    // throws ValidationError on bad input.
    StateVector &rx(int qubit, double angle);
    StateVector &h(int qubit);
    StateVector &phase(int qubit, double angle);
    StateVector &cnot(int control, int target);
    /// exp(-i theta (I - Z_c)(I - X_t)); theta = pi/4 is exactly CNOT.
    StateVector &noisy_cnot(int control, int target, double theta);

    /// Bit mask of `qubit` in the basis index.
    std::uint64_t mask(int qubit) const;

    bool operator==(const StateVector &) const = default;

   private:
    void check_qubit(int qubit) const;
    void check_pair(int control, int target) const;

    int n_qubits_;
    std::vector<cdouble> amps_;
};

// Value-returning forms of the gates above.
StateVector apply_rx(StateVector state, int qubit, double angle);
StateVector apply_h(StateVector state, int qubit);
StateVector apply_phase(StateVector state, int qubit, double angle);
StateVector apply_cnot(StateVector state, int control, int target);
StateVector apply_noisy_cnot(StateVector state, int control, int target, double theta);

/// <s1|s2>, conjugate-linear in the first argument.
cdouble inner_product(const StateVector &s1, const StateVector &s2);
cdouble inner_product(std::span<const cdouble> s1, std::span<const cdouble> s2);

/// <psi| Z_qubit |psi>.
double expectation_z(const StateVector &state, int qubit);

}  // namespace qklab
