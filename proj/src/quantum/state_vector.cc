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

#include "qklab/state_vector.h"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "qklab/errors.h"

namespace qklab {

StateVector::StateVector(int n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits < 1 || n_qubits > 30) {
        throw ValidationError("qubit count must be in [1, 30], got " + std::to_string(n_qubits));
    }
    amps_.assign(std::size_t{1} << n_qubits, cdouble{0.0, 0.0});
    amps_[0] = 1.0;
}

StateVector::StateVector(std::vector<cdouble> amplitudes) : amps_(std::move(amplitudes)) {
    if (amps_.size() < 2 || !std::has_single_bit(amps_.size())) {
        throw ValidationError("amplitude count must be a power of two >= 2, got " + std::to_string(amps_.size()));
    }
    n_qubits_ = std::countr_zero(amps_.size());
}

StateVector StateVector::basis(int n_qubits, std::uint64_t index) {
    StateVector s(n_qubits);
    if (index >= s.dim()) {
        throw ValidationError("basis index " + std::to_string(index) + " out of range");
    }
    s.amps_[0] = 0.0;
    s.amps_[index] = 1.0;
    return s;
}

double StateVector::norm() const {
    double acc = 0.0;
    for (const auto &a : amps_) acc += std::norm(a);
    return std::sqrt(acc);
}

void StateVector::normalize() {
    const double n = norm();
    if (!(n > 0.0)) throw NumericalError("cannot normalize a zero state");
    for (auto &a : amps_) a /= n;
}

std::uint64_t StateVector::mask(int qubit) const {
    check_qubit(qubit);
    return std::uint64_t{1} << (n_qubits_ - qubit);
}

void StateVector::check_qubit(int qubit) const {
    if (qubit < 1 || qubit > n_qubits_) {
        throw ValidationError("qubit index " + std::to_string(qubit) + " out of range [1, " +
                              std::to_string(n_qubits_) + "]");
    }
}

void StateVector::check_pair(int control, int target) const {
    check_qubit(control);
    check_qubit(target);
    if (control == target) {
        throw ValidationError("control and target must differ, both are " + std::to_string(control));
    }
}

StateVector &StateVector::rx(int qubit, double angle) {
    const std::uint64_t m = mask(qubit);
    const double c = std::cos(angle / 2);
    const cdouble mis{0.0, -std::sin(angle / 2)};
    for (std::uint64_t i = 0; i < amps_.size(); ++i) {
        if (i & m) continue;
        const cdouble a0 = amps_[i];
        const cdouble a1 = amps_[i | m];
        amps_[i] = c * a0 + mis * a1;
        amps_[i | m] = mis * a0 + c * a1;
    }
    return *this;
}

StateVector &StateVector::h(int qubit) {
    const std::uint64_t m = mask(qubit);
    const double r = 1.0 / std::numbers::sqrt2;
    for (std::uint64_t i = 0; i < amps_.size(); ++i) {
        if (i & m) continue;
        const cdouble a0 = amps_[i];
        const cdouble a1 = amps_[i | m];
        amps_[i] = r * (a0 + a1);
        amps_[i | m] = r * (a0 - a1);
    }
    return *this;
}

StateVector &StateVector::phase(int qubit, double angle) {
    const std::uint64_t m = mask(qubit);
    const cdouble p = std::polar(1.0, angle);
    for (std::uint64_t i = 0; i < amps_.size(); ++i) {
        if (i & m) amps_[i] *= p;
    }
    return *this;
}

StateVector &StateVector::cnot(int control, int target) {
    check_pair(control, target);
    const std::uint64_t cm = mask(control);
    const std::uint64_t tm = mask(target);
    for (std::uint64_t i = 0; i < amps_.size(); ++i) {
        if ((i & cm) && !(i & tm)) std::swap(amps_[i], amps_[i | tm]);
    }
    return *this;
}

// (I - Z)(I - X) = 4 |1><1| (x) |-><-|, a rank-one projector P scaled by 4,
// so the exponential collapses to I + (e^{-4i theta} - 1) P.
StateVector &StateVector::noisy_cnot(int control, int target, double theta) {
    check_pair(control, target);
    const std::uint64_t cm = mask(control);
    const std::uint64_t tm = mask(target);
    const cdouble g = std::polar(1.0, -4.0 * theta) - 1.0;
    for (std::uint64_t i = 0; i < amps_.size(); ++i) {
        if (!(i & cm) || (i & tm)) continue;
        const cdouble a0 = amps_[i];
        const cdouble a1 = amps_[i | tm];
        // <-|a> = (a0 - a1)/sqrt2; P a = <-|a> |->.
        const cdouble shift = 0.5 * g * (a0 - a1);
        amps_[i] = a0 + shift;
        amps_[i | tm] = a1 - shift;
    }
    return *this;
}

StateVector apply_rx(StateVector state, int qubit, double angle) { return std::move(state.rx(qubit, angle)); }
StateVector apply_h(StateVector state, int qubit) { return std::move(state.h(qubit)); }
StateVector apply_phase(StateVector state, int qubit, double angle) {
    return std::move(state.phase(qubit, angle));
}
StateVector apply_cnot(StateVector state, int control, int target) {
    return std::move(state.cnot(control, target));
}
StateVector apply_noisy_cnot(StateVector state, int control, int target, double theta) {
    return std::move(state.noisy_cnot(control, target, theta));
}

cdouble inner_product(std::span<const cdouble> s1, std::span<const cdouble> s2) {
    if (s1.size() != s2.size()) {
        throw ValidationError("inner product dimension mismatch: " + std::to_string(s1.size()) + " vs " +
                              std::to_string(s2.size()));
    }
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < s1.size(); ++i) {
        const double ar = s1[i].real(), ai = s1[i].imag();
        const double br = s2[i].real(), bi = s2[i].imag();
        re += ar * br + ai * bi;
        im += ar * bi - ai * br;
    }
    return {re, im};
}

cdouble inner_product(const StateVector &s1, const StateVector &s2) {
    return inner_product(s1.amplitudes(), s2.amplitudes());
}

double expectation_z(const StateVector &state, int qubit) {
    const std::uint64_t m = state.mask(qubit);
    double acc = 0.0;
    const auto amps = state.amplitudes();
    for (std::uint64_t i = 0; i < amps.size(); ++i) {
        acc += (i & m) ? -std::norm(amps[i]) : std::norm(amps[i]);
    }
    return acc;
}

}  // namespace qklab
