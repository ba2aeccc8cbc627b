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

namespace qklab {

/// Gamma function for x > 0 (Lanczos approximation, g = 7).
double gamma_fn(double x);

/// Hurwitz zeta sum_{n>=0} (q + n)^{-s} for real s with |s - 1| > 1e-4 and
/// Re(q) > 0, by Euler-Maclaurin summation with Bernoulli terms up to B_12.
std::complex<double> hurwitz_zeta(double s, std::complex<double> q);

/// Digamma psi(q) for Re(q) > 0.
std::complex<double> digamma(std::complex<double> q);

}  // namespace qklab
