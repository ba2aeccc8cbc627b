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

// Deterministic parallel loop: each index runs on exactly one thread and the
// exception from the lowest failing index is rethrown after the loop.

#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>

namespace qklab::internal {

template <typename Fn>
void parallel_for(std::int64_t n, Fn &&fn) {
    std::exception_ptr first;
    std::int64_t first_index = std::numeric_limits<std::int64_t>::max();
    std::mutex mu;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            fn(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(mu);
            if (i < first_index) {
                first_index = i;
                first = std::current_exception();
            }
        }
    }
    if (first) std::rethrow_exception(first);
}

}  // namespace qklab::internal
