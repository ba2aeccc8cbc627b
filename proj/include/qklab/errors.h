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

#include <stdexcept>
#include <string>

namespace qklab {

/// Input violates a documented precondition (bad index, size mismatch,
/// malformed file). The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
   public:
    explicit ValidationError(const std::string &what) : std::invalid_argument(what) {}
};

/// A numerical routine could not reach its target accuracy. The CLI maps
/// this to exit code 3.
class NumericalError : public std::runtime_error {
   public:
    explicit NumericalError(const std::string &what) : std::runtime_error(what) {}
};

/// Malformed binary input; carries the byte offset where parsing failed.
class ParseError : public ValidationError {
   public:
    ParseError(const std::string &what, std::size_t offset)
        : ValidationError(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const { return offset_; }

   private:
    std::size_t offset_;
};

}  // namespace qklab
