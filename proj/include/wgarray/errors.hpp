// Copyright 2026 The wgarray Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace wgarray {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input document.
class ParseError : public Error {
   public:
    using Error::Error;
};

/// A value violates a documented precondition (range, bound, dimension).
class ValidationError : public Error {
   public:
    using Error::Error;
};

/// An electrode voltage lies outside [-limit, +limit].
class VoltageBoundError : public ValidationError {
   public:
    VoltageBoundError(int electrode, double volts, double limit)
        : ValidationError("electrode " + std::to_string(electrode) + " voltage " + std::to_string(volts) +
                          " V exceeds limit " + std::to_string(limit) + " V"),
          electrode_(electrode) {}

    int electrode() const noexcept { return electrode_; }

   private:
    int electrode_;
};

/// Solver or eigensolver failure.
class NumericalError : public Error {
   public:
    using Error::Error;
};

}  // namespace wgarray
