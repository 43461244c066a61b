// Copyright 2026 The Autobid Chaos Authors
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace autobid {

// Root of every error thrown by the library. The CLI maps the three direct
// subclasses onto its exit codes (2, 3 and 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad parameters, malformed files, violated preconditions.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Integration or iteration could not be carried out numerically.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A state became non-finite or crossed a divergence guard.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, double last_good_time)
      : NumericalError(what), last_good_time_(last_good_time) {}
  double last_good_time() const { return last_good_time_; }

 private:
  double last_good_time_;
};

// The adaptive step collapsed below the underflow threshold.
class StiffnessError : public NumericalError {
 public:
  StiffnessError(const std::string& what, std::size_t coordinate, double time)
      : NumericalError(what), coordinate_(coordinate), time_(time) {}
  std::size_t coordinate() const { return coordinate_; }
  double time() const { return time_; }

 private:
  std::size_t coordinate_;
  double time_;
};

// A construction cannot meet its requested accuracy, or a simulation left
// the domain where its guarantees hold.
class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace autobid
