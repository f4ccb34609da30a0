// Copyright 2026 The pdclab Authors
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

namespace pdc {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InvalidState : public Error {
 public:
  using Error::Error;
};

// The Fock cutoff is too small for the requested state.
class InsufficientTruncation : public Error {
 public:
  using Error::Error;
};

class IntegrationFailure : public Error {
 public:
  using Error::Error;
};

class SolverFailure : public Error {
 public:
  using Error::Error;
};

class NonUniqueSteadyState : public SolverFailure {
 public:
  NonUniqueSteadyState(const std::string& what, std::size_t nullity)
      : SolverFailure(what), nullity_(nullity) {}
  std::size_t nullity() const noexcept { return nullity_; }

 private:
  std::size_t nullity_;
};

class SeriesNotConverged : public Error {
 public:
  using Error::Error;
};

// A quantity that is infinite at the requested point.
class Divergence : public Error {
 public:
  using Error::Error;
};

// Error propagation with a vanishing signal slope.
class DivergentUncertainty : public Divergence {
 public:
  using Divergence::Divergence;
};

class OutOfRegime : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace pdc
