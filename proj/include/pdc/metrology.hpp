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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pdc/errors.hpp"
#include "pdc/hilbert.hpp"

namespace pdc {

using StateFamily = std::function<StateVector(double)>;
using DensityFamily = std::function<DensityMatrix(double)>;

enum class QfiMethod { pure, gaussian, spectral };

inline const char* to_string(QfiMethod m) {
  switch (m) {
    case QfiMethod::pure: return "pure";
    case QfiMethod::gaussian: return "gaussian";
    case QfiMethod::spectral: return "spectral";
  }
  return "?";
}

struct QfiResult {
  double value;
  QfiMethod method;
  double fd_step;
  // |F(h/2) - F(h)| / F, the change under step halving.
  double step_sensitivity;
};

inline double default_step(double g) { return 1e-4 * std::max(std::abs(g), 1.0); }

namespace detail {

inline double resolve_step(double g, double step) {
  if (step == 0.0) return default_step(g);
  if (!(step > 0.0) || !std::isfinite(step)) throw InvalidArgument("finite-difference step must be positive");
  return step;
}

inline double relative_change(double coarse, double fine) {
  const double scale = std::max(std::abs(fine), std::abs(coarse));
  return scale == 0.0 ? 0.0 : std::abs(fine - coarse) / scale;
}

// Central difference with one Richardson level.
template <class F>
auto richardson(F&& f, double g, double h) {
  const auto d1 = ((f(g + h) - f(g - h)) / (2.0 * h)).eval();
  const auto d2 = ((f(g + 0.5 * h) - f(g - 0.5 * h)) / h).eval();
  return std::make_pair(((4.0 * d2 - d1) / 3.0).eval(), d1);
}

inline double richardson_scalar(const std::function<double(double)>& f, double g, double h) {
  const double d1 = (f(g + h) - f(g - h)) / (2.0 * h);
  const double d2 = (f(g + 0.5 * h) - f(g - 0.5 * h)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

}  // namespace detail

// F = 4 (<dpsi|dpsi> - |<psi|dpsi>|^2).
QfiResult qfi_pure(const StateFamily& family, double g, double step = 0.0);

struct GaussianMoments {
  // (<q>, <p>) with p = (b + b†)/sqrt2, q = (b - b†)/(i sqrt2)
  Eigen::Vector2d displacement;
  // symmetrized covariance, vacuum = I/2
  Eigen::Matrix2d covariance;

  double d() const { return std::sqrt(covariance.determinant()); }

  void validate(double tol = 1e-8) const {
    if (std::abs(covariance(0, 1) - covariance(1, 0)) > tol) throw InvalidState("GaussianMoments: C not symmetric");
    if (covariance.determinant() < 0.25 - tol) throw InvalidState("GaussianMoments: uncertainty relation violated");
  }
};

struct GaussianDerivative {
  Eigen::Vector2d displacement;
  Eigen::Matrix2d covariance;
};

// Build the moments from <b>, <b^2> and <b†b>.
GaussianMoments gaussian_moments(cplx mean_b, cplx mean_b2, double mean_n);

GaussianMoments gaussian_moments(const DensityMatrix& rho, const Operator& b);

// How d enters the formula: sqrt(det C), or twice that (unit vacuum value).
enum class PurityConvention { sqrt_det, twice_sqrt_det };

QfiResult qfi_gaussian(const GaussianMoments& m, const GaussianDerivative& dm,
                       PurityConvention conv = PurityConvention::sqrt_det, double fd_step = 0.0);

// Gaussian QFI of a simulated family, derivatives by central differences.
QfiResult qfi_gaussian(const DensityFamily& family, const Operator& b, double g, double step = 0.0,
                       PurityConvention conv = PurityConvention::sqrt_det);

// Eigenbasis form of the QFI for mixed states. Pairs with E_k + E_k' <= floor are dropped.
QfiResult qfi_spectral(const DensityFamily& family, double g, double step = 0.0, double eigen_floor = 1e-12);

struct MeasurementRecord {
  double mean;
  double variance;
  double dmean_dg;
};

// delta^2 g = Var(M) / (d<M>/dg)^2.
double error_propagation(const MeasurementRecord& rec);

// Direct photon counting, M = b†b.
MeasurementRecord photon_stats(const DensityFamily& family, const Operator& b, double g, double step = 0.0);

// Quadrature M = b e^{-i phi} + b† e^{i phi}.
MeasurementRecord homodyne_stats(const DensityFamily& family, const Operator& b, double phi, double g,
                                 double step = 0.0);

}  // namespace pdc
