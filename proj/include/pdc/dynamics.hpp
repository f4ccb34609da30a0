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

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "pdc/errors.hpp"
#include "pdc/hilbert.hpp"

namespace pdc {

struct SystemParams {
  double g = 0.0;
  double lambda_a = 0.0;
  double gamma_a = 0.0;
  double gamma_b = 0.0;
  double kappa_e = 0.0;
  double omega1 = 0.0;
  double omega2 = 0.0;
  double nbar = 0.0;

  void validate() const {
    for (double v : {g, lambda_a, gamma_a, gamma_b, kappa_e, omega1, omega2, nbar})
      if (!std::isfinite(v)) throw InvalidArgument("SystemParams: non-finite value");
    if (gamma_a < 0 || gamma_b < 0 || kappa_e < 0) throw InvalidArgument("SystemParams: negative rate");
    if (nbar < 0) throw InvalidArgument("SystemParams: negative thermal occupation");
    if (omega1 != 0.0 || omega2 != 0.0) {
      if (std::abs(omega1 - 2.0 * omega2) > 1e-12 * std::max(std::abs(omega1), 1.0))
        throw InvalidArgument("SystemParams: resonance omega1 = 2 omega2 violated");
    }
  }

  // Two-photon loss rate induced by the eliminated pump, 2 g^2 / gamma_a.
  double kappa() const {
    if (!(gamma_a > 0)) throw InvalidArgument("SystemParams: kappa needs gamma_a > 0");
    return 2.0 * g * g / gamma_a;
  }
  double kappa_total() const { return kappa() + kappa_e; }
};

struct Channel {
  double rate;
  Operator op;
};

struct LindbladModel {
  Operator hamiltonian;
  std::vector<Channel> channels;

  const Dims& dims() const { return hamiltonian.dims(); }

  void validate(double tol = 1e-12) const {
    const double scale = std::max(1.0, hamiltonian.matrix().cwiseAbs().sum());
    if (!hamiltonian.is_hermitian(tol * scale)) throw InvalidArgument("LindbladModel: Hamiltonian not Hermitian");
    for (const auto& c : channels) {
      if (!(c.rate >= 0.0)) throw InvalidArgument("LindbladModel: negative channel rate");
      if (c.op.dims() != dims()) throw DimensionMismatch("LindbladModel: channel acts on another space");
    }
  }
};

struct Tolerances {
  double rel = 1e-8;
  double abs = 1e-10;
};

// Column-stacking vectorization, vec(A X B) = (B^T ⊗ A) vec(X).
inline Vector vec(const DenseMatrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

inline DenseMatrix unvec(const Vector& v, Eigen::Index n) {
  if (v.size() != n * n) throw DimensionMismatch("unvec: length is not n^2");
  return Eigen::Map<const DenseMatrix>(v.data(), n, n);
}

// Superoperator of  -i[H,rho] + sum_c r (2 c rho c† - c†c rho - rho c†c).
SparseMatrix liouvillian(const LindbladModel& model);

// Maximum absolute column sum.
double norm1(const SparseMatrix& m);

void add_signal_loss(std::vector<Channel>& channels, const SystemParams& p, const Operator& b);

// Nonlinear generator a b†² + a† b² on (pump, signal).
Operator pdc_generator(std::size_t d_a, std::size_t d_b);

LindbladModel build_full_model(const SystemParams& p, std::size_t d_a, std::size_t d_b);

LindbladModel build_reduced_model(const SystemParams& p, std::size_t d_b);

// |psi(t)> = exp(-i H t) |psi0>.
StateVector evolve_closed(const Operator& h, const StateVector& psi0, double t, double tol = 1e-12);

// Output checks for open evolution: trace and Hermiticity within 10 tol, positivity within 1e3 tol.
inline DensityTolerance open_evolution_tolerance(const Tolerances& tol) {
  return DensityTolerance{10.0 * tol.rel, 10.0 * tol.rel, 1e3 * tol.rel};
}

DensityMatrix evolve_open(const LindbladModel& model, const DensityMatrix& rho0, double t,
                          const Tolerances& tol = {});

enum class SteadyMethod { null_space, long_time };

inline const char* to_string(SteadyMethod m) { return m == SteadyMethod::null_space ? "null-space" : "long-time"; }

struct SteadyStateResult {
  DensityMatrix rho;
  double residual;
  SteadyMethod method;
};

inline constexpr std::size_t kDenseLiouvillianMax = 2500;

// Stationary state of the model via the trace-bordered Liouvillian.
SteadyStateResult steady_state(const LindbladModel& model, double tol = 1e-10);

// Long-time limit of rho0 under the model, valid when the stationary space is degenerate.
// Projects onto the zero modes along the decaying ones: P = R (J† R)^{-1} J†.
DensityMatrix asymptotic_state(const LindbladModel& model, const DensityMatrix& rho0, double zero_cut = 1e-10);

// Slowest nonzero relaxation rate, -max{Re z : Re z < -eps}, eps = zero_cut * |L|.
double spectral_gap(const LindbladModel& model, double zero_cut = 1e-10);

struct GapReport {
  double gap;
  double gap_refined;
  std::size_t dim;
  std::size_t dim_refined;
  bool converged;
};

// Gap at dimension d and at d + step; flagged when they differ by more than 1%.
GapReport spectral_gap_checked(const std::function<LindbladModel(std::size_t)>& build, std::size_t d,
                               std::size_t step = 4, double zero_cut = 1e-10);

// Three-level truncation of the reduced model. rho11 = 1 - rho00 - rho22.
struct ThreeLevelState {
  double r00 = 1.0;
  double r22 = 0.0;
  cplx r10 = 0.0;
  cplx r21 = 0.0;
  cplx r20 = 0.0;

  double r11() const { return 1.0 - r00 - r22; }

  DenseMatrix matrix() const {
    DenseMatrix m = DenseMatrix::Zero(3, 3);
    m(0, 0) = r00;
    m(1, 1) = r11();
    m(2, 2) = r22;
    m(1, 0) = r10;
    m(0, 1) = std::conj(r10);
    m(2, 1) = r21;
    m(1, 2) = std::conj(r21);
    m(2, 0) = r20;
    m(0, 2) = std::conj(r20);
    return m;
  }

  DensityMatrix density(double tol = 1e-8) const { return DensityMatrix(matrix(), {3}, tol); }

  static ThreeLevelState from_matrix(const DenseMatrix& m) {
    if (m.rows() != 3 || m.cols() != 3) throw DimensionMismatch("ThreeLevelState: need a 3x3 matrix");
    return {m(0, 0).real(), m(2, 2).real(), m(1, 0), m(2, 1), m(2, 0)};
  }
};

// Drive-to-loss ratio g lambda_a / gamma_a; the truncation assumes it is small.
inline double three_level_regime_ratio(const SystemParams& p) { return p.g * p.lambda_a / p.gamma_a; }

ThreeLevelState three_level_rhs(const SystemParams& p, const ThreeLevelState& s);

ThreeLevelState three_level_evolve(const SystemParams& p, const ThreeLevelState& s0, double t,
                                   const Tolerances& tol = {});

// Closed-form stationary point, A = 2 g^2 + gamma_a (kappa_e + gamma_b).
ThreeLevelState three_level_steady_state(const SystemParams& p);

inline DensityMatrix three_level_steady(const SystemParams& p) { return three_level_steady_state(p).density(); }

}  // namespace pdc
