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
#include <vector>

#include "pdc/analytic.hpp"
#include "pdc/dynamics.hpp"
#include "pdc/errors.hpp"

namespace pdc {

enum class Branch { normal, superradiant_plus, superradiant_minus };

inline const char* to_string(Branch b) {
  switch (b) {
    case Branch::normal: return "normal";
    case Branch::superradiant_plus: return "superradiant_plus";
    case Branch::superradiant_minus: return "superradiant_minus";
  }
  return "?";
}

struct MeanFieldSolution {
  cplx amp_a;
  cplx amp_b;
  Branch branch;
};

// Largest residual of the real steady-state equations for <a> = xa + i ya, <b> = xb + i yb.
double meanfield_residual(const SystemParams& p, const MeanFieldSolution& s);

std::vector<MeanFieldSolution> steady_solutions(const SystemParams& p);

struct StabilityReport {
  Eigen::Matrix4cd W;
  Eigen::Vector4cd eigenvalues;
  bool stable;
  // some eigenvalue has |Re| <= 1e-12
  bool marginal;
};

// Linearized drift of h = (da, da†, db, db†).
StabilityReport build_W(const SystemParams& p, const MeanFieldSolution& s);

struct FluctuationMoments {
  double n_fluct;  // <db† db>
  cplx anom;       // <db db>
  double fourth;   // <(db† db)^2> by Gaussian decoupling
};

// Closed forms of the normal phase. `verbatim` evaluates the alternative quoted denominators
// gamma_a gamma_b - 4 g^2 lambda_a^2 (and the halved anomalous moment); zero temperature only.
FluctuationMoments fluct_moments_analytic(const SystemParams& p, double nbar, bool verbatim = false);

// Steady covariance M_ij = <h_i h_j> from W M + M W^T + N = 0, N the input-noise correlations
// (vacuum pump, signal bath at occupation nbar).
FluctuationMoments fluct_moments_lyapunov(const StabilityReport& report, const SystemParams& p, double nbar);

// Photon-counting uncertainty in the normal phase; thermal form when nbar > 0.
UncertaintyReport delta2_g_normal(const SystemParams& p, double nbar, Form form = Form::literature);

// Same quantity assembled from the Lyapunov moments and error propagation.
double delta2_g_normal_numeric(const SystemParams& p, double nbar, double step = 0.0);

}  // namespace pdc
