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

#include "pdc/meanfield.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include "pdc/metrology.hpp"

namespace pdc {

double meanfield_residual(const SystemParams& p, const MeanFieldSolution& s) {
  const double xa = s.amp_a.real(), ya = s.amp_a.imag();
  const double xb = s.amp_b.real(), yb = s.amp_b.imag();
  const double g = p.g;
  const double r[4] = {-p.gamma_a * xa + 2 * g * xb * yb + p.lambda_a, g * (xb * xb - yb * yb) + p.gamma_a * ya,
                       p.gamma_b * xb + 2 * g * xa * yb - 2 * g * xb * ya,
                       p.gamma_b * yb + 2 * g * (xa * xb + ya * yb)};
  double worst = 0.0;
  for (double v : r) worst = std::max(worst, std::abs(v));
  return worst;
}

std::vector<MeanFieldSolution> steady_solutions(const SystemParams& p) {
  p.validate();
  if (!(p.gamma_a > 0)) throw InvalidArgument("steady_solutions: gamma_a must be positive");
  std::vector<MeanFieldSolution> out{{p.lambda_a / p.gamma_a, 0.0, Branch::normal}};
  const double drive = 2.0 * p.g * p.lambda_a - p.gamma_a * p.gamma_b;
  if (p.g > 0 && drive > 0) {
    const double s = std::sqrt(drive) / (2.0 * p.g);
    const double xa = p.gamma_b / (2.0 * p.g);
    out.push_back({xa, cplx(s, -s), Branch::superradiant_plus});
    out.push_back({xa, cplx(-s, s), Branch::superradiant_minus});
  }
  return out;
}

StabilityReport build_W(const SystemParams& p, const MeanFieldSolution& s) {
  const cplx a = s.amp_a, b = s.amp_b;
  const double g = p.g;
  Eigen::Matrix4cd w;
  w << -p.gamma_a, 0.0, -2.0 * I * g * b, 0.0,
       0.0, -p.gamma_a, 0.0, 2.0 * I * g * std::conj(b),
       -2.0 * I * g * std::conj(b), 0.0, -p.gamma_b, -2.0 * I * g * a,
       0.0, 2.0 * I * g * b, 2.0 * I * g * std::conj(a), -p.gamma_b;
  Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(w, false);
  StabilityReport r{w, es.eigenvalues(), true, false};
  for (int i = 0; i < 4; ++i) {
    const double re = r.eigenvalues(i).real();
    if (!(re < -1e-12)) r.stable = false;
    if (std::abs(re) <= 1e-12) r.marginal = true;
  }
  return r;
}

FluctuationMoments fluct_moments_analytic(const SystemParams& p, double nbar, bool verbatim) {
  p.validate();
  if (nbar < 0) throw InvalidArgument("fluct_moments_analytic: negative nbar");
  if (!(2.0 * p.g * p.lambda_a < p.gamma_a * p.gamma_b))
    throw OutOfRegime("fluct_moments_analytic: parameters are not in the normal phase");
  const double gg = p.gamma_a * p.gamma_b;
  const double x = gg * gg;
  const double u = p.g * p.g * p.lambda_a * p.lambda_a;
  if (verbatim) {
    if (nbar != 0.0) throw InvalidArgument("fluct_moments_analytic: verbatim forms are zero temperature");
    const double dv = gg - 4.0 * u;
    const double d = x - 4.0 * u;
    return {2.0 * u / dv, -I * p.g * p.lambda_a * gg / (2.0 * dv), 3.0 * u * x / (d * d)};
  }
  const double d = x - 4.0 * u;
  const double n = (2.0 * u + nbar * x) / d;
  const cplx an = -I * p.g * p.lambda_a * gg * (2.0 * nbar + 1.0) / d;
  return {n, an, 2.0 * n * n + n + std::norm(an)};
}

FluctuationMoments fluct_moments_lyapunov(const StabilityReport& report, const SystemParams& p, double nbar) {
  if (!report.stable) throw SolverFailure("fluct_moments_lyapunov: W is not stable, no stationary covariance");
  if (nbar < 0) throw InvalidArgument("fluct_moments_lyapunov: negative nbar");
  const Eigen::Matrix4cd& w = report.W;
  Eigen::Matrix4cd nmat = Eigen::Matrix4cd::Zero();
  nmat(0, 1) = 2.0 * p.gamma_a;
  nmat(2, 3) = 2.0 * p.gamma_b * (nbar + 1.0);
  nmat(3, 2) = 2.0 * p.gamma_b * nbar;
  const Eigen::Matrix4cd id = Eigen::Matrix4cd::Identity();
  Eigen::Matrix<cplx, 16, 16> k;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) k.block<4, 4>(4 * i, 4 * j) = id(i, j) * w + w(i, j) * id;
  const Eigen::Matrix<cplx, 16, 1> rhs = -Eigen::Map<const Eigen::Matrix<cplx, 16, 1>>(nmat.data());
  const Eigen::Matrix<cplx, 16, 1> m = k.fullPivLu().solve(rhs);
  const Eigen::Map<const Eigen::Matrix4cd> cov(m.data());
  const double n = cov(3, 2).real();
  const cplx an = cov(2, 2);
  return {n, an, 2.0 * n * n + n + std::norm(an)};
}

UncertaintyReport delta2_g_normal(const SystemParams& p, double nbar, Form form) {
  SystemParams q = p;
  q.nbar = nbar;
  if (nbar == 0.0) return delta2_g(Regime::normal_phase, Observable::photon, q, form);
  return delta2_g(Regime::thermal, Observable::photon, q, form);
}

double delta2_g_normal_numeric(const SystemParams& p, double nbar, double step) {
  auto moments = [&](double g) {
    SystemParams q = p;
    q.g = g;
    return fluct_moments_lyapunov(build_W(q, steady_solutions(q).front()), q, nbar);
  };
  const FluctuationMoments m0 = moments(p.g);
  const double h = detail::resolve_step(p.g, step);
  const double dn = detail::richardson_scalar([&](double g) { return moments(g).n_fluct; }, p.g, h);
  return error_propagation({m0.n_fluct, m0.fourth - m0.n_fluct * m0.n_fluct, dn});
}

}  // namespace pdc
