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

#include "pdc/dynamics.hpp"
#include "ode.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pdc {

namespace detail {

inline double steady_residual(const SparseMatrix& l, const DenseMatrix& rho) { return (l * vec(rho)).norm(); }

inline DenseMatrix physical_part(const Vector& x, Eigen::Index n) {
  DenseMatrix r = unvec(x, n);
  r = 0.5 * (r + r.adjoint()).eval();
  return r / r.trace();
}

// Number of singular values of a dense matrix below rel * sigma_max.
inline std::size_t nullity(const DenseMatrix& m, double rel) {
  Eigen::BDCSVD<DenseMatrix> svd(m);
  const auto& s = svd.singularValues();
  const double cut = rel * std::max(s(0), std::numeric_limits<double>::min());
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) <= cut) ++k;
  return k;
}

}  // namespace detail

SparseMatrix liouvillian(const LindbladModel& model) {
  model.validate();
  const auto n = static_cast<Eigen::Index>(model.hamiltonian.size());
  SparseMatrix id(n, n);
  id.setIdentity();
  const SparseMatrix& h = model.hamiltonian.matrix();
  SparseMatrix l = -I * (kron(id, h) - kron(SparseMatrix(h.transpose()), id));
  for (const auto& c : model.channels) {
    if (c.rate == 0.0) continue;
    const SparseMatrix& a = c.op.matrix();
    const SparseMatrix ad = a.adjoint();
    const SparseMatrix nn = ad * a;
    l += c.rate * (2.0 * kron(SparseMatrix(a.conjugate()), a) - kron(id, nn) - kron(SparseMatrix(nn.transpose()), id));
  }
  l.prune(cplx(0.0));
  l.makeCompressed();
  return l;
}

double norm1(const SparseMatrix& m) {
  double best = 0.0;
  for (int k = 0; k < m.outerSize(); ++k) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

void add_signal_loss(std::vector<Channel>& channels, const SystemParams& p, const Operator& b) {
  if (p.nbar > 0.0) {
    channels.push_back({p.gamma_b * (p.nbar + 1.0), b});
    channels.push_back({p.gamma_b * p.nbar, b.adjoint()});
  } else {
    channels.push_back({p.gamma_b, b});
  }
}

Operator pdc_generator(std::size_t d_a, std::size_t d_b) {
  const std::vector<FockSpace> spaces{FockSpace(d_a), FockSpace(d_b)};
  const Operator a = embed(annihilation(spaces[0]), 0, spaces);
  const Operator b = embed(annihilation(spaces[1]), 1, spaces);
  const Operator ad = a.adjoint();
  const Operator bd = b.adjoint();
  return a * bd * bd + ad * b * b;
}

LindbladModel build_full_model(const SystemParams& p, std::size_t d_a, std::size_t d_b) {
  p.validate();
  const std::vector<FockSpace> spaces{FockSpace(d_a), FockSpace(d_b)};
  const Operator a = embed(annihilation(spaces[0]), 0, spaces);
  const Operator b = embed(annihilation(spaces[1]), 1, spaces);
  const Operator h = cplx(p.g) * pdc_generator(d_a, d_b) + (I * p.lambda_a) * (a.adjoint() - a);
  std::vector<Channel> channels{{p.gamma_a, a}};
  add_signal_loss(channels, p, b);
  return {h, channels};
}

LindbladModel build_reduced_model(const SystemParams& p, std::size_t d_b) {
  p.validate();
  if (!(p.gamma_a > 0)) throw InvalidArgument("build_reduced_model: gamma_a must be positive");
  const FockSpace space(d_b);
  const Operator b = annihilation(space);
  const Operator bd = b.adjoint();
  const double drive = p.g * p.lambda_a / p.gamma_a;
  const Operator h = cplx(drive) * (b * b + bd * bd);
  std::vector<Channel> channels;
  add_signal_loss(channels, p, b);
  channels.push_back({p.kappa_total(), b * b});
  return {h, channels};
}

StateVector evolve_closed(const Operator& h, const StateVector& psi0, double t, double tol) {
  if (h.dims() != psi0.dims()) throw DimensionMismatch("evolve_closed: operator and state spaces differ");
  const double scale = std::max(1.0, norm1(h.matrix()));
  if (!h.is_hermitian(1e-12 * scale)) throw InvalidArgument("evolve_closed: Hamiltonian not Hermitian");
  const SparseMatrix gen = -I * h.matrix();
  detail::OdeState x(psi0.amplitudes().data(), psi0.amplitudes().data() + psi0.size());
  detail::integrate(detail::sparse_rhs(gen), x, t, {tol, tol}, 0.1 / scale);
  Vector v = Eigen::Map<Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
  const double drift = std::abs(v.norm() - 1.0);
  if (drift > std::max(1e-8, 1e3 * tol)) throw IntegrationFailure("evolve_closed: norm drifted by " + std::to_string(drift));
  return StateVector(v, psi0.dims(), std::max(1e-8, 1e3 * tol));
}

DensityMatrix evolve_open(const LindbladModel& model, const DensityMatrix& rho0, double t,
                          const Tolerances& tol) {
  if (model.dims() != rho0.dims()) throw DimensionMismatch("evolve_open: model and state spaces differ");
  const SparseMatrix l = liouvillian(model);
  const Vector v0 = vec(rho0.matrix());
  detail::OdeState x(v0.data(), v0.data() + v0.size());
  detail::integrate(detail::sparse_rhs(l), x, t, tol, 0.1 / std::max(1e-300, norm1(l)));
  const Vector v = Eigen::Map<Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
  return DensityMatrix(unvec(v, static_cast<Eigen::Index>(rho0.size())), rho0.dims(), open_evolution_tolerance(tol));
}

SteadyStateResult steady_state(const LindbladModel& model, double tol) {
  bool dissipative = false;
  for (const auto& c : model.channels) dissipative = dissipative || c.rate > 0.0;
  if (!dissipative) throw InvalidArgument("steady_state: model has no dissipative channel");
  const SparseMatrix l = liouvillian(model);
  const auto n = static_cast<Eigen::Index>(model.hamiltonian.size());
  const Eigen::Index nn = n * n;
  const double lnorm = norm1(l);
  const double zero_cut = 1e-10;

  // Row 0 (the rho_00 equation) is replaced by the trace functional.
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(l.nonZeros() + n));
  for (int k = 0; k < l.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(l, k); it; ++it)
      if (it.row() != 0) t.emplace_back(it.row(), it.col(), it.value());
  for (Eigen::Index i = 0; i < n; ++i) t.emplace_back(0, i * (n + 1), lnorm);
  SparseMatrix bmat(nn, nn);
  bmat.setFromTriplets(t.begin(), t.end());
  Vector rhs = Vector::Zero(nn);
  rhs(0) = lnorm;

  Vector x;
  if (static_cast<std::size_t>(nn) < kDenseThreshold) {
    const DenseMatrix bd(bmat);
    Eigen::FullPivLU<DenseMatrix> lu(bd);
    lu.setThreshold(zero_cut);
    if (!lu.isInvertible()) {
      const std::size_t k = detail::nullity(DenseMatrix(l), zero_cut);
      throw NonUniqueSteadyState("steady_state: stationary space has dimension " + std::to_string(k), k);
    }
    x = lu.solve(rhs);
  } else {
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(bmat);
    bool singular = lu.info() != Eigen::Success;
    if (!singular) {
      x = lu.solve(rhs);
      // Inverse power iteration for the smallest singular value of the bordered matrix.
      Vector w = Vector::Ones(nn).normalized();
      double inv_sigma = 0.0;
      for (int it = 0; it < 6; ++it) {
        Vector y = lu.solve(w);
        Vector z = lu.adjoint().solve(y);
        inv_sigma = std::sqrt(z.norm());
        if (!std::isfinite(inv_sigma) || z.norm() == 0.0) break;
        w = z.normalized();
      }
      singular = !std::isfinite(inv_sigma) || !x.allFinite() || 1.0 / inv_sigma < zero_cut * lnorm;
    }
    if (singular) {
      std::size_t k = 2;
      if (static_cast<std::size_t>(nn) <= kDenseLiouvillianMax) k = detail::nullity(DenseMatrix(l), zero_cut);
      if (k > 1)
        throw NonUniqueSteadyState("steady_state: stationary space has dimension " + std::to_string(k), k);
      x = Vector();
    } else {
      for (int refine = 0; refine < 3; ++refine) {
        if (detail::steady_residual(l, detail::physical_part(x, n)) < 0.1 * tol) break;
        const Vector r = rhs - bmat * x;
        x += lu.solve(r);
      }
    }
  }

  if (x.size() == nn && x.allFinite()) {
    DenseMatrix rho = detail::physical_part(x, n);
    const double res = detail::steady_residual(l, rho);
    if (res < tol) {
      return {DensityMatrix(rho, model.dims(), DensityTolerance{1e-8, 1e-8, std::max(1e-8, 1e3 * tol)}), res,
              SteadyMethod::null_space};
    }
  }

  // Long-time fallback from the maximally mixed state.
  Vector v = vec(DenseMatrix::Identity(n, n) / static_cast<double>(n));
  detail::OdeState s(v.data(), v.data() + v.size());
  const Tolerances tight{1e-12, 1e-14};
  double chunk = 10.0 / std::max(lnorm, 1e-300);
  double elapsed = 0.0;
  for (int round = 0; round < 60; ++round) {
    detail::integrate(detail::sparse_rhs(l), s, chunk, tight, chunk * 1e-3);
    elapsed += chunk;
    const Vector cur = Eigen::Map<Vector>(s.data(), nn);
    const DenseMatrix rho = detail::physical_part(cur, n);
    const double res = detail::steady_residual(l, rho);
    if (res < tol)
      return {DensityMatrix(rho, model.dims(), DensityTolerance{1e-8, 1e-8, std::max(1e-8, 1e3 * tol)}), res,
              SteadyMethod::long_time};
    chunk *= 2.0;
  }
  throw SolverFailure("steady_state: long-time integration did not reach residual " + std::to_string(tol) +
                      " by t=" + std::to_string(elapsed));
}

DensityMatrix asymptotic_state(const LindbladModel& model, const DensityMatrix& rho0, double zero_cut) {
  if (model.dims() != rho0.dims()) throw DimensionMismatch("asymptotic_state: model and state spaces differ");
  const auto n = static_cast<Eigen::Index>(rho0.size());
  if (static_cast<std::size_t>(n * n) > kDenseLiouvillianMax)
    throw SolverFailure("asymptotic_state: Liouvillian too large for a dense decomposition");
  const DenseMatrix l(liouvillian(model));
  Eigen::BDCSVD<DenseMatrix> svd(l, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cut = zero_cut * sv(0);
  Eigen::Index k = 0;
  while (k < sv.size() && sv(sv.size() - 1 - k) <= cut) ++k;
  if (k == 0) throw SolverFailure("asymptotic_state: no stationary mode found");
  const DenseMatrix r = svd.matrixV().rightCols(k);
  const DenseMatrix j = svd.matrixU().rightCols(k);
  const DenseMatrix overlap = j.adjoint() * r;
  const Vector c = overlap.fullPivLu().solve(j.adjoint() * vec(rho0.matrix()));
  DenseMatrix rho = unvec(r * c, n);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(rho, rho0.dims(), DensityTolerance{1e-8, 1e-8, 1e-7});
}

double spectral_gap(const LindbladModel& model, double zero_cut) {
  const SparseMatrix ls = liouvillian(model);
  if (static_cast<std::size_t>(ls.rows()) > kDenseLiouvillianMax)
    throw SolverFailure("spectral_gap: Liouvillian too large for a dense eigendecomposition");
  const double eps = zero_cut * norm1(ls);
  Eigen::ComplexEigenSolver<DenseMatrix> es(DenseMatrix(ls), false);
  if (es.info() != Eigen::Success) throw SolverFailure("spectral_gap: eigendecomposition failed");
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double re = es.eigenvalues()(i).real();
    if (re < -eps) best = std::max(best, re);
  }
  if (!std::isfinite(best)) throw SolverFailure("spectral_gap: no decaying mode");
  return -best;
}

GapReport spectral_gap_checked(const std::function<LindbladModel(std::size_t)>& build, std::size_t d,
                               std::size_t step, double zero_cut) {
  const double g1 = spectral_gap(build(d), zero_cut);
  const double g2 = spectral_gap(build(d + step), zero_cut);
  return {g1, g2, d, d + step, std::abs(g2 - g1) <= 0.01 * std::abs(g2)};
}

ThreeLevelState three_level_rhs(const SystemParams& p, const ThreeLevelState& s) {
  const double eps = p.g * p.lambda_a / p.gamma_a;
  const double kp = p.kappa_total();
  const double gb = p.gamma_b;
  const double r2 = std::sqrt(2.0);
  const cplx r02 = std::conj(s.r20);
  const cplx r12 = std::conj(s.r21);
  const cplx r01 = std::conj(s.r10);
  ThreeLevelState d;
  d.r00 = (-I * eps * r2 * (s.r20 - r02)).real() + 2.0 * gb * s.r11() + 4.0 * kp * s.r22;
  d.r22 = -4.0 * (kp + gb) * s.r22 + (-I * eps * r2 * (r02 - s.r20)).real();
  d.r10 = gb * (2.0 * r2 * s.r21 - s.r10) + I * eps * r2 * r12;
  d.r21 = -(2.0 * kp + 3.0 * gb) * s.r21 - I * eps * r2 * r01;
  d.r20 = -2.0 * (kp + gb) * s.r20 - I * eps * r2 * (s.r00 - s.r22);
  return d;
}

ThreeLevelState three_level_evolve(const SystemParams& p, const ThreeLevelState& s0, double t,
                                   const Tolerances& tol) {
  p.validate();
  if (!(p.gamma_a > 0)) throw InvalidArgument("three_level_evolve: gamma_a must be positive");
  detail::OdeState x{s0.r00, s0.r22, s0.r10, s0.r21, s0.r20};
  auto rhs = [&p](const detail::OdeState& in, detail::OdeState& out) {
    const ThreeLevelState s{in[0].real(), in[1].real(), in[2], in[3], in[4]};
    const ThreeLevelState d = three_level_rhs(p, s);
    out[0] = d.r00;
    out[1] = d.r22;
    out[2] = d.r10;
    out[3] = d.r21;
    out[4] = d.r20;
  };
  const double rate = 4.0 * (p.kappa_total() + p.gamma_b) + 3.0 * p.g * p.lambda_a / p.gamma_a + 1e-300;
  detail::integrate(rhs, x, t, tol, 0.1 / rate);
  return {x[0].real(), x[1].real(), x[2], x[3], x[4]};
}

ThreeLevelState three_level_steady_state(const SystemParams& p) {
  p.validate();
  if (!(p.gamma_a > 0)) throw InvalidArgument("three_level_steady: gamma_a must be positive");
  const double a = 2.0 * p.g * p.g + p.gamma_a * (p.kappa_e + p.gamma_b);
  const double gl2 = p.g * p.g * p.lambda_a * p.lambda_a;
  const double den = 2.0 * a * a + 4.0 * gl2;
  if (!(den > 0)) throw InvalidArgument("three_level_steady: degenerate parameters");
  ThreeLevelState s;
  s.r00 = (2.0 * a * a + gl2) / den;
  s.r22 = gl2 / den;
  s.r20 = -I * std::sqrt(2.0) * p.g * a * p.lambda_a / den;
  return s;
}

}  // namespace pdc
