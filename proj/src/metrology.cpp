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

#include "pdc/metrology.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <utility>

namespace pdc {

namespace detail {

struct Spectrum {
  Eigen::VectorXd values;  // descending
  DenseMatrix vectors;
};

inline Spectrum spectrum(const DensityMatrix& rho) {
  const DenseMatrix h = 0.5 * (rho.matrix() + rho.matrix().adjoint());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h);
  if (es.info() != Eigen::Success) throw SolverFailure("qfi_spectral: eigendecomposition failed");
  const Eigen::Index n = h.rows();
  Spectrum s{Eigen::VectorXd(n), DenseMatrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    s.values(i) = es.eigenvalues()(n - 1 - i);
    s.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return s;
}

// Eigenvector of `other` with the largest overlap with v, phase-aligned to v.
inline std::pair<double, Vector> matched(const Vector& v, const Spectrum& other) {
  Eigen::Index best = 0;
  double ov = -1.0;
  for (Eigen::Index j = 0; j < other.vectors.cols(); ++j) {
    const double o = std::abs(v.dot(other.vectors.col(j)));
    if (o > ov) {
      ov = o;
      best = j;
    }
  }
  Vector w = other.vectors.col(best);
  const cplx ph = v.dot(w);
  if (std::abs(ph) > 0) w *= std::conj(ph) / std::abs(ph);
  return {other.values(best), w};
}

inline double spectral_fisher(const Spectrum& s0, const Spectrum& sp, const Spectrum& sm, double h, double floor) {
  const Eigen::Index n = s0.values.size();
  std::vector<Eigen::Index> sig;
  for (Eigen::Index k = 0; k < n; ++k)
    if (s0.values(k) > floor) sig.push_back(k);
  double f = 0.0;
  std::vector<Vector> dvec(static_cast<std::size_t>(n));
  for (Eigen::Index k : sig) {
    const Vector v = s0.vectors.col(k);
    const auto [ep, wp] = matched(v, sp);
    const auto [em, wm] = matched(v, sm);
    const double de = (ep - em) / (2.0 * h);
    f += de * de / s0.values(k);
    dvec[static_cast<std::size_t>(k)] = (wp - wm) / (2.0 * h);
  }
  // Ordered pairs; |<k|dk'>| = |<k'|dk>|, so the derivative of the larger-weight member is used.
  for (Eigen::Index k : sig) {
    const Vector& dk = dvec[static_cast<std::size_t>(k)];
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == k) continue;
      const double ek = s0.values(k);
      const double ej = s0.values(j);
      if (ek + ej <= floor) continue;
      if (ej > floor && (ej > ek || (ej == ek && j < k))) continue;
      const double w = 2.0 * (ek - ej) * (ek - ej) / (ek + ej);
      f += 2.0 * w * std::norm(s0.vectors.col(j).dot(dk));
    }
  }
  return f;
}

}  // namespace detail
namespace detail {

inline MeasurementRecord observable_stats(const DensityFamily& family, const Operator& m, double g, double step) {
  const double h = resolve_step(g, step);
  const Operator m2 = m * m;
  const DensityMatrix rho = family(g);
  const double mean = expectation(m, rho).real();
  const double var = expectation(m2, rho).real() - mean * mean;
  const double scale = std::max(1.0, std::abs(expectation(m2, rho)));
  if (var < -1e-10 * scale) throw InvalidState("observable variance is negative");
  auto f = [&](double x) { return expectation(m, family(x)).real(); };
  return {mean, std::max(0.0, var), richardson_scalar(f, g, h)};
}

}  // namespace detail

QfiResult qfi_pure(const StateFamily& family, double g, double step) {
  const double h = detail::resolve_step(g, step);
  const StateVector psi = family(g);
  auto amps = [&](double x) -> Vector {
    const StateVector s = family(x);
    if (s.dims() != psi.dims()) throw DimensionMismatch("qfi_pure: family changes space");
    if (std::abs(s.amplitudes().norm() - 1.0) > 1e-8) throw InvalidState("qfi_pure: family member not normalized");
    return s.amplitudes();
  };
  const auto [d, d_coarse] = detail::richardson(amps, g, h);
  const Vector& v = psi.amplitudes();
  auto fisher = [&v](const Vector& dv) { return 4.0 * (dv.squaredNorm() - std::norm(v.dot(dv))); };
  const double f = std::max(0.0, fisher(d));
  return {f, QfiMethod::pure, h, detail::relative_change(fisher(d_coarse), f)};
}

GaussianMoments gaussian_moments(cplx mean_b, cplx mean_b2, double mean_n) {
  const double r2 = std::sqrt(2.0);
  GaussianMoments m;
  m.displacement << r2 * mean_b.imag(), r2 * mean_b.real();
  const double qq = mean_n + 0.5 - mean_b2.real();
  const double pp = mean_n + 0.5 + mean_b2.real();
  const double qp = mean_b2.imag();
  m.covariance << qq - m.displacement(0) * m.displacement(0), qp - m.displacement(0) * m.displacement(1),
      qp - m.displacement(0) * m.displacement(1), pp - m.displacement(1) * m.displacement(1);
  return m;
}

GaussianMoments gaussian_moments(const DensityMatrix& rho, const Operator& b) {
  const cplx mb = expectation(b, rho);
  const cplx mb2 = expectation(b * b, rho);
  const double n = expectation(b.adjoint() * b, rho).real();
  return gaussian_moments(mb, mb2, n);
}

QfiResult qfi_gaussian(const GaussianMoments& m, const GaussianDerivative& dm,
                       PurityConvention conv, double fd_step) {
  m.validate();
  const Eigen::Matrix2d& c = m.covariance;
  const double det = c.determinant();
  if (!(std::abs(det) > 1e-300)) throw InvalidArgument("qfi_gaussian: singular covariance");
  const Eigen::Matrix2d ci = c.inverse();
  const Eigen::Matrix2d cdc = ci * dm.covariance;
  const double scale = conv == PurityConvention::sqrt_det ? 1.0 : 2.0;
  const double d = scale * std::sqrt(det);
  const double dd = scale * 0.5 * std::sqrt(det) * cdc.trace();
  const double t1 = 2.0 * d * d / (4.0 * d * d + 1.0) * (cdc * cdc).trace();
  const double den = 16.0 * d * d * d * d - 1.0;
  // pure-state limit: the middle term vanishes with d -> 1/2
  const double t2 = std::abs(den) < 1e-10 ? 0.0 : 8.0 * dd * dd / den;
  const double t3 = dm.displacement.dot(ci * dm.displacement);
  return {std::max(0.0, t1 + t2 + t3), QfiMethod::gaussian, fd_step, 0.0};
}

QfiResult qfi_gaussian(const DensityFamily& family, const Operator& b, double g, double step,
                       PurityConvention conv) {
  const double h = detail::resolve_step(g, step);
  auto packed = [&](double x) -> Eigen::Matrix<double, 6, 1> {
    const GaussianMoments m = gaussian_moments(family(x), b);
    Eigen::Matrix<double, 6, 1> v;
    v << m.displacement, m.covariance(0, 0), m.covariance(0, 1), m.covariance(1, 0), m.covariance(1, 1);
    return v;
  };
  const GaussianMoments m0 = gaussian_moments(family(g), b);
  const auto [d, d_coarse] = detail::richardson(packed, g, h);
  auto unpack = [](const Eigen::Matrix<double, 6, 1>& v) {
    GaussianDerivative dm;
    dm.displacement << v(0), v(1);
    dm.covariance << v(2), v(3), v(4), v(5);
    return dm;
  };
  QfiResult r = qfi_gaussian(m0, unpack(d), conv, h);
  r.step_sensitivity = detail::relative_change(qfi_gaussian(m0, unpack(d_coarse), conv, h).value, r.value);
  return r;
}

QfiResult qfi_spectral(const DensityFamily& family, double g, double step, double eigen_floor) {
  const double h = detail::resolve_step(g, step);
  if (!(eigen_floor >= 0.0)) throw InvalidArgument("qfi_spectral: eigen_floor must be >= 0");
  const detail::Spectrum s0 = detail::spectrum(family(g));
  const double coarse = detail::spectral_fisher(s0, detail::spectrum(family(g + h)),
                                                detail::spectrum(family(g - h)), h, eigen_floor);
  const double fine = detail::spectral_fisher(s0, detail::spectrum(family(g + 0.5 * h)),
                                              detail::spectrum(family(g - 0.5 * h)), 0.5 * h, eigen_floor);
  const double f = std::max(0.0, (4.0 * fine - coarse) / 3.0);
  return {f, QfiMethod::spectral, h, detail::relative_change(coarse, fine)};
}

double error_propagation(const MeasurementRecord& rec) {
  if (!(rec.variance >= 0.0)) throw InvalidArgument("error_propagation: negative variance");
  if (rec.dmean_dg == 0.0 || !std::isfinite(rec.dmean_dg))
    throw DivergentUncertainty("error_propagation: the mean does not depend on the parameter");
  return rec.variance / (rec.dmean_dg * rec.dmean_dg);
}

MeasurementRecord photon_stats(const DensityFamily& family, const Operator& b, double g, double step) {
  return detail::observable_stats(family, b.adjoint() * b, g, step);
}

MeasurementRecord homodyne_stats(const DensityFamily& family, const Operator& b, double phi, double g,
                                 double step) {
  const Operator m = std::exp(-I * phi) * b + std::exp(I * phi) * b.adjoint();
  return detail::observable_stats(family, m, g, step);
}

}  // namespace pdc
