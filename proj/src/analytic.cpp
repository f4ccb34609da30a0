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

#include "pdc/analytic.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace pdc {

namespace detail {

// sum_m w_m R_{m+l} R_{m+k} and sum_m w_m R_m^2 with w_m = x^m / m!, R_m = 2F1(-m, y; 2y; 2).
// Returns nothing when the precision tier cannot hold the required number of terms.
template <class Real>
std::optional<double> moment_ratio(unsigned l, unsigned k, double x_in, double y_in, double tol, std::size_t budget,
                            std::size_t capacity) {
  const Real x(x_in);
  const Real y(y_in);
  const Real z = 2 * y;
  std::vector<Real> r;
  auto rm = [&](std::size_t m) -> const Real& {
    while (r.size() <= m) r.push_back(hyp2f1_terminating_t<Real>(r.size(), y, z));
    return r[m];
  };
  Real w = 1;
  Real s = 0;
  Real nrm = 0;
  int quiet = 0;
  const Real rtol(tol);
  for (std::size_t m = 0; m < budget; ++m) {
    if (m + std::max(l, k) > capacity) return std::nullopt;
    if (m > 0) w *= x / Real(m);
    const Real ts = w * rm(m + l) * rm(m + k);
    const Real tn = w * rm(m) * rm(m);
    s += ts;
    nrm += tn;
    const bool small = abs(ts) <= rtol * abs(s) && abs(tn) <= rtol * abs(nrm);
    quiet = small ? quiet + 1 : 0;
    if (quiet >= 5 && Real(m) > x) return static_cast<double>(s / nrm);
  }
  throw SeriesNotConverged("moment_ss: no convergence within " + std::to_string(budget) + " terms");
}

}  // namespace detail
namespace detail {

inline void require_normal_phase(const SystemParams& p) {
  if (!(2.0 * p.g * p.lambda_a < p.gamma_a * p.gamma_b))
    throw OutOfRegime("normal phase requires 2 g lambda_a < gamma_a gamma_b");
}

// Photon-counting uncertainty of the linearized normal phase with thermal occupation nbar.
inline double delta2_thermal(const SystemParams& p, double nbar, Form form) {
  const double x = p.gamma_a * p.gamma_a * p.gamma_b * p.gamma_b;
  const double u = p.g * p.g * p.lambda_a * p.lambda_a;
  const double d = x - 4.0 * u;
  const double l2 = p.lambda_a * p.lambda_a;
  if (form == Form::literature)
    return d * d * ((3.0 + 2.0 * nbar) * x + 4.0 * u * (2.0 * nbar - 1.0)) / (16.0 * (1.0 + 2.0 * nbar) * l2 * x * x);
  // Gaussian decoupling of the thermal linearized moments
  const double bracket = -4.0 * u * u + x * x * nbar * (nbar + 1.0) + u * x * (4.0 * nbar * nbar + 4.0 * nbar + 3.0);
  const double q = 1.0 + 2.0 * nbar;
  return bracket * d * d / (16.0 * u * l2 * x * x * q * q);
}

}  // namespace detail

double hyp2f1_terminating(std::uint64_t m, double y, double z) {
  long double term = 1.0L;
  long double sum = 1.0L;
  long double comp = 0.0L;
  for (std::uint64_t n = 0; n < m; ++n) {
    const long double zn = static_cast<long double>(z) + static_cast<long double>(n);
    if (zn == 0.0L) throw InvalidArgument("hyp2f1_terminating: pole in (z)_n at n=" + std::to_string(n));
    term *= (static_cast<long double>(n) - static_cast<long double>(m)) * (static_cast<long double>(y) + n) * 2.0L /
            (zn * static_cast<long double>(n + 1));
    const long double t = sum + term;
    comp += std::fabs(sum) >= std::fabs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return static_cast<double>(sum + comp);
}

MomentParams moment_params(const SystemParams& p) {
  p.validate();
  if (!(p.g > 0) || !(p.gamma_a > 0)) throw InvalidArgument("moment_params: need g > 0 and gamma_a > 0");
  const double kp = p.kappa_total();
  const double x = 2.0 * p.g * p.lambda_a / (p.gamma_a * kp);
  const double y = p.gamma_b / (2.0 * kp);
  return {I * std::sqrt(2.0 * I * x), y, 2.0 * y};
}

cplx moment_ss(unsigned l, unsigned k, const SystemParams& p, double series_tol,
               std::size_t budget) {
  const MomentParams mp = moment_params(p);
  if (!(mp.y > 0)) throw OutOfRegime("moment_ss: gamma_b = 0 has no unique steady state, use moment_gb0");
  if ((l + k) % 2 == 1) return 0.0;  // parity: R_m vanishes for odd m
  const cplx nu = mp.mu / std::sqrt(2.0);
  const double x = std::norm(nu);
  namespace mpx = boost::multiprecision;
  // Series terms reach 3^m in magnitude; each tier carries ~0.48 m + 25 digits.
  std::optional<double> ratio = detail::moment_ratio<mpx::cpp_bin_float_50>(l, k, x, mp.y, series_tol, budget, 52);
  if (!ratio) ratio = detail::moment_ratio<mpx::number<mpx::cpp_bin_float<150>>>(l, k, x, mp.y, series_tol, budget, 260);
  if (!ratio) ratio = detail::moment_ratio<mpx::number<mpx::cpp_bin_float<500>>>(l, k, x, mp.y, series_tol, budget, 990);
  if (!ratio)
    ratio = detail::moment_ratio<mpx::number<mpx::cpp_bin_float<1500>>>(l, k, x, mp.y, series_tol, budget, 3070);
  if (!ratio) throw SeriesNotConverged("moment_ss: series needs more than 3070 terms at |mu|^2/2=" + std::to_string(x));
  const cplx pre = std::pow(std::conj(-nu), static_cast<int>(l)) * std::pow(-nu, static_cast<int>(k));
  return pre * *ratio / std::pow(2.0, 0.5 * (l + k));
}

cplx amplitude_gb0(const SystemParams& p, Form form) {
  p.validate();
  if (p.gamma_b != 0.0) throw OutOfRegime("amplitude_gb0: requires gamma_b = 0");
  if (!(p.gamma_a > 0)) throw InvalidArgument("amplitude_gb0: gamma_a must be positive");
  const double den = p.gamma_a * p.kappa_total();
  if (!(den > 0)) throw InvalidArgument("amplitude_gb0: zero two-photon loss");
  const double c = (form == Form::literature ? 2.0 : 1.0) * p.g * p.lambda_a / den;
  return -I * std::sqrt(I * c);
}

cplx moment_gb0(unsigned l, unsigned k, const SystemParams& p, Form form) {
  const cplx beta = amplitude_gb0(p, form);
  return std::pow(std::conj(beta), static_cast<int>(l)) * std::pow(beta, static_cast<int>(k));
}

double qfi_closed_form(const InitialState& s, double t, Form form) {
  const double t2 = t * t;
  if (const auto* sc = std::get_if<Semiclassical>(&s)) {
    if (sc->alpha2 < 0 || sc->n < 0) throw InvalidArgument("qfi_closed_form: negative occupation");
    return 4.0 * (sc->alpha2 * (2 * sc->n * sc->n + 2 * sc->n + 2) + sc->n * (sc->n - 1)) * t2;
  }
  if (const auto* q = std::get_if<FullyQuantum>(&s)) {
    if (q->n1 < 0 || q->n2 < 0) throw InvalidArgument("qfi_closed_form: negative occupation");
    return 4.0 * (q->n1 * (2 * q->n2 * q->n2 + 2 * q->n2 + 2) + q->n2 * (q->n2 - 1)) * t2;
  }
  const auto& c = std::get<Classical>(s);
  if (c.alpha1_2 < 0 || c.alpha2_2 < 0) throw InvalidArgument("qfi_closed_form: negative occupation");
  if (form == Form::literature) return c.alpha2_2 * c.alpha2_2 * t2;
  // 4 t^2 Var(G) for |alpha1>|alpha2>
  return 4.0 * t2 * (c.alpha2_2 * c.alpha2_2 + 4.0 * c.alpha1_2 * c.alpha2_2 + 2.0 * c.alpha1_2);
}

Allocation optimal_allocation(double n_total, double t) {
  if (!(n_total > 0)) throw InvalidArgument("optimal_allocation: N must be positive");
  return {2.0 * n_total / 3.0, 32.0 / 27.0 * n_total * n_total * n_total * t * t};
}

double qfi_gb0(const SystemParams& p, Form form) {
  const double k = p.gamma_a * p.kappa_e;
  const double s = 2.0 * p.g * p.g;
  const double f = 2.0 * p.lambda_a * (k - s) * (k - s) / (p.g * (k + s) * (k + s) * (k + s));
  return form == Form::literature ? f : 0.5 * f;
}

double qfi_three_level_g0(const SystemParams& p, Form form) {
  const double s = p.kappa_e + p.gamma_b;
  const double ga = form == Form::literature ? p.gamma_a : p.gamma_a * p.gamma_a;
  return 6.0 * p.lambda_a * p.lambda_a / (ga * s * s);
}

UncertaintyReport delta2_g(Regime regime, Observable obs, const SystemParams& p, Form form,
                           double phi) {
  p.validate();
  const double g = p.g;
  const double lam = p.lambda_a;
  auto report = [&](double v) { return UncertaintyReport{v, regime, obs, form}; };
  const double conv = form == Form::literature ? 1.0 : 2.0;
  switch (regime) {
    case Regime::gb0:
    case Regime::gb0_kappa: {
      if (p.gamma_b != 0.0) throw OutOfRegime("delta2_g: gb0 regimes require gamma_b = 0");
      if (regime == Regime::gb0 && p.kappa_e != 0.0) throw OutOfRegime("delta2_g: gb0 requires kappa_e = 0");
      if (!(g > 0) || !(lam > 0) || !(p.gamma_a > 0)) throw OutOfRegime("delta2_g: need g, lambda_a, gamma_a > 0");
      const double k = p.gamma_a * p.kappa_e;
      const double s = 2.0 * g * g;
      const double photon = regime == Regime::gb0 ? conv * g * g * g / lam
                                                  : conv * g * (k + s) * (k + s) * (k + s) / (2.0 * lam * (k - s) * (k - s));
      if (obs == Observable::photon) return report(photon);
      if (obs == Observable::qcrb) return report(1.0 / qfi_gb0(p, form));
      const double c = std::cos(phi) - std::sin(phi);
      if (std::abs(c) < 1e-12) throw DivergentUncertainty("delta2_g: homodyne phase orthogonal to the signal");
      return report(2.0 * photon / (c * c));
    }
    case Regime::three_level: {
      if (!(lam > 0) || !(p.gamma_a > 0)) throw OutOfRegime("delta2_g: need lambda_a, gamma_a > 0");
      const double s = p.kappa_e + p.gamma_b;
      const double ga = form == Form::literature ? p.gamma_a : p.gamma_a * p.gamma_a;
      const double base = ga * s * s / (lam * lam);
      if (obs == Observable::photon) return report(3.0 * base / 16.0);
      if (obs == Observable::qcrb) return report(1.0 / qfi_three_level_g0(p, form));
      if (form == Form::model)
        throw DivergentUncertainty("delta2_g: the signal quadrature has zero mean in the three-level steady state");
      return report(base);
    }
    case Regime::normal_phase:
    case Regime::thermal:
    case Regime::critical: {
      if (obs != Observable::photon) throw InvalidArgument("delta2_g: normal-phase forms exist for photon counting only");
      detail::require_normal_phase(p);
      if (!(g > 0) || !(lam > 0)) throw OutOfRegime("delta2_g: need g, lambda_a > 0");
      if (regime == Regime::normal_phase) return report(detail::delta2_thermal(p, 0.0, Form::literature));
      if (regime == Regime::thermal) return report(detail::delta2_thermal(p, p.nbar, form));
      const double gap = p.gamma_a * p.gamma_b - 2.0 * g * lam;
      if (form == Form::literature) return report(gap * gap / (4.0 * lam * lam * p.gamma_a * p.gamma_b));
      return report(gap * gap / (2.0 * lam * lam));
    }
  }
  throw InvalidArgument("delta2_g: unknown regime");
}

double characteristic_time(const SystemParams& p, RelaxRegime regime, Form form) {
  p.validate();
  if (regime == RelaxRegime::single_photon) {
    if (!(p.gamma_b > 0)) throw Divergence("characteristic_time: gamma_b = 0");
    return 1.0 / p.gamma_b;
  }
  if (!(p.gamma_a > 0)) throw InvalidArgument("characteristic_time: gamma_a must be positive");
  if (p.g == 0.0 || p.lambda_a == 0.0) throw Divergence("characteristic_time: divergent at g = 0");
  if (form == Form::literature) return p.gamma_a * p.kappa_total() / (8.0 * p.g * p.lambda_a);
  // linearized amplitude relaxation rate 4 g lambda_a / gamma_a
  return p.gamma_a / (4.0 * p.g * p.lambda_a);
}

double critical_lambda(const SystemParams& p) {
  if (!(p.g > 0)) throw InvalidArgument("critical_lambda: g must be positive");
  return p.gamma_a * p.gamma_b / (2.0 * p.g);
}

double delta2_lambda(const SystemParams& p, Form form) {
  if (!(p.g > 0)) throw InvalidArgument("delta2_lambda: g must be positive");
  const double v = p.lambda_a * (2.0 * p.g * p.g + p.gamma_a * p.kappa_e) / (2.0 * p.g);
  return form == Form::literature ? v : 2.0 * v;
}

SensorReport lambda_sensor(const SystemParams& p, Form form) {
  p.validate();
  if (p.gamma_b != 0.0) throw OutOfRegime("lambda_sensor: requires gamma_b = 0");
  if (!(p.g > 0)) throw InvalidArgument("lambda_sensor: g must be positive");
  SensorReport r{};
  r.delta2_lambda = delta2_lambda(p, form);
  r.n_b = moment_gb0(1, 1, p, form).real();
  r.delta2_lambda_vs_nb = p.lambda_a * p.lambda_a / r.n_b;
  const double k = p.gamma_a * p.kappa_e;
  r.g_opt_stated = std::sqrt(k);
  r.delta2_opt_stated = p.lambda_a * std::sqrt(2.0 * k);
  if (k > 0) {
    SystemParams q = p;
    q.g = r.g_opt_stated;
    r.delta2_at_stated = delta2_lambda(q, form);
    auto f = [&](double g) {
      SystemParams s = p;
      s.g = g;
      return delta2_lambda(s, form);
    };
    // bracket wide around the scale sqrt(gamma_a kappa_e)
    const auto best = boost::math::tools::brent_find_minima(f, 1e-3 * std::sqrt(k), 1e3 * std::sqrt(k),
                                                            std::numeric_limits<double>::digits);
    r.g_opt = best.first;
    r.delta2_opt = best.second;
  } else {
    r.delta2_at_stated = 0.0;
  }
  return r;
}

double thermal_occupation(double x) {
  if (!(x > 0)) throw InvalidArgument("thermal_occupation: argument must be positive");
  return 1.0 / std::expm1(x);
}

}  // namespace pdc
