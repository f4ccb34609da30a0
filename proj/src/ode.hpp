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

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pdc/dynamics.hpp"

namespace pdc {

namespace detail {

using OdeState = std::vector<cplx>;

// Adaptive Dormand-Prince integration of x' = f(x) from 0 to t_end.
template <class Rhs>
std::size_t integrate(Rhs&& rhs, OdeState& x, double t_end, const Tolerances& tol, double dt0,
                      std::size_t max_steps = 50'000'000) {
  namespace ode = boost::numeric::odeint;
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidArgument("integrate: time must be finite and >= 0");
  if (t_end == 0.0) return 0;
  auto stepper = ode::make_controlled(tol.abs, tol.rel, ode::runge_kutta_dopri5<OdeState>());
  auto sys = [&rhs](const OdeState& in, OdeState& out, double) { rhs(in, out); };
  double t = 0.0;
  double dt = std::min(dt0, t_end);
  std::size_t attempts = 0;
  std::size_t accepted = 0;
  while (t_end - t > 1e-15 * t_end) {
    if (t + dt > t_end) dt = t_end - t;
    if (dt < 1e-15 * std::max(1.0, t_end))
      throw IntegrationFailure("integrate: step size underflow at t=" + std::to_string(t));
    if (stepper.try_step(sys, x, t, dt) == ode::success) ++accepted;
    if (++attempts > max_steps) throw IntegrationFailure("integrate: step budget exhausted at t=" + std::to_string(t));
  }
  for (const auto& v : x)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw IntegrationFailure("integrate: non-finite state");
  return accepted;
}

inline auto sparse_rhs(const SparseMatrix& m) {
  return [&m](const OdeState& in, OdeState& out) {
    Eigen::Map<const Vector> x(in.data(), static_cast<Eigen::Index>(in.size()));
    Eigen::Map<Vector> y(out.data(), static_cast<Eigen::Index>(out.size()));
    y.noalias() = m * x;
  };
}

}  // namespace detail

}  // namespace pdc
