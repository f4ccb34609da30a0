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

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pdc/dynamics.hpp"
#include "pdc/errors.hpp"

namespace pdc {

// Which normalization a closed form is quoted in.
//   literature: the standard quoted expression, evaluated verbatim.
//   model:      re-derived for the master equations built by dynamics, so it can be compared
//               against simulation one to one.
enum class Form { literature, model };

inline const char* to_string(Form f) { return f == Form::literature ? "literature" : "model"; }

// ---------------------------------------------------------------- special functions

// 2F1(-m, y; z; 2) as the finite sum over n <= m, Pochhammer symbols as running products.
template <class Real>
Real hyp2f1_terminating_t(std::uint64_t m, const Real& y, const Real& z) {
  Real term = 1;
  Real sum = 1;
  for (std::uint64_t n = 0; n < m; ++n) {
    const Real zn = z + Real(n);
    if (zn == 0) throw InvalidArgument("hyp2f1_terminating: pole in (z)_n at n=" + std::to_string(n));
    term *= Real(static_cast<double>(n) - static_cast<double>(m)) * (y + Real(n)) * 2 / (zn * Real(n + 1));
    sum += term;
  }
  return sum;
}

// Double-precision version with compensated long-double accumulation.
double hyp2f1_terminating(std::uint64_t m, double y, double z);

// ---------------------------------------------------------------- steady-state moments

struct MomentParams {
  cplx mu;   // i sqrt(4 i g lambda_a / (gamma_a kappa')), reduces to i sqrt(2 i lambda_a / g) at kappa_e = 0
  double y;  // gamma_b / (2 kappa'), reduces to gamma_a gamma_b / (4 g^2)
  double z;  // 2 y
};

MomentParams moment_params(const SystemParams& p);

// <b†^l b^k> in the steady state of the reduced model with gamma_b > 0 (complex-P series).
cplx moment_ss(unsigned l, unsigned k, const SystemParams& p, double series_tol = 1e-15,
               std::size_t budget = 100000);

// Coherent amplitude of the gamma_b = 0 steady state (principal branch).
cplx amplitude_gb0(const SystemParams& p, Form form = Form::literature);

cplx moment_gb0(unsigned l, unsigned k, const SystemParams& p, Form form = Form::literature);

// ---------------------------------------------------------------- closed-system QFI

struct Semiclassical {
  double alpha2;  // |alpha|^2 of the pump
  double n;       // signal Fock number
};
struct FullyQuantum {
  double n1;
  double n2;
};
struct Classical {
  double alpha1_2;
  double alpha2_2;
};
using InitialState = std::variant<Semiclassical, FullyQuantum, Classical>;

double qfi_closed_form(const InitialState& s, double t, Form form = Form::literature);

struct Allocation {
  double n_opt;
  double f_opt;
};

// Best split of N photons into pump (N - n) and signal (n).
Allocation optimal_allocation(double n_total, double t);

// ---------------------------------------------------------------- uncertainties

enum class Regime { gb0, gb0_kappa, three_level, normal_phase, thermal, critical };
enum class Observable { photon, homodyne, qcrb };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::gb0: return "gb0";
    case Regime::gb0_kappa: return "gb0_kappa";
    case Regime::three_level: return "three_level";
    case Regime::normal_phase: return "normal_phase";
    case Regime::thermal: return "thermal";
    case Regime::critical: return "critical";
  }
  return "?";
}

inline const char* to_string(Observable o) {
  switch (o) {
    case Observable::photon: return "photon";
    case Observable::homodyne: return "homodyne";
    case Observable::qcrb: return "qcrb";
  }
  return "?";
}

struct UncertaintyReport {
  double delta2;
  Regime regime;
  Observable observable;
  Form form;
};

// Gaussian QFI of the gamma_b = 0 steady state.
double qfi_gb0(const SystemParams& p, Form form = Form::literature);

// QFI of the three-level steady state at g = 0.
double qfi_three_level_g0(const SystemParams& p, Form form = Form::literature);

UncertaintyReport delta2_g(Regime regime, Observable obs, const SystemParams& p, Form form = Form::literature,
                           double phi = 0.0);

// ---------------------------------------------------------------- times, thresholds, sensor

enum class RelaxRegime { two_photon, single_photon };

double characteristic_time(const SystemParams& p, RelaxRegime regime, Form form = Form::literature);

double critical_lambda(const SystemParams& p);

struct SensorReport {
  double delta2_lambda;         // at the given g
  double n_b;                   // signal photon number at the given g
  double delta2_lambda_vs_nb;   // lambda_a^2 / N_b
  std::optional<double> g_opt;  // numerical argmin over g
  std::optional<double> delta2_opt;
  double g_opt_stated;          // sqrt(gamma_a kappa_e)
  double delta2_at_stated;      // value at the stated coupling
  double delta2_opt_stated;     // lambda_a sqrt(2 gamma_a kappa_e)
};

double delta2_lambda(const SystemParams& p, Form form = Form::literature);

SensorReport lambda_sensor(const SystemParams& p, Form form = Form::literature);

// Mean thermal occupation 1/(e^x - 1).
double thermal_occupation(double x);

}  // namespace pdc
