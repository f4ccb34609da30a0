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

#include "pdc/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "pdc/analytic.hpp"
#include "pdc/meanfield.hpp"
#include "pdc/metrology.hpp"

namespace pdc::cli {

namespace {

using Json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

const std::vector<std::string> kParamNames{"g",       "lambda_a", "gamma_a", "gamma_b",
                                           "kappa_e", "omega1",   "omega2",  "nbar"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": not a number: '" + v + "'");
  if (!std::isfinite(x)) throw ConfigError(key + ": value must be finite");
  return x;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t x = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": not a non-negative integer: '" + v + "'");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json num(double x) { return std::isfinite(x) ? Json(x) : Json(fmt(x)); }

}  // namespace

// ---------------------------------------------------------------- tasks

const std::vector<Task>& all_tasks() {
  static const std::vector<Task> t{Task::steady_moments, Task::qfi, Task::uncertainty, Task::meanfield,
                                   Task::gap,            Task::fig2, Task::sensor};
  return t;
}

const char* to_string(Task t) {
  switch (t) {
    case Task::steady_moments: return "steady_moments";
    case Task::qfi: return "qfi";
    case Task::uncertainty: return "uncertainty";
    case Task::meanfield: return "meanfield";
    case Task::gap: return "gap";
    case Task::fig2: return "fig2";
    case Task::sensor: return "sensor";
  }
  return "?";
}

const char* describe(Task t) {
  switch (t) {
    case Task::steady_moments: return "series moments <b†^l b^k> vs the reduced-model steady state (gamma_b > 0)";
    case Task::qfi: return "closed-form steady-state QFI vs Gaussian (gamma_b = 0) or spectral (gamma_b > 0) QFI";
    case Task::uncertainty: return "photon, homodyne and QCRB uncertainties of g, closed forms vs error propagation";
    case Task::meanfield: return "mean-field branches, stability, and fluctuation moments vs the Lyapunov solution";
    case Task::gap: return "Liouvillian spectral gap of the reduced model with a truncation check";
    case Task::fig2: return "signal photon number, three-level closed form vs the exact reduced-model steady state";
    case Task::sensor: return "delta^2 lambda_a over a g sweep (gamma_b = 0) and its optimum";
  }
  return "?";
}

std::optional<Task> parse_task(const std::string& name) {
  for (Task t : all_tasks())
    if (name == to_string(t)) return t;
  return std::nullopt;
}

// ---------------------------------------------------------------- parameters

void set_param(SystemParams& p, const std::string& name, double value) {
  if (name == "g") p.g = value;
  else if (name == "lambda_a") p.lambda_a = value;
  else if (name == "gamma_a") p.gamma_a = value;
  else if (name == "gamma_b") p.gamma_b = value;
  else if (name == "kappa_e") p.kappa_e = value;
  else if (name == "omega1") p.omega1 = value;
  else if (name == "omega2") p.omega2 = value;
  else if (name == "nbar") p.nbar = value;
  else throw ConfigError("unknown parameter '" + name + "'");
}

double get_param(const SystemParams& p, const std::string& name) {
  if (name == "g") return p.g;
  if (name == "lambda_a") return p.lambda_a;
  if (name == "gamma_a") return p.gamma_a;
  if (name == "gamma_b") return p.gamma_b;
  if (name == "kappa_e") return p.kappa_e;
  if (name == "omega1") return p.omega1;
  if (name == "omega2") return p.omega2;
  if (name == "nbar") return p.nbar;
  throw ConfigError("unknown parameter '" + name + "'");
}

std::vector<double> Scenario::grid() const {
  if (sweep) return sweep->values;
  return {get_param(params, grid_param())};
}

std::string Scenario::grid_param() const { return sweep ? sweep->param : "g"; }

SystemParams Scenario::at(double value) const {
  SystemParams p = params;
  set_param(p, grid_param(), value);
  return p;
}

void Scenario::validate() const {
  if (tasks.empty()) throw ConfigError("no tasks requested");
  if (sweep) {
    if (std::find(kParamNames.begin(), kParamNames.end(), sweep->param) == kParamNames.end())
      throw ConfigError("sweep.param: unknown parameter '" + sweep->param + "'");
    if (sweep->values.empty()) throw ConfigError("sweep: empty grid");
    for (double v : sweep->values)
      if (!std::isfinite(v)) throw ConfigError("sweep: non-finite grid value");
  }
  if (truncation.signal < 3) throw ConfigError("truncation.signal must be at least 3");
  if (truncation.pump < 2) throw ConfigError("truncation.pump must be at least 2");
  if (truncation.max_signal < truncation.signal) throw ConfigError("truncation.max_signal below truncation.signal");
  if (truncation.step == 0) throw ConfigError("truncation.step must be positive");
  for (double t : {tolerances.ode.rel, tolerances.ode.abs, tolerances.steady, tolerances.floor, tolerances.population})
    if (!(t > 0)) throw ConfigError("tolerances must be positive");
  if (!(tolerances.compare >= 0)) throw ConfigError("tolerances.compare must be non-negative");
  if (!(tolerances.fd_step >= 0)) throw ConfigError("tolerances.fd_step must be non-negative");

  for (double v : grid()) {
    const SystemParams p = at(v);
    try {
      p.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("params: ") + e.what());
    }
    if (!(p.gamma_a > 0)) throw ConfigError("params.gamma_a must be positive");
    for (Task t : tasks) {
      const std::string name = to_string(t);
      switch (t) {
        case Task::steady_moments:
          if (!(p.gamma_b > 0) || p.nbar != 0.0 || !(p.g > 0))
            throw ConfigError(name + " needs g > 0, gamma_b > 0 and nbar = 0");
          break;
        case Task::qfi:
        case Task::uncertainty:
          if (p.nbar != 0.0 || !(p.g > 0) || !(p.lambda_a > 0))
            throw ConfigError(name + " needs g > 0, lambda_a > 0 and nbar = 0");
          if (p.gamma_b == 0.0 && !(p.kappa_e > 0)) throw ConfigError(name + " with gamma_b = 0 needs kappa_e > 0");
          break;
        case Task::meanfield:
          if (!(p.g > 0) || !(p.gamma_b > 0)) throw ConfigError(name + " needs g > 0 and gamma_b > 0");
          break;
        case Task::gap:
          if (!(p.g > 0) && !(p.gamma_b > 0)) throw ConfigError(name + " needs g > 0 or gamma_b > 0");
          break;
        case Task::fig2:
          if (grid_param() != "g") throw ConfigError(name + " sweeps g");
          if (!(p.g > 0) || p.nbar != 0.0) throw ConfigError(name + " needs g > 0 and nbar = 0");
          break;
        case Task::sensor:
          if (!sweep || sweep->param != "g" || sweep->values.size() < 3)
            throw ConfigError(name + " needs a sweep over g with at least 3 points");
          if (p.gamma_b != 0.0 || !(p.kappa_e > 0) || !(p.g > 0))
            throw ConfigError(name + " needs gamma_b = 0, kappa_e > 0 and g > 0");
          break;
      }
    }
  }
}

// ---------------------------------------------------------------- config

Scenario parse_scenario(std::istream& in, bool strict, std::vector<std::string>* ignored) {
  Scenario s;
  std::map<std::string, std::string> kv;
  std::vector<std::string> order;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (kv.count(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv[key] = value;
    order.push_back(key);
  }

  std::optional<std::vector<double>> values;
  std::optional<std::string> sweep_param;
  std::optional<double> start, stop;
  std::optional<std::size_t> count;
  std::string spacing = "linear";
  bool have_tasks = false;

  for (const auto& key : order) {
    const std::string& v = kv[key];
    if (key == "name") {
      if (v.empty() || v.find_first_of("/\\ ") != std::string::npos) throw ConfigError("name: must be a plain word");
      s.name = v;
    } else if (key == "tasks") {
      have_tasks = true;
      for (const auto& t : split_list(v)) {
        const auto task = parse_task(t);
        if (!task) throw ConfigError("tasks: unknown task '" + t + "'");
        if (std::find(s.tasks.begin(), s.tasks.end(), *task) == s.tasks.end()) s.tasks.push_back(*task);
      }
    } else if (key.rfind("params.", 0) == 0) {
      set_param(s.params, key.substr(7), parse_double(key, v));
    } else if (key == "sweep.param") {
      sweep_param = v;
    } else if (key == "sweep.values") {
      values.emplace();
      for (const auto& x : split_list(v)) values->push_back(parse_double(key, x));
    } else if (key == "sweep.start") {
      start = parse_double(key, v);
    } else if (key == "sweep.stop") {
      stop = parse_double(key, v);
    } else if (key == "sweep.count") {
      count = parse_size(key, v);
    } else if (key == "sweep.spacing") {
      if (v != "linear" && v != "log") throw ConfigError("sweep.spacing: linear or log");
      spacing = v;
    } else if (key == "truncation.signal") {
      s.truncation.signal = parse_size(key, v);
    } else if (key == "truncation.pump") {
      s.truncation.pump = parse_size(key, v);
    } else if (key == "truncation.max_signal") {
      s.truncation.max_signal = parse_size(key, v);
    } else if (key == "truncation.step") {
      s.truncation.step = parse_size(key, v);
    } else if (key == "truncation.auto") {
      s.truncation.automatic = parse_bool(key, v);
    } else if (key == "tolerances.rel") {
      s.tolerances.ode.rel = parse_double(key, v);
    } else if (key == "tolerances.abs") {
      s.tolerances.ode.abs = parse_double(key, v);
    } else if (key == "tolerances.steady") {
      s.tolerances.steady = parse_double(key, v);
    } else if (key == "tolerances.compare") {
      s.tolerances.compare = parse_double(key, v);
    } else if (key == "tolerances.floor") {
      s.tolerances.floor = parse_double(key, v);
    } else if (key == "tolerances.population") {
      s.tolerances.population = parse_double(key, v);
    } else if (key == "tolerances.eigen_floor") {
      s.tolerances.eigen_floor = parse_double(key, v);
    } else if (key == "tolerances.fd_step") {
      s.tolerances.fd_step = parse_double(key, v);
    } else if (key == "homodyne.phi") {
      s.phi = parse_double(key, v);
    } else if (key == "meanfield.full_model") {
      s.full_model = parse_bool(key, v);
    } else if (strict) {
      throw ConfigError("unknown key '" + key + "'");
    } else if (ignored) {
      ignored->push_back(key);
    }
  }

  if (!have_tasks) throw ConfigError("missing key 'tasks'");
  const bool ranged = start || stop || count;
  if (values && ranged) throw ConfigError("sweep: give either sweep.values or sweep.start/stop/count");
  if (ranged) {
    if (!start || !stop || !count) throw ConfigError("sweep: start, stop and count are all required");
    if (*count < 1) throw ConfigError("sweep.count must be positive");
    values.emplace();
    if (spacing == "log" && !(*start > 0 && *stop > 0)) throw ConfigError("sweep: log spacing needs positive bounds");
    for (std::size_t i = 0; i < *count; ++i) {
      const double f = *count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(*count - 1);
      values->push_back(spacing == "log" ? std::exp(std::log(*start) + f * (std::log(*stop) - std::log(*start)))
                                         : *start + f * (*stop - *start));
    }
  }
  if (values || sweep_param) {
    if (!sweep_param) throw ConfigError("sweep: missing sweep.param");
    if (!values) throw ConfigError("sweep: missing grid values");
    s.sweep = Sweep{*sweep_param, *values};
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path, bool strict, std::vector<std::string>* ignored) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  return parse_scenario(in, strict, ignored);
}

std::string default_config() {
  Scenario s;
  s.params.g = 0.02;
  s.params.lambda_a = 0.01;
  s.params.gamma_a = 10.0;
  s.params.gamma_b = 1.0;
  std::ostringstream o;
  o << "# pdclab scenario; one key per line, '#' starts a comment\n"
    << "name = " << s.name << "\n"
    << "tasks = fig2\n\n";
  for (const auto& n : kParamNames) o << "params." << n << " = " << fmt(get_param(s.params, n)) << "\n";
  o << "\n# sweep.param = g\n"
    << "# sweep.values = 0.02, 0.05, 0.1\n"
    << "# or sweep.start / sweep.stop / sweep.count / sweep.spacing (linear | log)\n\n"
    << "truncation.signal = " << s.truncation.signal << "\n"
    << "truncation.pump = " << s.truncation.pump << "\n"
    << "truncation.max_signal = " << s.truncation.max_signal << "\n"
    << "truncation.step = " << s.truncation.step << "\n"
    << "truncation.auto = " << (s.truncation.automatic ? "true" : "false") << "\n\n"
    << "tolerances.rel = " << fmt(s.tolerances.ode.rel) << "\n"
    << "tolerances.abs = " << fmt(s.tolerances.ode.abs) << "\n"
    << "tolerances.steady = " << fmt(s.tolerances.steady) << "\n"
    << "tolerances.compare = " << fmt(s.tolerances.compare) << "\n"
    << "tolerances.floor = " << fmt(s.tolerances.floor) << "\n"
    << "tolerances.population = " << fmt(s.tolerances.population) << "\n"
    << "tolerances.eigen_floor = " << fmt(s.tolerances.eigen_floor) << "\n"
    << "tolerances.fd_step = " << fmt(s.tolerances.fd_step) << "\n\n"
    << "homodyne.phi = " << fmt(s.phi) << "\n"
    << "meanfield.full_model = " << (s.full_model ? "true" : "false") << "\n";
  return o.str();
}

// ---------------------------------------------------------------- comparison rows

ComparisonRow compare(std::string quantity, double analytic, double numeric, double tolerance, double floor) {
  double rel = 0.0;
  if (std::isnan(analytic) || std::isnan(numeric)) {
    rel = std::numeric_limits<double>::infinity();
  } else if (std::isinf(analytic)) {
    // a divergent closed form is matched by any numeric value beyond 1/floor
    rel = (std::isinf(numeric) && (numeric > 0) == (analytic > 0)) || std::abs(numeric) >= 1.0 / floor
              ? 0.0
              : std::numeric_limits<double>::infinity();
  } else {
    rel = std::abs(analytic - numeric) / std::max(std::abs(analytic), floor);
  }
  return {std::move(quantity), analytic, numeric, rel, tolerance, rel <= tolerance};
}

bool all_pass(const std::vector<ComparisonRow>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const ComparisonRow& r) { return r.pass; });
}

std::string format_report(const std::vector<ComparisonRow>& rows) {
  if (rows.empty()) throw InvalidArgument("format_report: no rows");
  std::size_t w = 8;
  for (const auto& r : rows) w = std::max(w, r.quantity.size());
  std::ostringstream o;
  o << std::left << std::setw(static_cast<int>(w)) << "quantity" << "  " << std::setw(24) << "analytic"
    << std::setw(24) << "numeric" << std::setw(24) << "rel_dev" << std::setw(24) << "tolerance" << "pass\n";
  for (const auto& r : rows)
    o << std::setw(static_cast<int>(w)) << r.quantity << "  " << std::setw(24) << fmt(r.analytic) << std::setw(24)
      << fmt(r.numeric) << std::setw(24) << fmt(r.rel_dev) << std::setw(24) << fmt(r.tolerance)
      << (r.pass ? "yes" : "NO") << "\n";
  o << (all_pass(rows) ? "overall: pass\n" : "overall: FAIL\n");
  return o.str();
}

namespace {

Json rows_json(const std::vector<ComparisonRow>& rows) {
  Json a = Json::array();
  for (const auto& r : rows)
    a.push_back({{"quantity", r.quantity},
                 {"analytic", num(r.analytic)},
                 {"numeric", num(r.numeric)},
                 {"rel_dev", num(r.rel_dev)},
                 {"tolerance", num(r.tolerance)},
                 {"pass", r.pass}});
  return a;
}

Json metadata(const Scenario& s) {
  Json params = Json::object();
  for (const auto& n : kParamNames) params[n] = get_param(s.params, n);
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["scenario"] = s.name;
  j["params"] = params;
  if (s.sweep) j["sweep"] = {{"param", s.sweep->param}, {"values", s.sweep->values}};
  j["truncation"] = {{"signal", s.truncation.signal},
                     {"pump", s.truncation.pump},
                     {"max_signal", s.truncation.max_signal},
                     {"step", s.truncation.step},
                     {"auto", s.truncation.automatic}};
  j["tolerances"] = {{"rel", s.tolerances.ode.rel},
                     {"abs", s.tolerances.ode.abs},
                     {"steady", s.tolerances.steady},
                     {"compare", s.tolerances.compare},
                     {"floor", s.tolerances.floor},
                     {"population", s.tolerances.population},
                     {"eigen_floor", s.tolerances.eigen_floor},
                     {"fd_step", s.tolerances.fd_step}};
  return j;
}

}  // namespace

std::string report_json(const std::vector<ComparisonRow>& rows, const Scenario& s) {
  if (rows.empty()) throw InvalidArgument("report_json: no rows");
  Json j = metadata(s);
  j["rows"] = rows_json(rows);
  j["pass"] = all_pass(rows);
  return j.dump(2) + "\n";
}

std::string to_csv(const Table& t) {
  std::string out;
  auto cell = [](const Cell& c) {
    if (const double* d = std::get_if<double>(&c)) return fmt(*d);
    const std::string& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  };
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell(row[i]);
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------- numerics

namespace {

struct Solved {
  DensityMatrix rho;
  std::size_t d;
};

DensityMatrix reduced_state(const SystemParams& p, std::size_t d, const Scenario& s) {
  const LindbladModel model = build_reduced_model(p, d);
  if (p.gamma_b > 0 || p.nbar > 0) return steady_state(model, s.tolerances.steady).rho;
  // gamma_b = 0: the steady manifold is degenerate; take the branch reached from the coherent amplitude
  const StateVector start = coherent_state(amplitude_gb0(p, Form::model), FockSpace(d));
  return asymptotic_state(model, DensityMatrix::from_pure(start));
}

Solved solve_reduced(const SystemParams& p, const Scenario& s) {
  std::size_t d = s.truncation.signal;
  for (;;) {
    std::optional<DensityMatrix> rho;
    std::string why;
    try {
      rho = reduced_state(p, d, s);
    } catch (const InsufficientTruncation& e) {
      if (!s.truncation.automatic) throw;
      why = e.what();
    }
    if (rho) {
      const double top = rho->matrix()(static_cast<Eigen::Index>(d - 1), static_cast<Eigen::Index>(d - 1)).real();
      if (!s.truncation.automatic || top < s.tolerances.population) return {*rho, d};
      why = "top-level population " + fmt(top);
    }
    if (d + s.truncation.step > s.truncation.max_signal)
      throw InsufficientTruncation("signal truncation exhausted at d=" + std::to_string(d) + ": " + why);
    d += s.truncation.step;
  }
}

DensityFamily reduced_family(const SystemParams& p, std::size_t d, const Scenario& s) {
  return [p, d, &s](double g) {
    SystemParams q = p;
    q.g = g;
    return reduced_state(q, d, s);
  };
}

struct PointOut {
  std::vector<std::vector<Cell>> rows;
  std::vector<ComparisonRow> cmp;
};

std::string tag(const Scenario& s, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return s.grid_param() + "=" + buf + " ";
}

double safe(const std::function<double()>& f) {
  try {
    return f();
  } catch (const Divergence&) {
    return std::numeric_limits<double>::infinity();
  }
}

PointOut steady_moments_point(const Scenario& s, double v) {
  const SystemParams p = s.at(v);
  const Solved sol = solve_reduced(p, s);
  const Operator b = annihilation(FockSpace(sol.d));
  const Operator bd = b.adjoint();
  PointOut out;
  const std::vector<std::pair<unsigned, unsigned>> lk{{1, 1}, {0, 2}, {2, 0}, {2, 2}};
  for (auto [l, k] : lk) {
    Operator m = identity({sol.d});
    for (unsigned i = 0; i < l; ++i) m = m * bd;
    for (unsigned i = 0; i < k; ++i) m = m * b;
    const cplx a = moment_ss(l, k, p);
    const cplx n = expectation(m, sol.rho);
    const double dev = std::abs(a - n);
    out.rows.push_back({v, static_cast<double>(sol.d), static_cast<double>(l), static_cast<double>(k), a.real(),
                        a.imag(), n.real(), n.imag(), dev});
    ComparisonRow r = compare(tag(s, v) + "moment l=" + std::to_string(l) + " k=" + std::to_string(k),
                              std::abs(a), std::abs(n), s.tolerances.compare, s.tolerances.floor);
    r.rel_dev = dev / std::max(std::abs(a), s.tolerances.floor);
    r.pass = r.rel_dev <= r.tolerance;
    out.cmp.push_back(r);
  }
  return out;
}

PointOut qfi_point(const Scenario& s, double v) {
  const SystemParams p = s.at(v);
  const Solved sol = solve_reduced(p, s);
  const DensityFamily fam = reduced_family(p, sol.d, s);
  PointOut out;
  double lit = 0, model = 0, numeric = 0;
  std::string method;
  if (p.gamma_b == 0.0) {
    lit = qfi_gb0(p, Form::literature);
    model = qfi_gb0(p, Form::model);
    numeric = qfi_gaussian(fam, annihilation(FockSpace(sol.d)), p.g, s.tolerances.fd_step).value;
    method = "gaussian";
    const double prod = delta2_g(Regime::gb0_kappa, Observable::photon, p, Form::literature).delta2 * lit;
    out.cmp.push_back(compare(tag(s, v) + "photon delta2 x gaussian qfi (closed forms)", 1.0, prod, 1e-12,
                              s.tolerances.floor));
  } else {
    lit = qfi_three_level_g0(p, Form::literature);
    model = qfi_three_level_g0(p, Form::model);
    numeric = qfi_spectral(fam, p.g, s.tolerances.fd_step, s.tolerances.eigen_floor).value;
    method = "spectral";
  }
  const ComparisonRow r = compare(tag(s, v) + "qfi " + method, model, numeric, s.tolerances.compare, s.tolerances.floor);
  out.rows.push_back({v, static_cast<double>(sol.d), method, lit, model, numeric, r.rel_dev});
  out.cmp.push_back(r);
  return out;
}

PointOut uncertainty_point(const Scenario& s, double v) {
  const SystemParams p = s.at(v);
  const Solved sol = solve_reduced(p, s);
  const DensityFamily fam = reduced_family(p, sol.d, s);
  const Operator b = annihilation(FockSpace(sol.d));
  const double h = s.tolerances.fd_step;
  const bool gb0 = p.gamma_b == 0.0;
  const Regime regime = gb0 ? Regime::gb0_kappa : Regime::three_level;
  PointOut out;
  for (Observable o : {Observable::photon, Observable::homodyne, Observable::qcrb}) {
    const double lit = safe([&] { return delta2_g(regime, o, p, Form::literature, s.phi).delta2; });
    const double model = safe([&] { return delta2_g(regime, o, p, Form::model, s.phi).delta2; });
    const double numeric = safe([&] {
      switch (o) {
        case Observable::photon: return error_propagation(photon_stats(fam, b, p.g, h));
        case Observable::homodyne: return error_propagation(homodyne_stats(fam, b, s.phi, p.g, h));
        case Observable::qcrb: break;
      }
      const double f = gb0 ? qfi_gaussian(fam, b, p.g, h).value
                           : qfi_spectral(fam, p.g, h, s.tolerances.eigen_floor).value;
      return 1.0 / f;
    });
    const ComparisonRow r = compare(tag(s, v) + "delta2 g " + to_string(o), model, numeric, s.tolerances.compare,
                                    s.tolerances.floor);
    out.rows.push_back(
        {v, static_cast<double>(sol.d), to_string(regime), to_string(o), lit, model, numeric, r.rel_dev});
    out.cmp.push_back(r);
  }
  return out;
}

PointOut meanfield_point(const Scenario& s, double v) {
  const SystemParams p = s.at(v);
  PointOut out;
  const double lc = critical_lambda(p);
  const auto sols = steady_solutions(p);
  const StabilityReport normal = build_W(p, sols.front());
  const bool above = p.lambda_a > lc;
  const bool branches = sols.size() > 1;
  const bool unstable = !normal.stable && !normal.marginal;
  const double disagreements = (branches != above ? 1.0 : 0.0) + (unstable != above ? 1.0 : 0.0);
  out.cmp.push_back(compare(tag(s, v) + "phase structure disagreements", 0.0, disagreements, 0.0, 1.0));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double na = nan, nl = nan, dlit = nan, dmod = nan, dnum = nan, a_full = nan, n_full = nan;
  double d_used = nan;
  if (!above && normal.stable) {
    na = fluct_moments_analytic(p, p.nbar).n_fluct;
    nl = fluct_moments_lyapunov(normal, p, p.nbar).n_fluct;
    out.cmp.push_back(compare(tag(s, v) + "fluctuation <db† db>", na, nl, s.tolerances.compare, s.tolerances.floor));
    if (p.lambda_a > 0) {
      dlit = delta2_g_normal(p, p.nbar, Form::literature).delta2;
      dmod = delta2_g_normal(p, p.nbar, Form::model).delta2;
      dnum = delta2_g_normal_numeric(p, p.nbar, s.tolerances.fd_step);
      out.cmp.push_back(compare(tag(s, v) + "normal-phase delta2 g", dmod, dnum, s.tolerances.compare,
                                s.tolerances.floor));
    }
    if (s.full_model) {
      const std::size_t da = s.truncation.pump;
      std::size_t db = std::min<std::size_t>(s.truncation.signal, 12);
      const std::vector<FockSpace> sp{FockSpace(da), FockSpace(db)};
      const DensityMatrix rho = steady_state(build_full_model(p, da, db), s.tolerances.steady).rho;
      a_full = expectation(embed(annihilation(sp[0]), 0, sp), rho).real();
      n_full = expectation(embed(number(sp[1]), 1, sp), rho).real();
      d_used = static_cast<double>(db);
      out.cmp.push_back(compare(tag(s, v) + "full model <a>", sols.front().amp_a.real(), a_full, 0.1,
                                s.tolerances.floor));
      out.cmp.push_back(compare(tag(s, v) + "full model <b† b>", nl, n_full, 0.1, s.tolerances.floor));
    }
  }
  out.rows.push_back({v, lc, static_cast<double>(sols.size()), normal.stable ? "stable" : normal.marginal ? "marginal" : "unstable", na, nl, dlit,
                      dmod, dnum, a_full, n_full, d_used});
  return out;
}

PointOut gap_point(const Scenario& s, double v) {
  const SystemParams p = s.at(v);
  const Solved sol = solve_reduced(p, s);
  const GapReport g = spectral_gap_checked([&p](std::size_t d) { return build_reduced_model(p, d); }, sol.d);
  PointOut out;
  out.rows.push_back({v, static_cast<double>(g.dim), g.gap, static_cast<double>(g.dim_refined), g.gap_refined,
                      g.converged ? "yes" : "no"});
  out.cmp.push_back(compare(tag(s, v) + "gap truncation stability", g.gap_refined, g.gap, 1e-2, s.tolerances.floor));
  return out;
}

PointOut fig2_point(const Scenario& s, double v) {
  const SystemParams p = s.at(v);
  const ThreeLevelState t = three_level_steady_state(p);
  const double tl = t.r11() + 2.0 * t.r22;
  const double ex = moment_ss(1, 1, p).real();
  const Solved sol = solve_reduced(p, s);
  const double lv = expectation(number(FockSpace(sol.d)), sol.rho).real();
  const double rel = std::abs(tl - ex) / std::max(std::abs(ex), s.tolerances.floor);
  PointOut out;
  out.rows.push_back({v, tl, ex, rel, lv, static_cast<double>(sol.d)});
  out.cmp.push_back(compare(tag(s, v) + "N_b three-level vs exact", ex, tl, s.tolerances.compare, s.tolerances.floor));
  out.cmp.push_back(compare(tag(s, v) + "N_b series vs Liouvillian", ex, lv, s.tolerances.compare, s.tolerances.floor));
  return out;
}

PointOut sensor_point(const Scenario& s, double v) {
  const SystemParams p = s.at(v);
  const SensorReport lit = lambda_sensor(p, Form::literature);
  const SensorReport mod = lambda_sensor(p, Form::model);
  PointOut out;
  out.rows.push_back({v, lit.delta2_lambda, mod.delta2_lambda, lit.n_b, mod.n_b});
  out.cmp.push_back(compare(tag(s, v) + "delta2 lambda_a x N_b vs lambda_a^2", p.lambda_a * p.lambda_a,
                            lit.delta2_lambda * lit.n_b, 1e-12, s.tolerances.floor));
  return out;
}

std::vector<PointOut> sweep_points(const Scenario& s, const std::vector<double>& grid, unsigned threads,
                                   PointOut (*fn)(const Scenario&, double)) {
  std::vector<PointOut> res(grid.size());
  std::vector<std::exception_ptr> err(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < grid.size();) {
      try {
        res[i] = fn(s, grid[i]);
      } catch (...) {
        err[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(grid.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : err)
    if (e) std::rethrow_exception(e);
  return res;
}

}  // namespace

TaskOutput run_task(Task task, const Scenario& s, unsigned threads) {
  std::vector<double> grid = s.grid();
  if (task == Task::fig2 && !s.sweep) grid = {0.02, 0.05, 0.1, 0.2, 0.5};
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const std::string gp = s.grid_param();

  TaskOutput out{task, {}, {}};
  PointOut (*fn)(const Scenario&, double) = nullptr;
  switch (task) {
    case Task::steady_moments:
      fn = steady_moments_point;
      out.table.columns = {gp, "d_signal", "l", "k", "re_series", "im_series", "re_numeric", "im_numeric", "abs_dev"};
      break;
    case Task::qfi:
      fn = qfi_point;
      out.table.columns = {gp, "d_signal", "method", "qfi_literature", "qfi_model", "qfi_numeric", "rel_dev"};
      break;
    case Task::uncertainty:
      fn = uncertainty_point;
      out.table.columns = {gp, "d_signal", "regime", "observable", "delta2_literature", "delta2_model",
                           "delta2_numeric", "rel_dev"};
      break;
    case Task::meanfield:
      fn = meanfield_point;
      out.table.columns = {gp,           "lambda_c",     "branches",        "normal_branch",   "n_fluct_analytic",
                           "n_fluct_lyapunov", "delta2_literature", "delta2_model", "delta2_numeric",
                           "a_full",     "nb_full",      "d_signal_full"};
      break;
    case Task::gap:
      fn = gap_point;
      out.table.columns = {gp, "d_signal", "gap", "d_refined", "gap_refined", "converged"};
      break;
    case Task::fig2:
      fn = fig2_point;
      out.table.columns = {"g", "Nb_three_level", "Nb_exact", "rel_dev", "Nb_liouvillian", "d_signal"};
      break;
    case Task::sensor:
      fn = sensor_point;
      out.table.columns = {"g", "delta2_lambda_literature", "delta2_lambda_model", "nb_literature", "nb_model"};
      break;
  }
  Scenario local = s;
  if (task == Task::fig2 && !s.sweep) local.sweep = Sweep{"g", grid};
  const auto points = sweep_points(local, grid, threads, fn);
  for (const auto& pt : points) {
    out.table.rows.insert(out.table.rows.end(), pt.rows.begin(), pt.rows.end());
    out.rows.insert(out.rows.end(), pt.cmp.begin(), pt.cmp.end());
  }

  if (task == Task::fig2 && grid.size() > 1) {
    // deviation must shrink strictly as g decreases
    double violations = 0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i)
      if (!(std::get<double>(points[i].rows[0][3]) < std::get<double>(points[i + 1].rows[0][3]))) violations += 1;
    out.rows.push_back(compare("fig2 rel_dev decreasing with g", 0.0, violations, 0.0, 1.0));
  }
  if (task == Task::sensor) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < points.size(); ++i)
      if (std::get<double>(points[i].rows[0][1]) < std::get<double>(points[best].rows[0][1])) best = i;
    const SystemParams p = local.at(grid[best]);
    const SensorReport r = lambda_sensor(p, Form::literature);
    const double argmin = std::sqrt(p.gamma_a * p.kappa_e / 2.0);
    const double lo = best > 0 ? grid[best] - grid[best - 1] : 0.0;
    const double hi = best + 1 < grid.size() ? grid[best + 1] - grid[best] : 0.0;
    const double res = std::max(lo, hi);
    out.rows.push_back(compare("sensor grid argmin vs sqrt(gamma_a kappa_e / 2)", argmin, grid[best], res / argmin,
                               s.tolerances.floor));
    out.rows.push_back(compare("sensor numerical argmin vs sqrt(gamma_a kappa_e / 2)", argmin, r.g_opt.value(),
                               1e-6, s.tolerances.floor));
    out.rows.push_back(compare("sensor minimum vs lambda_a sqrt(2 gamma_a kappa_e)", r.delta2_opt_stated,
                               r.delta2_opt.value(), 1e-10, s.tolerances.floor));
  }
  return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace

int run(const Scenario& s, const RunOptions& opt, std::ostream& out, std::ostream& err) {
  std::vector<ComparisonRow> summary;
  try {
    s.validate();
    std::filesystem::create_directories(opt.out_dir);
    for (Task t : s.tasks) {
      const TaskOutput r = run_task(t, s, opt.threads);
      const std::string stem = s.name + "_" + to_string(t);
      write_file(opt.out_dir / (stem + ".csv"), to_csv(r.table));
      Json j = metadata(s);
      j["task"] = to_string(t);
      j["columns"] = r.table.columns;
      j["comparisons"] = rows_json(r.rows);
      write_file(opt.out_dir / (stem + ".json"), j.dump(2) + "\n");
      summary.insert(summary.end(), r.rows.begin(), r.rows.end());
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  }
  if (summary.empty()) {
    out << "no comparison rows\n";
    return kPass;
  }
  Table t{{"quantity", "analytic", "numeric", "rel_dev", "tolerance", "pass"}, {}};
  for (const auto& r : summary)
    t.rows.push_back({r.quantity, r.analytic, r.numeric, r.rel_dev, r.tolerance, r.pass ? "true" : "false"});
  try {
    write_file(opt.out_dir / (s.name + "_summary.csv"), to_csv(t));
    write_file(opt.out_dir / (s.name + "_summary.json"), report_json(summary, s));
  } catch (const std::exception& e) {
    err << "output failure: " << e.what() << "\n";
    return kSolverFailure;
  }
  out << format_report(summary);
  return all_pass(summary) ? kPass : kToleranceFailure;
}

int run(const std::filesystem::path& config, bool strict, const RunOptions& opt, std::ostream& out,
        std::ostream& err) {
  Scenario s;
  try {
    std::vector<std::string> ignored;
    s = load_scenario(config, strict, &ignored);
    for (const auto& k : ignored) err << "warning: ignoring unknown key '" << k << "'\n";
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  return run(s, opt, out, err);
}

}  // namespace pdc::cli
