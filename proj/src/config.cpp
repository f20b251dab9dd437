// Copyright 2026 The qtraj Authors
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

#include "qtraj/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qtraj/error.hpp"

namespace qtraj {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

constexpr double kGaussianHalfWidth = 6.0;  // support is t_c +- 6 / omega

std::string child(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }
std::string child(const std::string& ptr, std::size_t i) { return ptr + "/" + std::to_string(i); }

[[noreturn]] void fail(const std::string& ptr, const std::string& what) {
  throw ConfigError(ptr, what);
}

const char* type_name(const json& v) { return v.type_name(); }

void require_object(const json& v, const std::string& ptr) {
  if (!v.is_object()) fail(ptr, std::string("expected an object, got ") + type_name(v));
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& ptr) {
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) fail(child(ptr, item.key()), "unknown field");
  }
}

const json& member(const json& obj, const char* key, const std::string& ptr) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(child(ptr, key), "missing required field");
  return *it;
}

double as_number(const json& v, const std::string& ptr) {
  if (!v.is_number()) fail(ptr, std::string("expected a number, got ") + type_name(v));
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(ptr, "number must be finite");
  return x;
}

std::uint64_t as_uint(const json& v, const std::string& ptr) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                 v.get<std::int64_t>() < 0))
    fail(ptr, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string as_string(const json& v, const std::string& ptr) {
  if (!v.is_string()) fail(ptr, std::string("expected a string, got ") + type_name(v));
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& ptr) {
  if (!v.is_boolean()) fail(ptr, std::string("expected a boolean, got ") + type_name(v));
  return v.get<bool>();
}

// [re, im], or a bare real number.
Complex as_complex(const json& v, const std::string& ptr) {
  if (v.is_number()) return {as_number(v, ptr), 0.0};
  if (!v.is_array() || v.size() != 2) fail(ptr, "expected a complex number [re, im]");
  return {as_number(v[0], child(ptr, 0)), as_number(v[1], child(ptr, 1))};
}

std::vector<Complex> as_complex_vector(const json& v, const std::string& ptr) {
  if (!v.is_array() || v.empty()) fail(ptr, "expected a non-empty array of [re, im] entries");
  std::vector<Complex> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_complex(v[i], child(ptr, i)));
  return out;
}

std::vector<double> as_real_vector(const json& v, const std::string& ptr) {
  if (!v.is_array() || v.empty()) fail(ptr, "expected a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], child(ptr, i)));
  return out;
}

ComplexMatrix as_matrix(const json& v, const std::string& ptr) {
  if (!v.is_array() || v.empty()) fail(ptr, "expected a square matrix (array of rows)");
  ComplexMatrix m;
  for (std::size_t i = 0; i < v.size(); ++i) {
    m.push_back(as_complex_vector(v[i], child(ptr, i)));
    if (m.back().size() != v.size()) fail(child(ptr, i), "matrix must be square");
  }
  return m;
}

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

json complex_vector_json(const std::vector<Complex>& v) {
  json a = json::array();
  for (const auto& z : v) a.push_back(complex_json(z));
  return a;
}

json matrix_json(const ComplexMatrix& m) {
  json a = json::array();
  for (const auto& row : m) a.push_back(complex_vector_json(row));
  return a;
}

Operator to_operator(const ComplexMatrix& m) {
  const long n = static_cast<long>(m.size());
  Operator op(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      op(i, j) = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return op;
}

// ---------------------------------------------------------------------------
// Parsing

FunctionConfig parse_function(const json& v, const std::string& ptr, bool amplitude_allowed) {
  require_object(v, ptr);
  FunctionConfig f;
  f.shape = as_string(member(v, "shape", ptr), child(ptr, "shape"));
  if (f.shape == "gaussian") {
    if (amplitude_allowed)
      check_keys(v, {"shape", "omega", "t_c", "amplitude"}, ptr);
    else
      check_keys(v, {"shape", "omega", "t_c"}, ptr);
    f.omega = as_number(member(v, "omega", ptr), child(ptr, "omega"));
    f.t_c = as_number(member(v, "t_c", ptr), child(ptr, "t_c"));
    if (!(f.omega > 0.0)) fail(child(ptr, "omega"), "omega must be positive");
    if (amplitude_allowed)
      f.amplitude = as_complex(member(v, "amplitude", ptr), child(ptr, "amplitude"));
  } else if (f.shape == "constant") {
    check_keys(v, {"shape", "value", "lo", "hi"}, ptr);
    f.value = as_complex(member(v, "value", ptr), child(ptr, "value"));
    f.lo = as_number(member(v, "lo", ptr), child(ptr, "lo"));
    f.hi = as_number(member(v, "hi", ptr), child(ptr, "hi"));
    if (!(f.hi > f.lo)) fail(child(ptr, "hi"), "window must satisfy lo < hi");
  } else if (f.shape == "table") {
    check_keys(v, {"shape", "times", "values"}, ptr);
    f.times = as_real_vector(member(v, "times", ptr), child(ptr, "times"));
    f.values = as_complex_vector(member(v, "values", ptr), child(ptr, "values"));
    if (f.times.size() != f.values.size() || f.times.size() < 2)
      fail(child(ptr, "values"), "table needs at least two samples and equal-length arrays");
    for (std::size_t i = 1; i < f.times.size(); ++i)
      if (!(f.times[i] > f.times[i - 1]))
        fail(child(child(ptr, "times"), i), "table times must be strictly increasing");
  } else {
    fail(child(ptr, "shape"), "unknown shape '" + f.shape + "' (gaussian, constant, table)");
  }
  return f;
}

SystemConfig parse_system(const json& v, const std::string& ptr) {
  require_object(v, ptr);
  SystemConfig s;
  s.preset = as_string(member(v, "preset", ptr), child(ptr, "preset"));
  if (s.preset == "two_level") {
    check_keys(v, {"preset", "kappa", "H", "initial_state"}, ptr);
    s.dim = 2;
  } else if (s.preset == "cavity") {
    check_keys(v, {"preset", "kappa", "dim", "H", "initial_state"}, ptr);
    s.dim = static_cast<long>(as_uint(member(v, "dim", ptr), child(ptr, "dim")));
    if (s.dim < 2) fail(child(ptr, "dim"), "cavity truncation needs dim >= 2");
  } else if (s.preset == "explicit") {
    check_keys(v, {"preset", "S", "L", "H", "initial_state"}, ptr);
    s.S = as_matrix(member(v, "S", ptr), child(ptr, "S"));
    s.L = as_matrix(member(v, "L", ptr), child(ptr, "L"));
    s.dim = static_cast<long>(s.S->size());
  } else {
    fail(child(ptr, "preset"), "unknown preset '" + s.preset + "' (two_level, cavity, explicit)");
  }
  if (v.contains("kappa")) {
    s.kappa = as_number(v["kappa"], child(ptr, "kappa"));
    if (!(s.kappa >= 0.0)) fail(child(ptr, "kappa"), "kappa must be non-negative");
  }
  if (v.contains("H")) s.H = as_matrix(v["H"], child(ptr, "H"));
  if (s.preset == "explicit" && !s.H) fail(child(ptr, "H"), "missing required field");

  if (v.contains("initial_state")) {
    const json& is = v["initial_state"];
    const std::string ip = child(ptr, "initial_state");
    if (is.is_array()) {
      s.initial_state = "explicit";
      s.initial_ket = as_complex_vector(is, ip);
    } else {
      s.initial_state = as_string(is, ip);
      if (s.initial_state == "explicit") fail(ip, "give the explicit ket as an array");
    }
  }
  return s;
}

FieldConfig parse_field(const json& v, const std::string& ptr) {
  require_object(v, ptr);
  FieldConfig f;
  f.type = as_string(member(v, "type", ptr), child(ptr, "type"));
  if (f.type == "vacuum") {
    check_keys(v, {"type", "drive"}, ptr);
    if (v.contains("drive")) f.drive = parse_function(v["drive"], child(ptr, "drive"), true);
  } else if (f.type == "photon") {
    check_keys(v, {"type", "wavepacket", "gamma"}, ptr);
    f.wavepacket = parse_function(member(v, "wavepacket", ptr), child(ptr, "wavepacket"), false);
    if (v.contains("gamma")) {
      f.gamma = as_matrix(v["gamma"], child(ptr, "gamma"));
    } else {
      f.gamma = ComplexMatrix{{0.0, 0.0}, {0.0, 1.0}};
    }
  } else if (f.type == "coherent") {
    check_keys(v, {"type", "amplitudes", "gamma", "coefficients"}, ptr);
    const json& a = member(v, "amplitudes", ptr);
    const std::string ap = child(ptr, "amplitudes");
    if (!a.is_array() || a.empty()) fail(ap, "expected a non-empty array of amplitude functions");
    for (std::size_t i = 0; i < a.size(); ++i)
      f.amplitudes.push_back(parse_function(a[i], child(ap, i), true));
    if (v.contains("gamma") && v.contains("coefficients"))
      fail(child(ptr, "coefficients"), "give either gamma or coefficients, not both");
    if (v.contains("gamma")) f.gamma = as_matrix(v["gamma"], child(ptr, "gamma"));
    if (v.contains("coefficients"))
      f.coefficients = as_complex_vector(v["coefficients"], child(ptr, "coefficients"));
    if (!f.gamma && !f.coefficients) {
      if (f.amplitudes.size() != 1) fail(child(ptr, "gamma"), "missing required field");
      f.gamma = ComplexMatrix{{Complex(1.0, 0.0)}};
    }
  } else {
    fail(child(ptr, "type"), "unknown field type '" + f.type + "' (vacuum, photon, coherent)");
  }
  return f;
}

ExperimentConfig parse_document(const json& doc) {
  const std::string root;
  require_object(doc, root);
  check_keys(doc,
             {"system", "field", "measurement", "grid", "seed", "trajectories", "parallelism",
              "observables", "output", "oracle"},
             root);
  ExperimentConfig c;
  c.system = parse_system(member(doc, "system", root), "/system");
  c.field = parse_field(member(doc, "field", root), "/field");

  if (doc.contains("measurement")) {
    const json& m = doc["measurement"];
    require_object(m, "/measurement");
    check_keys(m, {"kind", "intensity_floor"}, "/measurement");
    if (m.contains("kind")) c.measurement.kind = as_string(m["kind"], "/measurement/kind");
    if (c.measurement.kind != "homodyne" && c.measurement.kind != "counting")
      fail("/measurement/kind", "expected 'homodyne' or 'counting'");
    if (m.contains("intensity_floor"))
      c.measurement.intensity_floor =
          as_number(m["intensity_floor"], "/measurement/intensity_floor");
    if (!(c.measurement.intensity_floor > 0.0))
      fail("/measurement/intensity_floor", "must be positive");
  }

  {
    const json& g = member(doc, "grid", root);
    require_object(g, "/grid");
    check_keys(g, {"t0", "t1", "dt", "record_stride"}, "/grid");
    if (g.contains("t0")) c.grid.t0 = as_number(g["t0"], "/grid/t0");
    c.grid.t1 = as_number(member(g, "t1", "/grid"), "/grid/t1");
    c.grid.dt = as_number(member(g, "dt", "/grid"), "/grid/dt");
    if (g.contains("record_stride"))
      c.grid.record_stride = as_uint(g["record_stride"], "/grid/record_stride");
    if (!(c.grid.dt > 0.0)) fail("/grid/dt", "dt must be positive");
    if (!(c.grid.t1 > c.grid.t0)) fail("/grid/t1", "t1 must exceed t0");
    if (c.grid.record_stride < 1) fail("/grid/record_stride", "must be at least 1");
    const double steps = (c.grid.t1 - c.grid.t0) / c.grid.dt;
    if (steps < 0.5) fail("/grid/dt", "dt is longer than the horizon");
    if (steps > 1e9) fail("/grid/dt", "more than 1e9 steps");
  }

  if (doc.contains("seed")) c.seed = as_uint(doc["seed"], "/seed");
  if (doc.contains("trajectories")) {
    c.trajectories = as_uint(doc["trajectories"], "/trajectories");
    if (c.trajectories < 1) fail("/trajectories", "need at least one trajectory");
  }
  if (doc.contains("parallelism")) {
    const auto p = as_uint(doc["parallelism"], "/parallelism");
    if (p < 1 || p > 1024) fail("/parallelism", "must be between 1 and 1024");
    c.parallelism = static_cast<unsigned>(p);
  }

  if (doc.contains("observables")) {
    const json& o = doc["observables"];
    if (!o.is_array()) fail("/observables", "expected an array");
    for (std::size_t i = 0; i < o.size(); ++i) {
      const std::string op = child("/observables", i);
      ObservableConfig oc;
      if (o[i].is_string()) {
        oc.name = o[i].get<std::string>();
      } else {
        require_object(o[i], op);
        check_keys(o[i], {"name", "matrix"}, op);
        oc.name = as_string(member(o[i], "name", op), child(op, "name"));
        oc.matrix = as_matrix(member(o[i], "matrix", op), child(op, "matrix"));
      }
      c.observables.push_back(std::move(oc));
    }
  } else if (c.system.preset == "two_level") {
    c.observables.push_back({"P_e", std::nullopt});
  } else if (c.system.preset == "cavity") {
    c.observables.push_back({"n", std::nullopt});
  }

  if (doc.contains("output")) {
    const json& o = doc["output"];
    require_object(o, "/output");
    check_keys(o, {"dir", "trajectory_files"}, "/output");
    if (o.contains("dir")) c.output.dir = as_string(o["dir"], "/output/dir");
    if (o.contains("trajectory_files"))
      c.output.trajectory_files = as_bool(o["trajectory_files"], "/output/trajectory_files");
    if (c.output.dir.empty()) fail("/output/dir", "must not be empty");
  }

  if (doc.contains("oracle")) {
    const json& o = doc["oracle"];
    require_object(o, "/oracle");
    check_keys(o, {"tolerance", "w_threshold"}, "/oracle");
    if (o.contains("tolerance"))
      c.oracle.tolerance = as_number(o["tolerance"], "/oracle/tolerance");
    if (o.contains("w_threshold"))
      c.oracle.w_threshold = as_number(o["w_threshold"], "/oracle/w_threshold");
    if (!(c.oracle.tolerance > 0.0)) fail("/oracle/tolerance", "must be positive");
    if (!(c.oracle.w_threshold > 0.0)) fail("/oracle/w_threshold", "must be positive");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Serialization

ojson function_json(const FunctionConfig& f, bool amplitude_allowed) {
  ojson o;
  o["shape"] = f.shape;
  if (f.shape == "gaussian") {
    o["omega"] = f.omega;
    o["t_c"] = f.t_c;
    if (amplitude_allowed) o["amplitude"] = complex_json(f.amplitude);
  } else if (f.shape == "constant") {
    o["value"] = complex_json(f.value);
    o["lo"] = f.lo;
    o["hi"] = f.hi;
  } else {
    o["times"] = f.times;
    o["values"] = complex_vector_json(f.values);
  }
  return o;
}

// ---------------------------------------------------------------------------
// Building

// Rethrows library invariant failures as config errors at `ptr`.
template <class F>
auto at_pointer(const std::string& ptr, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(ptr, e.what());
  }
}

std::pair<ComplexFn, Support> build_function(const FunctionConfig& f, std::vector<double>& bp) {
  if (f.shape == "gaussian") {
    const double half = kGaussianHalfWidth / f.omega;
    bp.push_back(f.t_c);
    return {gaussian_amplitude(f.amplitude, f.omega, f.t_c), {f.t_c - half, f.t_c + half}};
  }
  if (f.shape == "constant") {
    bp.push_back(f.lo);
    bp.push_back(f.hi);
    return {constant_amplitude(f.value, f.lo, f.hi), {f.lo, f.hi}};
  }
  bp.insert(bp.end(), f.times.begin(), f.times.end());
  return {table_function(f.times, f.values), {f.times.front(), f.times.back()}};
}

Wavepacket build_wavepacket(const FunctionConfig& f) {
  if (f.shape == "gaussian") return gaussian_wavepacket(f.omega, f.t_c);
  if (f.shape == "constant") return constant_wavepacket(f.value, f.lo, f.hi);
  return table_wavepacket(f.times, f.values);
}

void warn_support(const Support& s, const GridConfig& g, const std::string& what,
                  std::vector<std::string>& warnings) {
  std::ostringstream os;
  if (s.lo < g.t0 - 1e-12) {
    os << what << " support starts at t = " << s.lo << ", before t0 = " << g.t0
       << "; the part before t0 is not seen by the simulation";
    warnings.push_back(os.str());
    os.str("");
  }
  if (s.hi > g.t1 + 1e-12) {
    os << what << " support ends at t = " << s.hi << ", after t1 = " << g.t1;
    warnings.push_back(os.str());
  }
}

Ket build_initial_state(const SystemConfig& s) {
  const std::string ptr = "/system/initial_state";
  const long dim = s.dim;
  auto basis = [&](long n) {
    if (n < 0 || n >= dim) fail(ptr, "basis index " + std::to_string(n) + " outside dimension");
    Ket k = Ket::Zero(dim);
    k(n) = 1.0;
    return k;
  };
  if (s.initial_state == "ground") return basis(0);
  if (s.initial_state == "excited") return basis(1);
  if (s.initial_state.rfind("fock:", 0) == 0) {
    const std::string num = s.initial_state.substr(5);
    if (num.empty() || num.find_first_not_of("0123456789") != std::string::npos)
      fail(ptr, "expected fock:<n>");
    return basis(std::stol(num));
  }
  if (s.initial_state == "explicit") {
    if (static_cast<long>(s.initial_ket.size()) != dim)
      fail(ptr, "ket has " + std::to_string(s.initial_ket.size()) + " entries, system dimension " +
                    std::to_string(dim));
    Ket k(dim);
    for (long i = 0; i < dim; ++i) k(i) = s.initial_ket[static_cast<std::size_t>(i)];
    if (std::abs(k.norm() - 1.0) > 1e-9) fail(ptr, "ket must be normalized");
    return k;
  }
  fail(ptr, "unknown initial state '" + s.initial_state + "'");
}

SlhTriple build_system(const SystemConfig& s) {
  const long d = s.dim;
  Operator S, L, H = Operator::Zero(d, d);
  if (s.preset == "two_level") {
    const auto tl = preset_two_level();
    S = tl.identity;
    L = std::sqrt(s.kappa) * tl.sigma_minus;
  } else if (s.preset == "cavity") {
    const auto cav = preset_cavity(static_cast<int>(d));
    S = cav.identity;
    L = std::sqrt(s.kappa) * cav.annihilation;
  } else {
    S = to_operator(*s.S);
    L = to_operator(*s.L);
    if (L.rows() != d) fail("/system/L", "L must have the dimension of S");
    if (!is_unitary(S)) fail("/system/S", "S must be unitary");
  }
  if (s.H) {
    H = to_operator(*s.H);
    if (H.rows() != d) fail("/system/H", "H must have the system dimension");
    if (!is_hermitian(H)) fail("/system/H", "H must be Hermitian");
  }
  return at_pointer("/system", [&] { return SlhTriple::make(S, L, H); });
}

Operator preset_observable(const std::string& name, const SystemConfig& s, const std::string& ptr) {
  const long d = s.dim;
  if (name == "n" && s.preset == "cavity") return preset_cavity(static_cast<int>(d)).number;
  if (d == 2 && s.preset != "cavity") {
    const auto tl = preset_two_level();
    if (name == "P_e") return tl.excited;
    if (name == "P_g") return tl.ground;
    if (name == "sigma_x") return tl.sigma_plus + tl.sigma_minus;
    if (name == "sigma_y") return kI * (tl.sigma_minus - tl.sigma_plus);
    if (name == "sigma_z") return tl.excited - tl.ground;
  }
  fail(ptr, "unknown observable '" + name + "' for this system");
}

bool csv_safe(const std::string& name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
  });
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentConfig parse_config(std::string_view text, std::vector<std::string>* warnings) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("JSON syntax error: ") + e.what());
  }
  ExperimentConfig c = parse_document(doc);
  Experiment e = build_experiment(c);
  if (warnings) warnings->insert(warnings->end(), e.warnings.begin(), e.warnings.end());
  return c;
}

ExperimentConfig load_config(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), warnings);
}

std::string serialize_config(const ExperimentConfig& c) {
  ojson doc;
  ojson sys;
  sys["preset"] = c.system.preset;
  if (c.system.preset == "cavity") sys["dim"] = c.system.dim;
  if (c.system.preset != "explicit") sys["kappa"] = c.system.kappa;
  if (c.system.S) sys["S"] = matrix_json(*c.system.S);
  if (c.system.L) sys["L"] = matrix_json(*c.system.L);
  if (c.system.H) sys["H"] = matrix_json(*c.system.H);
  if (c.system.initial_state == "explicit")
    sys["initial_state"] = complex_vector_json(c.system.initial_ket);
  else
    sys["initial_state"] = c.system.initial_state;
  doc["system"] = sys;

  ojson field;
  field["type"] = c.field.type;
  if (c.field.type == "vacuum" && c.field.drive)
    field["drive"] = function_json(*c.field.drive, true);
  if (c.field.type == "photon") field["wavepacket"] = function_json(c.field.wavepacket, false);
  if (c.field.type == "coherent") {
    ojson a = ojson::array();
    for (const auto& f : c.field.amplitudes) a.push_back(function_json(f, true));
    field["amplitudes"] = a;
  }
  if (c.field.gamma) field["gamma"] = matrix_json(*c.field.gamma);
  if (c.field.coefficients) field["coefficients"] = complex_vector_json(*c.field.coefficients);
  doc["field"] = field;

  doc["measurement"] = {{"kind", c.measurement.kind},
                        {"intensity_floor", c.measurement.intensity_floor}};
  doc["grid"] = {{"t0", c.grid.t0},
                 {"t1", c.grid.t1},
                 {"dt", c.grid.dt},
                 {"record_stride", c.grid.record_stride}};
  doc["seed"] = c.seed;
  doc["trajectories"] = c.trajectories;
  doc["parallelism"] = c.parallelism;
  ojson obs = ojson::array();
  for (const auto& o : c.observables) {
    if (o.matrix)
      obs.push_back({{"name", o.name}, {"matrix", matrix_json(*o.matrix)}});
    else
      obs.push_back(o.name);
  }
  doc["observables"] = obs;
  doc["output"] = {{"dir", c.output.dir}, {"trajectory_files", c.output.trajectory_files}};
  doc["oracle"] = {{"tolerance", c.oracle.tolerance}, {"w_threshold", c.oracle.w_threshold}};
  return doc.dump(2) + "\n";
}

FilterModelSpec Experiment::filter_spec() const {
  FilterModelSpec s;
  s.system = system;
  s.timed_system = timed_system;
  s.field = field;
  s.eta = eta;
  s.measurement = measurement;
  s.observables = observables;
  return s;
}

Experiment build_experiment(const ExperimentConfig& c) {
  Experiment e;
  e.system = build_system(c.system);
  e.eta = build_initial_state(c.system);
  e.grid = TimeGrid{c.grid.t0, c.grid.t1, c.grid.dt};
  at_pointer("/grid", [&] { e.grid.validate(); });
  {
    const double ratio = (c.grid.t1 - c.grid.t0) / c.grid.dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-6 * std::max(1.0, ratio)) {
      std::ostringstream os;
      os << "(t1 - t0) / dt = " << ratio << " is not an integer; the grid ends at t = "
         << e.grid.time(e.grid.steps());
      e.warnings.push_back(os.str());
    }
  }

  const long d = e.system.dim();
  if (c.field.type == "vacuum") {
    e.field = VacuumField{};
    if (c.field.drive) {
      std::vector<double> bp;
      auto [alpha, support] = build_function(*c.field.drive, bp);
      TimedSlhTriple drive;
      drive.S = Operator::Identity(d, d);
      drive.dim = d;
      drive.L = [alpha = alpha, d](double t) -> Operator {
        return alpha(t) * Operator::Identity(d, d);
      };
      drive.H = [d](double) -> Operator { return Operator::Zero(d, d); };
      e.timed_system = at_pointer("/field/drive", [&] { return series_product(e.system, drive); });
    }
  } else if (c.field.type == "photon") {
    Wavepacket xi =
        at_pointer("/field/wavepacket", [&] { return build_wavepacket(c.field.wavepacket); });
    warn_support(xi.support(), c.grid, "wavepacket", e.warnings);
    WeightMatrix gamma{to_operator(*c.field.gamma)};
    e.field = at_pointer("/field/gamma",
                         [&] { return make_photon_combination(std::move(gamma), std::move(xi)); });
  } else {
    std::vector<ComplexFn> fns;
    std::vector<double> bp;
    Support support{std::numeric_limits<double>::infinity(),
                    -std::numeric_limits<double>::infinity()};
    for (const auto& f : c.field.amplitudes) {
      auto [fn, s] = build_function(f, bp);
      fns.push_back(std::move(fn));
      support.lo = std::min(support.lo, s.lo);
      support.hi = std::max(support.hi, s.hi);
    }
    warn_support(support, c.grid, "amplitude", e.warnings);
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    std::erase_if(bp, [&](double t) { return t <= support.lo || t >= support.hi; });
    CoherentAmplitudes amps(std::move(fns), support, std::move(bp));
    at_pointer("/field/amplitudes", [&] { amps.validate_distinct(); });
    const Eigen::MatrixXcd gram =
        at_pointer("/field/amplitudes", [&] { return gram_matrix(amps); });
    WeightMatrix gamma;
    if (c.field.coefficients) {
      if (c.field.coefficients->size() != amps.size())
        fail("/field/coefficients", "need one coefficient per amplitude");
      gamma = at_pointer("/field/coefficients", [&] {
        return normalized_coherent_superposition(*c.field.coefficients, gram);
      });
    } else {
      if (c.field.gamma->size() != amps.size())
        fail("/field/gamma", "gamma must be n x n for n amplitudes");
      gamma = WeightMatrix{to_operator(*c.field.gamma)};
    }
    at_pointer("/field/gamma", [&] { gamma.validate_coherent(gram); });
    e.field = CoherentCombination{std::move(gamma), std::move(amps), gram};
  }

  e.measurement.kind =
      c.measurement.kind == "counting" ? MeasurementKind::counting : MeasurementKind::homodyne;
  e.measurement.intensity_floor = c.measurement.intensity_floor;

  std::set<std::string> seen;
  for (std::size_t i = 0; i < c.observables.size(); ++i) {
    const auto& o = c.observables[i];
    const std::string ptr = child("/observables", i);
    if (!csv_safe(o.name)) fail(ptr, "observable names may use letters, digits, '_', '-', '.'");
    if (o.name == "t" || o.name == "dY" || o.name == "innovation" || o.name == "Y" || o.name == "W")
      fail(ptr, "observable name '" + o.name + "' is reserved");
    if (!seen.insert(o.name).second) fail(ptr, "duplicate observable '" + o.name + "'");
    Operator op;
    if (o.matrix) {
      op = to_operator(*o.matrix);
      if (op.rows() != d) fail(child(ptr, "matrix"), "matrix must have the system dimension");
      if (!is_hermitian(op)) fail(child(ptr, "matrix"), "observable must be Hermitian");
    } else {
      op = preset_observable(o.name, c.system, ptr);
    }
    e.observables.push_back({o.name, op});
  }
  return e;
}

}  // namespace qtraj
