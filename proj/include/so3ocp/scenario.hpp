#pragma once

//
// This file is distributed under the Apache License v2.0. See LICENSE for
// details.
//

// Scenario configuration, the built-in maneuvers, JSON load/save and the
// CSV/JSON exporters used by the command line driver.

#include "so3ocp/shooting.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace so3ocp {

class UnknownScenario : public Error {
public:
  explicit UnknownScenario(const std::string &name)
      : Error("unknown scenario: " + name), name(name) {}
  std::string name;
};

class ParseError : public Error {
public:
  ParseError(const std::string &where, const std::string &reason)
      : Error("parse error at " + where + ": " + reason), where(where) {}
  std::string where; // "line N" or a field path
};

class ValidationError : public Error {
public:
  ValidationError(const std::string &field, const std::string &reason)
      : Error("invalid " + field + ": " + reason), field(field), reason(reason) {}
  std::string field;
  std::string reason;
};

class IoError : public Error {
public:
  using Error::Error;
};

struct ScenarioConfig {
  std::string name;
  PotentialModel model = PendulumModel{};
  InputMatrix input_matrix = InputMatrix::Identity(3, 3);
  BoundaryConditions boundary;
  ShootingConfig shooting;
};

inline bool operator==(const ShootingConfig &a, const ShootingConfig &b) {
  return a.h == b.h && a.N == b.N && a.eps_stop == b.eps_stop &&
         a.alpha == b.alpha && a.c_min == b.c_min &&
         a.max_outer == b.max_outer && a.max_backtrack == b.max_backtrack &&
         a.lam0_init == b.lam0_init && a.lam0_scale == b.lam0_scale &&
         a.lam0_explicit == b.lam0_explicit && a.seed == b.seed &&
         a.max_direct_condition == b.max_direct_condition &&
         a.pinv_rcond == b.pinv_rcond &&
         a.integrator.newton_tol_rel == b.integrator.newton_tol_rel &&
         a.integrator.newton_tol_abs == b.integrator.newton_tol_abs &&
         a.integrator.newton_max_iter == b.integrator.newton_max_iter &&
         a.integrator.fd_jacobian == b.integrator.fd_jacobian;
}

inline bool operator==(const ScenarioConfig &a, const ScenarioConfig &b) {
  return a.name == b.name && a.model == b.model &&
         a.input_matrix.cols() == b.input_matrix.cols() &&
         a.input_matrix == b.input_matrix && a.boundary == b.boundary &&
         a.shooting == b.shooting;
}

// ---------------------------------------------------------------------------
// Built-in maneuvers

inline const std::vector<std::string> &builtin_scenario_names() {
  static const std::vector<std::string> names{"pend-i", "pend-ii", "sc-iii",
                                              "sc-iv"};
  return names;
}

inline ScenarioConfig builtin_scenario(const std::string &name) {
  ScenarioConfig cfg;
  cfg.name = name;
  if (name == "pend-i" || name == "pend-ii") {
    PendulumModel p;
    p.gravity = 1.0;
    cfg.model = p;
    cfg.input_matrix = InputMatrix::Zero(3, 2);
    cfg.input_matrix(0, 0) = 1.0;
    cfg.input_matrix(1, 1) = 1.0;
    cfg.shooting.h = 1e-3;
    cfg.shooting.N = 1000;
    cfg.boundary.R0 = Mat3::Identity();
    if (name == "pend-i") {
      cfg.boundary.RNd << 0, 1, 0, 1, 0, 0, 0, 0, -1;
    } else {
      cfg.boundary.RNd = Vec3(-1, -1, 1).asDiagonal();
      // Started away from rest: near it the yaw flip has no first-order
      // authority.
      cfg.shooting.lam0_scale = 3.0;
      cfg.shooting.seed = 4;
    }
    return cfg;
  }
  if (name == "sc-iii" || name == "sc-iv") {
    SpacecraftModel s;
    cfg.model = s;
    cfg.input_matrix = InputMatrix::Identity(3, 3);
    cfg.shooting.h = 1e-3;
    cfg.shooting.N = 1571;
    if (name == "sc-iii") {
      cfg.boundary.R0 = Mat3::Identity();
      cfg.boundary.RNd = Vec3(1, -1, -1).asDiagonal();
    } else {
      cfg.boundary.R0 = Vec3(1, -1, -1).asDiagonal();
      cfg.boundary.RNd << -1, 0, 0, 0, 0, -1, 0, -1, 0;
    }
    const Mat3 &j = s.inertia.J();
    cfg.boundary.Pi0 = s.omega0 * j * cfg.boundary.R0.transpose() * Vec3::UnitY();
    cfg.boundary.PiNd = s.omega0 * j * cfg.boundary.RNd.transpose() * Vec3::UnitY();
    return cfg;
  }
  throw UnknownScenario(name);
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

using nlohmann::json;

inline json to_json_mat3(const Mat3 &m) {
  json a = json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a.push_back(m(i, j));
  return a;
}

template <int N> json to_json_vec(const Eigen::Matrix<double, N, 1> &v) {
  json a = json::array();
  for (int i = 0; i < N; ++i) a.push_back(v(i));
  return a;
}

inline const json &field(const json &j, const std::string &key,
                         const std::string &path) {
  if (!j.is_object()) throw ParseError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end())
    throw ParseError(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

inline double number(const json &j, const std::string &path) {
  if (!j.is_number()) throw ParseError(path, "expected a number");
  return j.get<double>();
}

inline std::vector<double> numbers(const json &j, std::size_t n,
                                   const std::string &path) {
  if (!j.is_array() || j.size() != n)
    throw ParseError(path, "expected " + std::to_string(n) + " numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline Vec3 vec3(const json &j, const std::string &path) {
  const auto v = numbers(j, 3, path);
  return {v[0], v[1], v[2]};
}

inline Mat3 mat3(const json &j, const std::string &path) {
  const auto v = numbers(j, 9, path);
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) m(i, k) = v[3 * i + k];
  return m;
}

template <class T>
T optional_number(const json &j, const std::string &key, T fallback,
                  const std::string &path) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  return static_cast<T>(number(*it, path + "." + key));
}

inline Mat3 checked_rotation(const Mat3 &m, const std::string &field) {
  if (!m.allFinite()) throw ValidationError(field, "non-finite entries");
  if (orthonormality_defect(m) > 1e-9)
    throw ValidationError(field, "not orthonormal");
  if (m.determinant() < 0.0) throw ValidationError(field, "improper rotation");
  // Exact rotations are kept bit for bit.
  if (orthonormality_defect(m) <= 1e-15 && determinant_defect(m) <= 1e-15)
    return m;
  const Mat3 r = project_to_rotation(m);
  if (orthonormality_defect(r) > 1e-14 || determinant_defect(r) > 1e-14)
    throw ValidationError(field, "re-orthonormalization failed");
  return r;
}

inline PotentialModel parse_model(const json &j) {
  const json &type = field(j, "type", "model");
  if (!type.is_string()) throw ParseError("model.type", "expected a string");
  const std::string t = type.get<std::string>();
  try {
    if (t == "pendulum") {
      PendulumModel p;
      p.mass = number(field(j, "mass", "model"), "model.mass");
      p.gravity = number(field(j, "gravity", "model"), "model.gravity");
      p.rho = vec3(field(j, "rho", "model"), "model.rho");
      p.inertia = InertiaPair(mat3(field(j, "inertia", "model"), "model.inertia"));
      if (!(p.mass > 0.0)) throw ValidationError("model.mass", "must be positive");
      if (!(p.gravity > 0.0))
        throw ValidationError("model.gravity", "must be positive");
      return p;
    }
    if (t == "spacecraft") {
      SpacecraftModel s;
      s.omega0 = number(field(j, "omega0", "model"), "model.omega0");
      s.inertia = InertiaPair(mat3(field(j, "inertia", "model"), "model.inertia"));
      if (!(s.omega0 > 0.0))
        throw ValidationError("model.omega0", "must be positive");
      return s;
    }
    if (t == "free_body") {
      FreeBodyModel f;
      f.inertia = InertiaPair(mat3(field(j, "inertia", "model"), "model.inertia"));
      return f;
    }
  } catch (const NotSymmetric &) {
    throw ValidationError("model.inertia", "not symmetric");
  } catch (const NotPositiveDefinite &) {
    throw ValidationError("model.inertia", "not positive definite");
  }
  throw ValidationError("model.type", "unknown model '" + t + "'");
}

inline json model_to_json(const PotentialModel &m) {
  return std::visit(
      [](const auto &x) -> json {
        using T = std::decay_t<decltype(x)>;
        json j;
        if constexpr (std::is_same_v<T, PendulumModel>) {
          j["type"] = "pendulum";
          j["mass"] = x.mass;
          j["gravity"] = x.gravity;
          j["rho"] = to_json_vec<3>(x.rho);
        } else if constexpr (std::is_same_v<T, SpacecraftModel>) {
          j["type"] = "spacecraft";
          j["omega0"] = x.omega0;
        } else {
          j["type"] = "free_body";
        }
        j["inertia"] = to_json_mat3(x.inertia.J());
        return j;
      },
      m.variant());
}

inline const char *lam0_policy_name(Lam0Policy p) {
  switch (p) {
  case Lam0Policy::Zero: return "zero";
  case Lam0Policy::Explicit: return "explicit";
  case Lam0Policy::RandomUniform: break;
  }
  return "random";
}

inline ShootingConfig parse_shooting(const json &j) {
  ShootingConfig c;
  const std::string p = "shooting";
  if (!j.is_object()) throw ParseError(p, "expected an object");
  c.h = number(field(j, "h", p), "shooting.h");
  const double n = number(field(j, "N", p), "shooting.N");
  if (!(n >= 1.0) || n != std::floor(n))
    throw ValidationError("shooting.N", "must be a positive integer");
  c.N = static_cast<std::size_t>(n);
  if (auto it = j.find("eps_stop"); it != j.end() && !it->is_null())
    c.eps_stop = number(*it, "shooting.eps_stop");
  c.alpha = optional_number(j, "alpha", c.alpha, p);
  c.c_min = optional_number(j, "c_min", c.c_min, p);
  c.max_outer = optional_number(j, "max_outer", c.max_outer, p);
  c.max_backtrack = optional_number(j, "max_backtrack", c.max_backtrack, p);
  c.lam0_scale = optional_number(j, "lam0_scale", c.lam0_scale, p);
  c.seed = optional_number<std::uint64_t>(j, "seed", c.seed, p);
  c.max_direct_condition =
      optional_number(j, "max_direct_condition", c.max_direct_condition, p);
  c.pinv_rcond = optional_number(j, "pinv_rcond", c.pinv_rcond, p);
  if (auto it = j.find("lam0_init"); it != j.end()) {
    if (!it->is_string()) throw ParseError("shooting.lam0_init", "expected a string");
    const std::string s = it->get<std::string>();
    if (s == "random") c.lam0_init = Lam0Policy::RandomUniform;
    else if (s == "zero") c.lam0_init = Lam0Policy::Zero;
    else if (s == "explicit") c.lam0_init = Lam0Policy::Explicit;
    else throw ValidationError("shooting.lam0_init", "unknown policy '" + s + "'");
  }
  if (auto it = j.find("lam0"); it != j.end()) {
    const auto v = numbers(*it, 6, "shooting.lam0");
    for (int i = 0; i < 6; ++i) c.lam0_explicit(i) = v[i];
  }
  if (auto it = j.find("integrator"); it != j.end()) {
    const std::string q = "shooting.integrator";
    c.integrator.newton_tol_rel =
        optional_number(*it, "newton_tol_rel", c.integrator.newton_tol_rel, q);
    c.integrator.newton_tol_abs =
        optional_number(*it, "newton_tol_abs", c.integrator.newton_tol_abs, q);
    c.integrator.newton_max_iter =
        optional_number(*it, "newton_max_iter", c.integrator.newton_max_iter, q);
    if (auto f = it->find("fd_jacobian"); f != it->end()) {
      if (!f->is_boolean()) throw ParseError(q + ".fd_jacobian", "expected a boolean");
      c.integrator.fd_jacobian = f->get<bool>();
    }
  }
  if (!(c.h > 0.0)) throw ValidationError("shooting.h", "must be positive");
  if (!(c.alpha > 0.0 && c.alpha < 0.5))
    throw ValidationError("shooting.alpha", "must lie in (0, 1/2)");
  if (c.eps_stop && !(*c.eps_stop > 0.0))
    throw ValidationError("shooting.eps_stop", "must be positive");
  if (c.max_outer < 0) throw ValidationError("shooting.max_outer", "negative");
  return c;
}

inline json shooting_to_json(const ShootingConfig &c) {
  json j;
  j["h"] = c.h;
  j["N"] = c.N;
  j["eps_stop"] = c.eps_stop ? json(*c.eps_stop) : json(nullptr);
  j["alpha"] = c.alpha;
  j["c_min"] = c.c_min;
  j["max_outer"] = c.max_outer;
  j["max_backtrack"] = c.max_backtrack;
  j["lam0_init"] = lam0_policy_name(c.lam0_init);
  j["lam0_scale"] = c.lam0_scale;
  j["lam0"] = to_json_vec<6>(c.lam0_explicit);
  j["seed"] = c.seed;
  j["max_direct_condition"] = c.max_direct_condition;
  j["pinv_rcond"] = c.pinv_rcond;
  j["integrator"] = {{"newton_tol_rel", c.integrator.newton_tol_rel},
                     {"newton_tol_abs", c.integrator.newton_tol_abs},
                     {"newton_max_iter", c.integrator.newton_max_iter},
                     {"fd_jacobian", c.integrator.fd_jacobian}};
  return j;
}

inline std::size_t line_of(const std::string &text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + byte, '\n'));
}

} // namespace detail

inline nlohmann::json scenario_to_json(const ScenarioConfig &c) {
  using detail::json;
  json j;
  j["name"] = c.name;
  j["model"] = detail::model_to_json(c.model);
  json b = json::array();
  for (Eigen::Index i = 0; i < c.input_matrix.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < c.input_matrix.cols(); ++k)
      row.push_back(c.input_matrix(i, k));
    b.push_back(row);
  }
  j["input_matrix"] = b;
  j["boundary"] = {{"R0", detail::to_json_mat3(c.boundary.R0)},
                   {"Pi0", detail::to_json_vec<3>(c.boundary.Pi0)},
                   {"RNd", detail::to_json_mat3(c.boundary.RNd)},
                   {"PiNd", detail::to_json_vec<3>(c.boundary.PiNd)}};
  j["shooting"] = detail::shooting_to_json(c.shooting);
  return j;
}

inline ScenarioConfig scenario_from_json(const nlohmann::json &j) {
  using namespace detail;
  ScenarioConfig c;
  if (!j.is_object()) throw ParseError("<root>", "expected an object");
  if (auto it = j.find("name"); it != j.end()) {
    if (!it->is_string()) throw ParseError("name", "expected a string");
    c.name = it->get<std::string>();
  }
  c.model = parse_model(field(j, "model", ""));

  const json &b = field(j, "input_matrix", "");
  if (!b.is_array() || b.size() != 3)
    throw ParseError("input_matrix", "expected 3 rows");
  if (!b[0].is_array() || b[0].empty())
    throw ParseError("input_matrix[0]", "expected a non-empty row");
  const std::size_t m = b[0].size();
  c.input_matrix = InputMatrix::Zero(3, static_cast<Eigen::Index>(m));
  for (int i = 0; i < 3; ++i) {
    const auto row = numbers(b[i], m, "input_matrix[" + std::to_string(i) + "]");
    for (std::size_t k = 0; k < m; ++k)
      c.input_matrix(i, static_cast<Eigen::Index>(k)) = row[k];
  }
  if (!c.input_matrix.allFinite())
    throw ValidationError("input_matrix", "non-finite entries");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(c.input_matrix);
  const auto &s = svd.singularValues();
  if (m > 3 || !(s(s.size() - 1) > 1e-12 * std::max(1.0, s(0))))
    throw ValidationError("input_matrix", "rank deficient");

  const json &bc = field(j, "boundary", "");
  c.boundary.R0 = checked_rotation(mat3(field(bc, "R0", "boundary"), "boundary.R0"),
                                   "boundary.R0");
  c.boundary.Pi0 = vec3(field(bc, "Pi0", "boundary"), "boundary.Pi0");
  c.boundary.RNd = checked_rotation(
      mat3(field(bc, "RNd", "boundary"), "boundary.RNd"), "boundary.RNd");
  c.boundary.PiNd = vec3(field(bc, "PiNd", "boundary"), "boundary.PiNd");

  c.shooting = parse_shooting(field(j, "shooting", ""));
  return c;
}

inline ScenarioConfig parse_scenario(const std::string &text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    throw ParseError("line " + std::to_string(detail::line_of(text, e.byte)),
                     e.what());
  }
  return scenario_from_json(j);
}

inline ScenarioConfig load_scenario(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

inline void save_scenario(const ScenarioConfig &c,
                          const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << scenario_to_json(c).dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

/// A built-in name or a path to a JSON file.
inline ScenarioConfig resolve_scenario(const std::string &name_or_path) {
  for (const auto &n : builtin_scenario_names())
    if (n == name_or_path) return builtin_scenario(n);
  if (std::filesystem::exists(name_or_path)) {
    ScenarioConfig c = load_scenario(name_or_path);
    if (c.name.empty())
      c.name = std::filesystem::path(name_or_path).stem().string();
    return c;
  }
  throw UnknownScenario(name_or_path);
}

// ---------------------------------------------------------------------------
// Export

struct RunSummary {
  std::string scenario;
  double J = 0.0;
  double attitude_violation = 0.0;
  double momentum_violation = 0.0;
  int outer_iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
  std::string failure; // empty on success
  std::vector<std::filesystem::path> files;
};

struct RunOptions {
  bool store_transitions = false;
};

namespace detail {

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvFile {
public:
  explicit CsvFile(const std::filesystem::path &p) : path_(p), out_(p) {
    if (!out_) throw IoError("cannot write " + p.string());
  }
  void header(const std::vector<std::string> &cols) {
    for (std::size_t i = 0; i < cols.size(); ++i)
      out_ << (i ? "," : "") << cols[i];
    out_ << '\n';
  }
  CsvFile &operator<<(double x) { return cell(fmt(x)); }
  CsvFile &cell(const std::string &s) {
    out_ << (first_ ? "" : ",") << s;
    first_ = false;
    return *this;
  }
  void end_row() {
    out_ << '\n';
    first_ = true;
  }
  void close() {
    out_.close();
    if (!out_) throw IoError("write failed for " + path_.string());
  }

private:
  std::filesystem::path path_;
  std::ofstream out_;
  bool first_ = true;
};

inline void write_trajectory(const std::filesystem::path &p,
                             const std::vector<BodyState> &states,
                             const PotentialModel &model, double h) {
  CsvFile f(p);
  f.header({"k", "t", "R11", "R12", "R13", "R21", "R22", "R23", "R31", "R32",
            "R33", "Pi1", "Pi2", "Pi3", "Om1", "Om2", "Om3", "energy"});
  for (std::size_t k = 0; k < states.size(); ++k) {
    const BodyState &s = states[k];
    f.cell(std::to_string(k)) << static_cast<double>(k) * h;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) f << s.R(i, j);
    const Vec3 om = angular_velocity(s, model.inertia());
    f << s.Pi(0) << s.Pi(1) << s.Pi(2) << om(0) << om(1) << om(2)
      << total_energy(s, model);
    f.end_row();
  }
  f.close();
}

/// Row k holds u_k and the multiplier lam2_{k-1} that generated it.
inline void write_controls(const std::filesystem::path &p,
                           const ControlSchedule &u,
                           const std::vector<Vec3> &lam2, Eigen::Index m,
                           double h) {
  CsvFile f(p);
  std::vector<std::string> cols{"k", "t"};
  for (Eigen::Index i = 1; i <= m; ++i) cols.push_back("u" + std::to_string(i));
  for (int i = 1; i <= 3; ++i) cols.push_back("lam2_" + std::to_string(i));
  f.header(cols);
  for (std::size_t k = 1; k <= u.size(); ++k) {
    f.cell(std::to_string(k)) << static_cast<double>(k) * h;
    for (Eigen::Index i = 0; i < m; ++i) f << u[k - 1](i);
    const Vec3 l = k - 1 < lam2.size() ? lam2[k - 1] : Vec3::Zero();
    f << l(0) << l(1) << l(2);
    f.end_row();
  }
  f.close();
}

inline void write_convergence(const std::filesystem::path &p,
                              const std::vector<ConvergenceRecord> &records) {
  CsvFile f(p);
  f.header({"outer_i", "inner_trial", "c", "error", "J"});
  for (const auto &r : records) {
    f.cell(std::to_string(r.outer)).cell(std::to_string(r.inner_trial))
        << r.c << r.error << r.J;
    f.end_row();
  }
  f.close();
}

inline void write_transitions(const std::filesystem::path &p,
                              const TransitionAccumulator &acc) {
  CsvFile f(p);
  std::vector<std::string> cols{"k"};
  for (int i = 1; i <= 12; ++i)
    for (int j = 1; j <= 12; ++j)
      cols.push_back("T" + std::to_string(i) + "_" + std::to_string(j));
  f.header(cols);
  for (std::size_t k = 0; k < acc.transitions.size(); ++k) {
    f.cell(std::to_string(k));
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j) f << acc.transitions[k](i, j);
    f.end_row();
  }
  f.close();
}

inline void write_summary(const std::filesystem::path &p, const RunSummary &s) {
  nlohmann::ordered_json j;
  j["scenario"] = s.scenario;
  j["J"] = s.J;
  j["attitude_violation"] = s.attitude_violation;
  j["momentum_violation"] = s.momentum_violation;
  j["outer_iterations"] = s.outer_iterations;
  j["converged"] = s.converged;
  j["seed"] = s.seed;
  j["wall_time_s"] = s.wall_time_s;
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + p.string());
}

inline void prepare_dir(const std::filesystem::path &dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create output directory " + dir.string());
}

inline std::vector<BodyState> states_of(const ExtremalTrajectory &t) {
  std::vector<BodyState> s;
  s.reserve(t.points.size());
  for (const auto &p : t.points) s.push_back(p.state);
  return s;
}

inline void export_solution(const ScenarioConfig &c, const Solution &sol,
                            const std::filesystem::path &dir,
                            const RunOptions &opt, RunSummary &summary) {
  const double h = c.shooting.h;
  const auto &traj = sol.trajectory;
  std::vector<Vec3> lam2;
  for (const auto &p : traj.points) lam2.push_back(p.mult.lam2);
  summary.files = {dir / "trajectory.csv", dir / "controls.csv",
                   dir / "convergence.csv", dir / "summary.json"};
  write_trajectory(summary.files[0], states_of(traj), c.model, h);
  write_controls(summary.files[1], controls_of(traj), lam2,
                 c.input_matrix.cols(), h);
  write_convergence(summary.files[2], sol.records);
  if (opt.store_transitions && !traj.points.empty()) {
    summary.files.push_back(dir / "transitions.csv");
    write_transitions(summary.files.back(),
                      accumulate_phi(traj, c.model, c.input_matrix, h, true));
  }
  write_summary(summary.files[3], summary);
}

inline void fill_summary(RunSummary &s, const ScenarioConfig &c,
                         const Solution &sol) {
  s.scenario = c.name;
  s.J = sol.J;
  s.attitude_violation = sol.terminal_attitude_violation;
  s.momentum_violation = sol.terminal_momentum_violation;
  s.outer_iterations = sol.outer_iterations;
  s.converged = sol.converged;
  s.seed = c.shooting.seed;
}

} // namespace detail

/// Solves the scenario and writes trajectory.csv, controls.csv,
/// convergence.csv and summary.json into output_dir. Solver failures are
/// exported with the best iterate and then rethrown.
inline RunSummary run(const ScenarioConfig &config,
                      const std::filesystem::path &output_dir,
                      const RunOptions &opt = {}) {
  detail::prepare_dir(output_dir);
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };
  RunSummary summary;
  try {
    const Solution sol =
        solve(config.boundary, config.model, config.input_matrix, config.shooting);
    detail::fill_summary(summary, config, sol);
    summary.wall_time_s = elapsed();
    detail::export_solution(config, sol, output_dir, opt, summary);
  } catch (const ShootingFailure &e) {
    detail::fill_summary(summary, config, e.best);
    summary.wall_time_s = elapsed();
    summary.failure = e.what();
    detail::export_solution(config, e.best, output_dir, opt, summary);
    throw;
  }
  return summary;
}

/// Zero-control integration over N steps from (R0, Pi0). The violations
/// compare the endpoint with the scenario's terminal boundary.
inline RunSummary simulate(const ScenarioConfig &config,
                           const std::filesystem::path &output_dir) {
  detail::prepare_dir(output_dir);
  const auto t0 = std::chrono::steady_clock::now();
  const ShootingConfig &sc = config.shooting;
  const Eigen::Index m = config.input_matrix.cols();
  const ControlSchedule u = zero_controls(sc.N, m);
  const auto steps = integrate({config.boundary.R0, config.boundary.Pi0}, u,
                               config.model, config.input_matrix,
                               sc.integrator_config());
  std::vector<BodyState> states{{config.boundary.R0, config.boundary.Pi0}};
  for (const auto &s : steps) states.push_back(s.state);

  RunSummary summary;
  summary.scenario = config.name;
  const BodyState &end = states.back();
  summary.attitude_violation =
      log_so3(config.boundary.RNd.transpose() * end.R).norm();
  summary.momentum_violation = (config.boundary.PiNd - end.Pi).norm();
  summary.converged =
      std::hypot(summary.attitude_violation, summary.momentum_violation) <=
      sc.stop_threshold(config.boundary);
  summary.seed = sc.seed;
  summary.files = {output_dir / "trajectory.csv", output_dir / "controls.csv",
                   output_dir / "summary.json"};
  detail::write_trajectory(summary.files[0], states, config.model, sc.h);
  detail::write_controls(summary.files[1], u, {}, m, sc.h);
  summary.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  detail::write_summary(summary.files[2], summary);
  return summary;
}

} // namespace so3ocp
