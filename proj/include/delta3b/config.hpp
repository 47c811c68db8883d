#pragma once

// JSON run configuration: schema validation with field-path diagnostics, and
// the coupling consistency check alpha = sqrt(2pi) vhat(0) (recomputed from
// the family parameters; an explicit alpha that disagrees is rejected).

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "delta3b/deltares.hpp"
#include "delta3b/gmres.hpp"
#include "delta3b/kinematics.hpp"
#include "delta3b/potential.hpp"

namespace delta3b {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error("config error at '" + field + "': " + what) {}
};

struct LambdaScan {
  double from = 0.0;
  double to = 0.0;
  int points = 0;
};

struct OracleConfig {
  int points = 1024;
  double box = 8.0;
  double tolerance = 1e-10;
};

struct SolverConfig {
  GmresOptions gmres;
  int probes = 3;
  int power_iterations = 50;
  bool floor_check = true;
  double cg_tolerance = 1e-10;
};

struct RunConfig {
  MassConfig masses;
  PairPotentials potentials = {Potential::none(), Potential::none(),
                               Potential::none()};
  bool has_potentials = false;
  CouplingMatrix alphas;
  bool has_alphas = false;
  int grid_n = 64;
  double grid_scale = 0.0;  // <= 0: sqrt(C123 * lambda)
  std::optional<double> lambda;
  std::optional<LambdaScan> lambda_scan;
  std::optional<double> epsilon;
  std::vector<double> epsilons;
  double b_exponent = 0.99;
  OracleConfig oracle;
  SolverConfig solver;
  std::uint64_t seed = 12345;
  bool compare_oracle = false;
  double window_kmax = 10.0;
  nlohmann::json echo;  // the parsed document, with CLI overrides merged

  GridPtr make_solver_grid(double lam) const {
    double scale =
        grid_scale > 0.0 ? grid_scale : std::sqrt(kernel_constant(masses) * lam);
    return make_grid(grid_n, scale);
  }

  double require_lambda() const {
    if (!lambda) throw ConfigError("lambda", "required by this subcommand");
    return *lambda;
  }
  double require_epsilon() const {
    if (!epsilon) throw ConfigError("epsilon", "required by this subcommand");
    return *epsilon;
  }
  const CouplingMatrix& require_alphas() const {
    if (!has_alphas && !has_potentials)
      throw ConfigError("alphas", "need either alphas or potentials");
    return alphas;
  }
  const PairPotentials& require_potentials() const {
    if (!has_potentials)
      throw ConfigError("potentials", "required by this subcommand");
    return potentials;
  }
};

namespace detail {

inline double get_number(const nlohmann::json& j, const std::string& path,
                         const char* key) {
  if (!j.contains(key)) throw ConfigError(path + key, "missing number");
  if (!j[key].is_number()) throw ConfigError(path + key, "must be a number");
  return j[key].get<double>();
}

inline Potential parse_potential(const nlohmann::json& j,
                                 const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "must be an object");
  std::string family = j.value("family", "");
  Potential pot = Potential::none();
  if (family == "none") {
    pot = Potential::none();
  } else if (family == "square-well") {
    pot = Potential::square_well(get_number(j, path + ".", "depth"),
                                 get_number(j, path + ".", "width"));
  } else if (family == "gaussian") {
    pot = Potential::gaussian(get_number(j, path + ".", "amplitude"),
                              get_number(j, path + ".", "width"));
  } else if (family == "power-tail") {
    pot = Potential::power_tail(get_number(j, path + ".", "c"),
                                get_number(j, path + ".", "s"),
                                j.value("eta", 0.1));
  } else {
    throw ConfigError(path + ".family",
                      "must be one of none|square-well|gaussian|power-tail");
  }
  if (j.contains("alpha")) {
    double declared = get_number(j, path + ".", "alpha");
    double actual = kSqrt2Pi * pot.fourier(0.0);
    if (std::abs(declared - actual) > 1e-10)
      throw ConfigError(path + ".alpha",
                        "inconsistent with sqrt(2pi) vhat(0) = " +
                            std::to_string(actual));
  }
  return pot;
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("", "top level must be an object");
  RunConfig cfg;
  cfg.echo = doc;

  if (!doc.contains("masses") || !doc["masses"].is_array() ||
      doc["masses"].size() != 3)
    throw ConfigError("masses", "must be an array of 3 positive numbers");
  auto m = doc["masses"];
  for (int i = 0; i < 3; ++i)
    if (!m[i].is_number() || !(m[i].get<double>() > 0.0))
      throw ConfigError("masses[" + std::to_string(i) + "]",
                        "must be a positive number");
  cfg.masses =
      derive_masses(m[0].get<double>(), m[1].get<double>(), m[2].get<double>());

  if (doc.contains("potentials")) {
    const auto& p = doc["potentials"];
    if (!p.is_object()) throw ConfigError("potentials", "must be an object");
    if (p.contains("all")) {
      Potential pot = detail::parse_potential(p["all"], "potentials.all");
      cfg.potentials = {pot, pot, pot};
    } else {
      const char* keys[3] = {"23", "31", "12"};
      for (int ell = 0; ell < 3; ++ell)
        if (p.contains(keys[ell]))
          cfg.potentials[ell] = detail::parse_potential(
              p[keys[ell]], std::string("potentials.") + keys[ell]);
    }
    cfg.has_potentials = true;
    for (int ell = 0; ell < 3; ++ell)
      cfg.alphas.alpha[ell] = cfg.potentials[ell].coupling();
    cfg.has_alphas = true;
  }

  if (doc.contains("alphas")) {
    const auto& a = doc["alphas"];
    if (!a.is_array() || a.size() != 3)
      throw ConfigError("alphas", "must be an array of 3 numbers");
    CouplingMatrix declared;
    for (int ell = 0; ell < 3; ++ell) {
      if (!a[ell].is_number())
        throw ConfigError("alphas[" + std::to_string(ell) + "]",
                          "must be a number");
      declared.alpha[ell] = a[ell].get<double>();
    }
    if (cfg.has_potentials) {
      for (int ell = 0; ell < 3; ++ell)
        if (std::abs(declared.alpha[ell] - cfg.alphas.alpha[ell]) > 1e-10)
          throw ConfigError("alphas[" + std::to_string(ell) + "]",
                            "inconsistent with the potential coupling " +
                                std::to_string(cfg.alphas.alpha[ell]));
    }
    cfg.alphas = declared;
    cfg.has_alphas = true;
  }

  if (doc.contains("grid")) {
    const auto& g = doc["grid"];
    cfg.grid_n = g.value("n", 64);
    cfg.grid_scale = g.value("scale", 0.0);
    if (cfg.grid_n < 8 || cfg.grid_n % 2 != 0)
      throw ConfigError("grid.n", "must be even and >= 8");
  }

  if (doc.contains("lambda")) {
    cfg.lambda = detail::get_number(doc, "", "lambda");
    if (!(*cfg.lambda > 0.0)) throw ConfigError("lambda", "must be positive");
  }
  if (doc.contains("lambda_scan")) {
    const auto& s = doc["lambda_scan"];
    LambdaScan scan;
    scan.from = detail::get_number(s, "lambda_scan.", "from");
    scan.to = detail::get_number(s, "lambda_scan.", "to");
    scan.points = static_cast<int>(s.value("points", 24));
    if (!(scan.from > 0.0) || !(scan.to > scan.from) || scan.points < 2)
      throw ConfigError("lambda_scan", "need 0 < from < to and points >= 2");
    cfg.lambda_scan = scan;
  }

  if (doc.contains("epsilon")) {
    cfg.epsilon = detail::get_number(doc, "", "epsilon");
    if (!(*cfg.epsilon > 0.0)) throw ConfigError("epsilon", "must be positive");
  }
  if (doc.contains("epsilons")) {
    const auto& e = doc["epsilons"];
    if (!e.is_array() || e.size() < 2)
      throw ConfigError("epsilons", "must be an array of >= 2 numbers");
    double prev = 1e300;
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (!e[i].is_number() || !(e[i].get<double>() > 0.0) ||
          !(e[i].get<double>() < prev))
        throw ConfigError("epsilons[" + std::to_string(i) + "]",
                          "must be positive and strictly decreasing");
      prev = e[i].get<double>();
      cfg.epsilons.push_back(prev);
    }
  }

  cfg.b_exponent = doc.value("b_exponent", 0.99);
  if (doc.contains("oracle")) {
    const auto& o = doc["oracle"];
    cfg.oracle.points = static_cast<int>(o.value("points", 1024));
    cfg.oracle.box = o.value("box", 8.0);
    cfg.oracle.tolerance = o.value("tol", 1e-10);
    if (cfg.oracle.points < 8 || cfg.oracle.points % 2 != 0 ||
        !(cfg.oracle.box > 0.0))
      throw ConfigError("oracle", "need even points >= 8 and box > 0");
  }
  if (doc.contains("solver")) {
    const auto& s = doc["solver"];
    cfg.solver.gmres.tolerance = s.value("gmres_tol", 1e-8);
    cfg.solver.gmres.restart = static_cast<int>(s.value("gmres_restart", 60));
    cfg.solver.gmres.max_iterations =
        static_cast<int>(s.value("gmres_max_iterations", 600));
    cfg.solver.probes = static_cast<int>(s.value("probes", 3));
    cfg.solver.power_iterations =
        static_cast<int>(s.value("power_iterations", 50));
    cfg.solver.floor_check = s.value("floor_check", true);
    cfg.solver.cg_tolerance = s.value("cg_tol", 1e-10);
  }
  if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
  cfg.compare_oracle = doc.value("compare_oracle", false);
  cfg.window_kmax = doc.value("window_kmax", 10.0);
  return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

}  // namespace delta3b
