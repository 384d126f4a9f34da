/*
 * runner.hpp: config validation and scenario dispatch for the cdecay tool.
 *
 * Config document (every key optional unless noted; defaults in brackets):
 *
 *   scenario      "scalar" | "simulate" | "certify" | "sweep"            (required)
 *   system        {alpha [0], beta [0], b [1], zeta_pert [0]}           (required except scalar)
 *   spectrum      {"example": preset} | {"file": path}                  (required except scalar)
 *   initial_data  {"preset": name ["spread_1_over_n"], "mode": k [1]} | {"file": path}
 *   time          {t_end [200], n_steps [4000], t_min [1]}
 *   outputs       directory ["out"]
 *   seed          integer [0], used by the "random" preset
 *   observables   list drawn from E, K, tildeE, u_prime_sq, H_eps [E, K, tildeE]
 *   scalar        {lambda, mu, c (required), init [[1,0,0,0]], eps [automatic],
 *                  rate_tolerance [0.05]}
 *   certify       {grid_max_factor [1e6], points_per_decade [20], eps, case}
 *   sweep         {cells: [{alpha | alpha_fraction, beta, b, zeta_pert,
 *                           negative_control [false], init}],
 *                  grid: {beta: [...], alpha_fraction: [...]}}
 *
 * Sweep cell fields left out inherit from "system"; alpha_fraction is taken
 * relative to the coupling bound of the chosen spectrum.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <openssl/evp.h>

#include "cdecay/decay_analysis.hpp"
#include "cdecay/examples_catalog.hpp"
#include "cdecay/io.hpp"
#include "cdecay/lyapunov_certificate.hpp"
#include "cdecay/observables.hpp"
#include "cdecay/propagator.hpp"
#include "cdecay/scalar_case.hpp"

namespace cdecay {

enum class Scenario { scalar, simulate, certify, sweep };

inline constexpr std::array<std::pair<Scenario, std::string_view>, 4> kScenarioNames{
    {{Scenario::scalar, "scalar"}, {Scenario::simulate, "simulate"}, {Scenario::certify, "certify"},
     {Scenario::sweep, "sweep"}}};

inline std::string_view to_string(Scenario s) {
  for (auto [k, n] : kScenarioNames)
    if (k == s) return n;
  return "?";
}

inline std::optional<Scenario> parse_scenario(std::string_view name) {
  for (auto [k, n] : kScenarioNames)
    if (n == name) return k;
  return std::nullopt;
}

struct SpectrumSource {
  std::optional<std::string> example;
  std::optional<std::string> file;
  bool operator==(const SpectrumSource&) const = default;
};

struct InitialData {
  std::string preset = "spread_1_over_n";
  int mode = 1;
  std::optional<std::string> file;
  bool operator==(const InitialData&) const = default;
};

struct ScalarConfig {
  ScalarParams params{2.0, 3.0, 1.0};
  std::array<double, 4> init{1.0, 0.0, 0.0, 0.0};
  std::optional<double> eps;  // automatic when unset
  double rate_tolerance = 0.05;
  bool operator==(const ScalarConfig&) const = default;
};

struct CertifyConfig {
  double grid_max_factor = 1e6;
  int points_per_decade = 20;
  std::optional<double> eps;
  std::optional<BetaCase> beta_case;
  bool operator==(const CertifyConfig&) const = default;
};

struct SweepCellConfig {
  std::optional<double> alpha;
  std::optional<double> alpha_fraction;
  std::optional<double> beta;
  std::optional<double> b;
  std::optional<double> zeta_pert;
  bool negative_control = false;
  std::optional<std::string> init;
  bool operator==(const SweepCellConfig&) const = default;
};

struct SweepGridConfig {
  std::vector<double> beta;
  std::vector<double> alpha_fraction;
  bool operator==(const SweepGridConfig&) const = default;
};

struct SweepConfig {
  std::vector<SweepCellConfig> cells;
  std::optional<SweepGridConfig> grid;
  bool operator==(const SweepConfig&) const = default;
};

struct RunConfig {
  Scenario scenario = Scenario::simulate;
  SystemParams system;
  SpectrumSource spectrum;
  InitialData initial_data;
  double t_end = 200.0;
  int n_steps = 4000;
  double t_min = 1.0;
  std::string outputs = "out";
  std::uint64_t seed = 0;
  std::vector<std::string> observables{"E", "K", "tildeE"};
  ScalarConfig scalar;
  CertifyConfig certify;
  SweepConfig sweep;
  bool operator==(const RunConfig&) const = default;
};

inline constexpr int kExitPass = 0;
inline constexpr int kExitScientificFailure = 1;
inline constexpr int kExitUsage = 2;

// ---------------------------------------------------------------------------
// Validation

namespace detail {

class Checker {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  static std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
  }

  /// Reports a non-object or any key outside `allowed`; returns whether j is an object.
  bool object(const Json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) {
      fail(path.empty() ? "<root>" : path, "must be an object");
      return false;
    }
    for (const auto& item : j.items()) {
      if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
        std::string names;
        for (std::string_view a : allowed) names += (names.empty() ? "" : ", ") + std::string(a);
        fail(join(path, item.key()), "unknown key (expected one of: " + names + ")");
      }
    }
    return true;
  }

  /// Reads a finite number if present; `ok` states the domain and its message.
  std::optional<double> number(const Json& obj, std::string_view key, const std::string& path,
                               const std::function<bool(double)>& ok = {}, std::string_view domain = {}) {
    if (!obj.contains(key)) return std::nullopt;
    const Json& v = obj[std::string(key)];
    const std::string p = join(path, key);
    if (!v.is_number()) {
      fail(p, "must be a number");
      return std::nullopt;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
      fail(p, "must be finite");
      return std::nullopt;
    }
    if (ok && !ok(x)) {
      fail(p, std::string(domain) + " (got " + format_number(x) + ")");
      return std::nullopt;
    }
    return x;
  }

  std::optional<std::int64_t> integer(const Json& obj, std::string_view key, const std::string& path,
                                      std::int64_t lo, std::int64_t hi) {
    if (!obj.contains(key)) return std::nullopt;
    const Json& v = obj[std::string(key)];
    const std::string p = join(path, key);
    if (!v.is_number_integer()) {
      fail(p, "must be an integer");
      return std::nullopt;
    }
    const auto x = v.is_number_unsigned() ? static_cast<std::int64_t>(std::min<std::uint64_t>(
                                                v.get<std::uint64_t>(), std::numeric_limits<std::int64_t>::max()))
                                          : v.get<std::int64_t>();
    if (x < lo || x > hi) {
      fail(p, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      return std::nullopt;
    }
    return x;
  }

  std::optional<std::string> string(const Json& obj, std::string_view key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const Json& v = obj[std::string(key)];
    if (!v.is_string() || v.get<std::string>().empty()) {
      fail(join(path, key), "must be a non-empty string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  std::optional<std::vector<double>> number_list(const Json& obj, std::string_view key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const Json& v = obj[std::string(key)];
    const std::string p = join(path, key);
    if (!v.is_array()) {
      fail(p, "must be a list of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
        fail(p + "[" + std::to_string(i) + "]", "must be a finite number");
        return std::nullopt;
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }
};

inline bool valid_beta(double b) { return beta_in_range(b); }
inline bool positive(double x) { return x > 0.0; }
inline bool nonnegative(double x) { return x >= 0.0; }

inline constexpr std::string_view kBetaDomain = "beta must lie in [0, 1.5]";

inline void read_system(Checker& ck, const Json& doc, RunConfig& cfg, bool& alpha_given) {
  if (!doc.contains("system")) return;
  const Json& s = doc["system"];
  if (!ck.object(s, "system", {"alpha", "beta", "b", "zeta_pert"})) return;
  if (auto v = ck.number(s, "alpha", "system")) {
    cfg.system.alpha = *v;
    alpha_given = true;
  }
  if (auto v = ck.number(s, "beta", "system", valid_beta, kBetaDomain)) cfg.system.beta = *v;
  if (auto v = ck.number(s, "b", "system", positive, "damping b must be > 0")) cfg.system.damping_b = *v;
  if (auto v = ck.number(s, "zeta_pert", "system", nonnegative, "zeta_pert must be >= 0")) cfg.system.zeta_pert = *v;
}

inline void read_spectrum(Checker& ck, const Json& doc, RunConfig& cfg) {
  if (!doc.contains("spectrum")) return;
  const Json& s = doc["spectrum"];
  if (!ck.object(s, "spectrum", {"example", "file"})) return;
  cfg.spectrum.example = ck.string(s, "example", "spectrum");
  cfg.spectrum.file = ck.string(s, "file", "spectrum");
  if (cfg.spectrum.example && cfg.spectrum.file) ck.fail("spectrum", "give either \"example\" or \"file\", not both");
  if (cfg.spectrum.example) {
    try {
      const ExampleSpec spec = parse_example_preset(*cfg.spectrum.example);
      if (spec.kind == ExampleKind::perturbed_A2) {
        const bool explicit_zeta = doc.contains("system") && doc["system"].is_object() &&
                                   doc["system"].contains("zeta_pert");
        if (explicit_zeta && cfg.system.zeta_pert != spec.zeta_pert)
          ck.fail("system.zeta_pert", "conflicts with the zeta of spectrum.example");
        cfg.system.zeta_pert = spec.zeta_pert;
      }
    } catch (const std::exception& e) {
      ck.fail("spectrum.example", e.what());
    }
  }
}

inline void read_initial_data(Checker& ck, const Json& doc, RunConfig& cfg) {
  if (!doc.contains("initial_data")) return;
  const Json& s = doc["initial_data"];
  if (!ck.object(s, "initial_data", {"preset", "mode", "file"})) return;
  if (auto v = ck.string(s, "preset", "initial_data")) {
    if (!parse_init_preset(*v))
      ck.fail("initial_data.preset", "unknown preset '" + *v +
                                         "' (expected spread_1_over_n, single_mode, v_only_spread or random)");
    cfg.initial_data.preset = *v;
  }
  if (auto v = ck.integer(s, "mode", "initial_data", 1, std::numeric_limits<int>::max()))
    cfg.initial_data.mode = static_cast<int>(*v);
  cfg.initial_data.file = ck.string(s, "file", "initial_data");
  if (cfg.initial_data.file && s.contains("preset"))
    ck.fail("initial_data", "give either \"preset\" or \"file\", not both");
}

inline void read_time(Checker& ck, const Json& doc, RunConfig& cfg) {
  if (!doc.contains("time")) return;
  const Json& s = doc["time"];
  if (!ck.object(s, "time", {"t_end", "n_steps", "t_min"})) return;
  if (auto v = ck.number(s, "t_end", "time", positive, "t_end must be > 0")) cfg.t_end = *v;
  if (auto v = ck.integer(s, "n_steps", "time", 1, 100'000'000)) cfg.n_steps = static_cast<int>(*v);
  if (auto v = ck.number(s, "t_min", "time", positive, "t_min must be > 0")) cfg.t_min = *v;
  if (cfg.t_min > cfg.t_end) ck.fail("time.t_min", "must not exceed time.t_end");
}

inline void read_scalar(Checker& ck, const Json& doc, RunConfig& cfg) {
  if (!doc.contains("scalar")) {
    if (cfg.scenario == Scenario::scalar) ck.fail("scalar", "required for the scalar scenario");
    return;
  }
  const Json& s = doc["scalar"];
  if (!ck.object(s, "scalar", {"lambda", "mu", "c", "init", "eps", "rate_tolerance"})) return;
  for (std::string_view key : {"lambda", "mu", "c"})
    if (cfg.scenario == Scenario::scalar && !s.contains(key))
      ck.fail(Checker::join("scalar", key), "required for the scalar scenario");
  if (auto v = ck.number(s, "lambda", "scalar", positive, "lambda must be > 0")) cfg.scalar.params.lambda = *v;
  if (auto v = ck.number(s, "mu", "scalar", positive, "mu must be > 0")) cfg.scalar.params.mu = *v;
  if (auto v = ck.number(s, "c", "scalar")) cfg.scalar.params.c = *v;
  if (s.contains("lambda") && s.contains("mu") && s.contains("c") && !cfg.scalar.params.is_valid())
    ck.fail("scalar.c", "must satisfy 0 < c^2 < lambda*mu");
  if (auto v = ck.number_list(s, "init", "scalar")) {
    if (v->size() != 4)
      ck.fail("scalar.init", "must have 4 entries (u, v, u', v')");
    else
      std::copy(v->begin(), v->end(), cfg.scalar.init.begin());
  }
  cfg.scalar.eps = ck.number(s, "eps", "scalar", positive, "eps must be > 0");
  if (auto v = ck.number(s, "rate_tolerance", "scalar", positive, "rate_tolerance must be > 0"))
    cfg.scalar.rate_tolerance = *v;
}

inline void read_certify(Checker& ck, const Json& doc, RunConfig& cfg) {
  if (!doc.contains("certify")) return;
  const Json& s = doc["certify"];
  if (!ck.object(s, "certify", {"grid_max_factor", "points_per_decade", "eps", "case"})) return;
  if (auto v = ck.number(s, "grid_max_factor", "certify", [](double x) { return x >= 1.0; },
                         "grid_max_factor must be >= 1"))
    cfg.certify.grid_max_factor = *v;
  if (auto v = ck.integer(s, "points_per_decade", "certify", 1, 10'000))
    cfg.certify.points_per_decade = static_cast<int>(*v);
  cfg.certify.eps = ck.number(s, "eps", "certify", positive, "eps must be > 0");
  if (auto v = ck.string(s, "case", "certify")) {
    if (*v == "lower")
      cfg.certify.beta_case = BetaCase::lower;
    else if (*v == "upper")
      cfg.certify.beta_case = BetaCase::upper;
    else
      ck.fail("certify.case", "must be \"lower\" or \"upper\"");
  }
}

inline void read_sweep(Checker& ck, const Json& doc, RunConfig& cfg) {
  if (!doc.contains("sweep")) {
    if (cfg.scenario == Scenario::sweep) ck.fail("sweep", "required for the sweep scenario");
    return;
  }
  const Json& s = doc["sweep"];
  if (!ck.object(s, "sweep", {"cells", "grid"})) return;
  if (s.contains("cells")) {
    if (!s["cells"].is_array()) {
      ck.fail("sweep.cells", "must be a list");
    } else {
      for (std::size_t i = 0; i < s["cells"].size(); ++i) {
        const Json& c = s["cells"][i];
        const std::string p = "sweep.cells[" + std::to_string(i) + "]";
        if (!ck.object(c, p, {"alpha", "alpha_fraction", "beta", "b", "zeta_pert", "negative_control", "init"}))
          continue;
        SweepCellConfig cell;
        cell.alpha = ck.number(c, "alpha", p);
        cell.alpha_fraction = ck.number(c, "alpha_fraction", p);
        if (cell.alpha && cell.alpha_fraction) ck.fail(p, "give either alpha or alpha_fraction, not both");
        cell.beta = ck.number(c, "beta", p, valid_beta, kBetaDomain);
        cell.b = ck.number(c, "b", p, positive, "damping b must be > 0");
        cell.zeta_pert = ck.number(c, "zeta_pert", p, nonnegative, "zeta_pert must be >= 0");
        if (c.contains("negative_control")) {
          if (!c["negative_control"].is_boolean())
            ck.fail(p + ".negative_control", "must be true or false");
          else
            cell.negative_control = c["negative_control"].get<bool>();
        }
        cell.init = ck.string(c, "init", p);
        if (cell.init && !parse_init_preset(*cell.init)) ck.fail(p + ".init", "unknown preset '" + *cell.init + "'");
        cfg.sweep.cells.push_back(cell);
      }
    }
  }
  if (s.contains("grid")) {
    const Json& g = s["grid"];
    if (ck.object(g, "sweep.grid", {"beta", "alpha_fraction"})) {
      SweepGridConfig grid;
      for (std::string_view key : {"beta", "alpha_fraction"})
        if (!g.contains(key)) ck.fail(Checker::join("sweep.grid", key), "required");
      if (auto v = ck.number_list(g, "beta", "sweep.grid")) {
        grid.beta = *v;
        for (double b : grid.beta)
          if (!beta_in_range(b)) ck.fail("sweep.grid.beta", std::string(kBetaDomain));
      }
      if (auto v = ck.number_list(g, "alpha_fraction", "sweep.grid")) grid.alpha_fraction = *v;
      cfg.sweep.grid = grid;
    }
  }
}

}  // namespace detail

using ConfigErrors = std::vector<std::string>;

/// Parses and checks a config document, collecting every violation.
inline std::variant<RunConfig, ConfigErrors> validate_config(const Json& doc) {
  detail::Checker ck;
  RunConfig cfg;
  if (!ck.object(doc, "",
                 {"scenario", "system", "spectrum", "initial_data", "time", "outputs", "seed", "observables", "scalar",
                  "certify", "sweep"}))
    return ck.errors;

  bool scenario_ok = false;
  if (!doc.contains("scenario")) {
    ck.fail("scenario", "required (expected scalar, simulate, certify or sweep)");
  } else if (!doc["scenario"].is_string() || !parse_scenario(doc["scenario"].get<std::string>())) {
    ck.fail("scenario", "unknown scenario " + doc["scenario"].dump() + " (expected scalar, simulate, certify or sweep)");
  } else {
    cfg.scenario = *parse_scenario(doc["scenario"].get<std::string>());
    scenario_ok = true;
  }

  bool alpha_given = false;
  detail::read_system(ck, doc, cfg, alpha_given);
  detail::read_spectrum(ck, doc, cfg);
  detail::read_initial_data(ck, doc, cfg);
  detail::read_time(ck, doc, cfg);
  if (auto v = ck.string(doc, "outputs", "")) cfg.outputs = *v;
  if (auto v = ck.integer(doc, "seed", "", 0, std::numeric_limits<std::int64_t>::max()))
    cfg.seed = static_cast<std::uint64_t>(*v);
  if (doc.contains("observables")) {
    const Json& o = doc["observables"];
    if (!o.is_array() || o.empty()) {
      ck.fail("observables", "must be a non-empty list of names");
    } else {
      cfg.observables.clear();
      for (std::size_t i = 0; i < o.size(); ++i) {
        if (!o[i].is_string() || !is_observable(o[i].get<std::string>()))
          ck.fail("observables[" + std::to_string(i) + "]",
                  "unknown observable " + o[i].dump() + " (expected E, K, tildeE, u_prime_sq or H_eps)");
        else
          cfg.observables.push_back(o[i].get<std::string>());
      }
    }
  }
  detail::read_scalar(ck, doc, cfg);
  detail::read_certify(ck, doc, cfg);
  detail::read_sweep(ck, doc, cfg);

  if (scenario_ok && cfg.scenario != Scenario::scalar) {
    if (!doc.contains("system")) ck.fail("system", "required for the " + std::string(to_string(cfg.scenario)) + " scenario");
    if (!cfg.spectrum.example && !cfg.spectrum.file)
      ck.fail("spectrum", "required: give \"example\" or \"file\"");
  }
  if (scenario_ok && cfg.scenario == Scenario::certify) {
    if (!alpha_given || cfg.system.alpha == 0.0)
      ck.fail("system.alpha", "must be nonzero for the certify scenario");
    if (cfg.certify.beta_case) {
      try {
        check_case(cfg.system.beta, *cfg.certify.beta_case);
      } catch (const std::exception& e) {
        ck.fail("certify.case", e.what());
      }
    }
  }
  if (scenario_ok && cfg.scenario == Scenario::simulate &&
      std::find(cfg.observables.begin(), cfg.observables.end(), "H_eps") != cfg.observables.end() &&
      cfg.system.alpha == 0.0)
    ck.fail("observables", "H_eps requires a nonzero system.alpha");

  if (!ck.errors.empty()) return ck.errors;
  return cfg;
}

/// Full document with every default spelled out; validate_config inverts it.
inline Json to_json(const RunConfig& c) {
  Json j;
  j["scenario"] = std::string(to_string(c.scenario));
  j["system"] = params_to_json(c.system);
  Json sp = Json::object();
  if (c.spectrum.example) sp["example"] = *c.spectrum.example;
  if (c.spectrum.file) sp["file"] = *c.spectrum.file;
  j["spectrum"] = sp;
  if (c.initial_data.file)
    j["initial_data"] = Json{{"file", *c.initial_data.file}, {"mode", c.initial_data.mode}};
  else
    j["initial_data"] = Json{{"preset", c.initial_data.preset}, {"mode", c.initial_data.mode}};
  j["time"] = Json{{"t_end", c.t_end}, {"n_steps", c.n_steps}, {"t_min", c.t_min}};
  j["outputs"] = c.outputs;
  j["seed"] = c.seed;
  j["observables"] = c.observables;
  j["scalar"] = Json{{"lambda", c.scalar.params.lambda},
                     {"mu", c.scalar.params.mu},
                     {"c", c.scalar.params.c},
                     {"init", c.scalar.init},
                     {"rate_tolerance", c.scalar.rate_tolerance}};
  if (c.scalar.eps) j["scalar"]["eps"] = *c.scalar.eps;
  Json cert{{"grid_max_factor", c.certify.grid_max_factor}, {"points_per_decade", c.certify.points_per_decade}};
  if (c.certify.eps) cert["eps"] = *c.certify.eps;
  if (c.certify.beta_case) cert["case"] = to_string(*c.certify.beta_case);
  j["certify"] = cert;
  Json cells = Json::array();
  for (const SweepCellConfig& cell : c.sweep.cells) {
    Json x = Json::object();
    if (cell.alpha) x["alpha"] = *cell.alpha;
    if (cell.alpha_fraction) x["alpha_fraction"] = *cell.alpha_fraction;
    if (cell.beta) x["beta"] = *cell.beta;
    if (cell.b) x["b"] = *cell.b;
    if (cell.zeta_pert) x["zeta_pert"] = *cell.zeta_pert;
    x["negative_control"] = cell.negative_control;
    if (cell.init) x["init"] = *cell.init;
    cells.push_back(x);
  }
  Json sw{{"cells", cells}};
  if (c.sweep.grid) sw["grid"] = Json{{"beta", c.sweep.grid->beta}, {"alpha_fraction", c.sweep.grid->alpha_fraction}};
  j["sweep"] = sw;
  return j;
}

// ---------------------------------------------------------------------------
// Artifacts

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

/// Sole writer of a run's files: write to a temporary, then rename into place.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    if (!std::filesystem::is_directory(dir_)) throw std::runtime_error("'" + dir_.string() + "' is not a directory");
  }

  void write(const std::string& name, const std::string& content) {
    const std::filesystem::path final_path = dir_ / name;
    const std::filesystem::path tmp = dir_ / (name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
      out << content;
      out.flush();
      if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
    std::filesystem::rename(tmp, final_path);
    entries_.push_back(Json{{"path", name}, {"bytes", content.size()}, {"sha256", sha256_hex(content)}});
  }

  /// Writes manifest.json listing every artifact written so far.
  void write_manifest(const RunConfig& cfg, int exit_code) {
    Json m{{"scenario", std::string(to_string(cfg.scenario))},
           {"exit_code", exit_code},
           {"config", to_json(cfg)},
           {"artifacts", entries_}};
    const std::filesystem::path final_path = dir_ / "manifest.json";
    const std::filesystem::path tmp = dir_ / "manifest.json.tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
      out << m.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, final_path);
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  Json entries_ = Json::array();
};

/// Worker count from CDECAY_THREADS; 1 when unset or malformed.
inline unsigned thread_count_from_env() {
  const char* v = std::getenv("CDECAY_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) return 1;
  return static_cast<unsigned>(std::min<long>(n, 256));
}

struct RunResult {
  int exit_code = kExitPass;
  std::string message;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Scenarios

namespace detail {

inline Spectrum load_spectrum(const RunConfig& cfg) {
  try {
    if (cfg.spectrum.file) return spectrum_from_json(parse_json_file(*cfg.spectrum.file));
    return generate_spectrum(parse_example_preset(cfg.spectrum.example.value_or("dirichlet:N=64")));
  } catch (const std::exception& e) {
    throw UsageError(std::string("spectrum: ") + e.what());
  }
}

inline ModalState load_initial_state(const RunConfig& cfg, const Spectrum& sp) {
  try {
    if (cfg.initial_data.file) return state_from_json(parse_json_file(*cfg.initial_data.file), sp);
    InitRecipe r;
    r.preset = *parse_init_preset(cfg.initial_data.preset);
    r.mode = cfg.initial_data.mode;
    r.seed = cfg.seed;
    return make_initial_state(r, sp);
  } catch (const std::exception& e) {
    throw UsageError(std::string("initial_data: ") + e.what());
  }
}

inline std::vector<double> probe_grid(const RunConfig& cfg, const Spectrum& sp) {
  return default_probe_grid(sp.lambda1(), cfg.certify.grid_max_factor, cfg.certify.points_per_decade);
}

inline RunResult run_scalar(const RunConfig& cfg, ArtifactWriter& out) {
  const ScalarParams& s = cfg.scalar.params;
  const Vec4 init(cfg.scalar.init[0], cfg.scalar.init[1], cfg.scalar.init[2], cfg.scalar.init[3]);
  const double eps = cfg.scalar.eps.value_or(scalar_select_eps(s));
  const ScalarCertificate cert = scalar_certificate(s, eps);
  const ScalarConstants k = scalar_C1_C2_eps1(s, eps);

  const WeightedForm ef = scalar_energy_form(s), kf = scalar_K_form(s), hf = scalar_H_form(s, eps);
  std::ostringstream csv;
  csv << "t,u,v,u',v',E,K,H_eps\n";
  for (const ScalarSample& smp : scalar_trajectory(s, init, cfg.t_end, cfg.n_steps)) {
    csv << format_number(smp.t);
    for (int i = 0; i < 4; ++i) csv << ',' << format_number(smp.x(i));
    csv << ',' << format_number(ef.evaluate_mode(kScalarSlot, smp.x)) << ','
        << format_number(kf.evaluate_mode(kScalarSlot, smp.x)) << ','
        << format_number(hf.evaluate_mode(kScalarSlot, smp.x)) << '\n';
  }
  out.write("results.csv", csv.str());

  RunResult res;
  Json j{{"scenario", "scalar"},
         {"params", {{"lambda", s.lambda}, {"mu", s.mu}, {"c", s.c}}},
         {"eps", eps},
         {"eps1", k.eps1},
         {"C1", k.C1},
         {"C2", k.C2},
         {"positivity", cert.positivity},
         {"C3", cert.C3}};
  // K(t) <= (C2/C1) exp(-(C3/C2) t) K(0) once both margins are positive.
  bool pass = k.C1 > 0.0 && cert.positivity > 0.0 && cert.C3 > 0.0;
  j["decay_prefactor"] = pass ? Json(k.C2 / k.C1) : Json(nullptr);
  j["decay_rate_bound"] = pass ? Json(cert.C3 / k.C2) : Json(nullptr);
  try {
    const DecayRates r = scalar_decay_check(s, init, cfg.t_end, cfg.n_steps);
    const double rel = std::abs(r.measured_rate - r.oracle_rate) / std::abs(r.oracle_rate);
    j["measured_rate"] = number_or_null(r.measured_rate);
    j["oracle_rate"] = r.oracle_rate;
    j["rate_rel_error"] = number_or_null(rel);
    pass = pass && rel <= cfg.scalar.rate_tolerance;
  } catch (const std::exception& e) {
    j["rate_error"] = e.what();
    pass = false;
  }
  j["pass"] = pass;
  out.write("certificate.json", j.dump(2) + "\n");
  res.exit_code = pass ? kExitPass : kExitScientificFailure;
  res.message = pass ? "scalar: certificate and decay rate check passed" : "scalar: check failed";
  return res;
}

inline RunResult run_simulate(const RunConfig& cfg, ArtifactWriter& out) {
  const Spectrum sp = load_spectrum(cfg);
  const ModalState init = load_initial_state(cfg, sp);
  const Trajectory traj = run_trajectory(init, cfg.system, sp, cfg.t_end, cfg.n_steps);

  std::optional<LyapunovParams> lyap;
  if (std::find(cfg.observables.begin(), cfg.observables.end(), "H_eps") != cfg.observables.end()) {
    if (!is_admissible(cfg.system, sp)) throw UsageError("observables: H_eps requires |alpha| below the coupling bound");
    const CertificateReport rep =
        certify(cfg.system, sp, probe_grid(cfg, sp), cfg.certify.eps, cfg.certify.beta_case);
    if (!rep.pass) return {kExitScientificFailure, "simulate: no certified H_eps for these parameters"};
    lyap = rep.lyap;
  }
  std::ostringstream csv;
  write_trajectory_csv(csv, traj, cfg.observables, lyap ? &*lyap : nullptr, cfg.certify.beta_case);
  out.write("results.csv", csv.str());
  for (const ModalState& s : traj.states)
    if (!s.all_finite()) return {kExitScientificFailure, "simulate: trajectory became non-finite"};
  return {kExitPass, "simulate: wrote " + std::to_string(traj.size()) + " samples"};
}

inline RunResult run_certify(const RunConfig& cfg, ArtifactWriter& out) {
  const Spectrum sp = load_spectrum(cfg);
  const std::vector<double> grid = probe_grid(cfg, sp);
  std::vector<BetaCase> cases;
  if (cfg.certify.beta_case)
    cases.push_back(*cfg.certify.beta_case);
  else if (cfg.system.beta == 1.0)
    cases = {BetaCase::lower, BetaCase::upper};
  else
    cases.push_back(default_case(cfg.system.beta));

  Json reports = Json::array();
  std::ostringstream csv;
  csv << "case,lambda,positivity_margin,domination_margin\n";
  bool pass = true;
  std::string failing;
  for (BetaCase c : cases) {
    const CertificateReport rep = certify(cfg.system, sp, grid, cfg.certify.eps, c);
    pass = pass && rep.pass;
    if (!rep.pass && rep.failing_lambda && failing.empty()) failing = format_number(*rep.failing_lambda);
    reports.push_back(certificate_to_json(rep));
    for (const ModeMargin& m : rep.per_mode_margins)
      csv << to_string(c) << ',' << format_number(m.lambda) << ',' << format_number(m.positivity) << ','
          << format_number(m.domination) << '\n';
  }
  Json j{{"scenario", "certify"},
         {"params", params_to_json(cfg.system)},
         {"spectrum_label", sp.label()},
         {"coupling_bound", coupling_bound(sp, cfg.system.beta)},
         {"grid", {{"max_factor", cfg.certify.grid_max_factor}, {"points_per_decade", cfg.certify.points_per_decade}}},
         {"pass", pass},
         {"reports", reports}};
  out.write("certificate.json", j.dump(2) + "\n");
  out.write("results.csv", csv.str());
  if (pass) return {kExitPass, "certify: pass"};
  return {kExitScientificFailure, "certify: fail" + (failing.empty() ? std::string{} : " at lambda = " + failing)};
}

/// Expands explicit cells followed by the beta × alpha_fraction grid.
inline std::vector<SweepCell> resolve_cells(const RunConfig& cfg, const Spectrum& sp) {
  std::vector<SweepCellConfig> raw = cfg.sweep.cells;
  if (cfg.sweep.grid)
    for (double b : cfg.sweep.grid->beta)
      for (double f : cfg.sweep.grid->alpha_fraction) {
        SweepCellConfig c;
        c.beta = b;
        c.alpha_fraction = f;
        raw.push_back(c);
      }
  std::vector<SweepCell> cells;
  cells.reserve(raw.size());
  for (const SweepCellConfig& r : raw) {
    SweepCell cell;
    cell.params = cfg.system;
    if (r.beta) cell.params.beta = *r.beta;
    if (r.b) cell.params.damping_b = *r.b;
    if (r.zeta_pert) cell.params.zeta_pert = *r.zeta_pert;
    if (r.alpha) cell.params.alpha = *r.alpha;
    if (r.alpha_fraction) cell.params.alpha = *r.alpha_fraction * coupling_bound(sp, cell.params.beta);
    cell.negative_control = r.negative_control;
    if (r.init) {
      InitRecipe rec;
      rec.preset = *parse_init_preset(*r.init);
      rec.mode = cfg.initial_data.mode;
      rec.seed = cfg.seed;
      cell.recipe = rec;
    }
    cells.push_back(cell);
  }
  return cells;
}

}  // namespace detail

/// CSV of a sweep: the ten documented columns, then ceiling,
/// theoretical_ceiling and error.
inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "alpha,beta,b,zeta_pert,N,t_end,sup_tK,loglog_slope,bound_constant,pass,ceiling,theoretical_ceiling,error\n";
  for (const SweepRow& r : rows) {
    const SystemParams& p = r.cell.params;
    std::string err = r.error;
    std::replace(err.begin(), err.end(), '"', '\'');
    os << format_number(p.alpha) << ',' << format_number(p.beta) << ',' << format_number(p.damping_b) << ','
       << format_number(p.zeta_pert) << ',' << r.n_modes << ',' << format_number(r.t_end) << ','
       << format_number(r.report.sup_tK) << ',' << format_number(r.report.loglog_slope) << ','
       << format_number(r.report.bound_constant) << ',' << (r.report.pass ? "true" : "false") << ','
       << format_number(r.report.ceiling) << ','
       << (r.theoretical_ceiling ? format_number(*r.theoretical_ceiling) : std::string{}) << ','
       << (err.empty() ? std::string{} : '"' + err + '"') << '\n';
  }
  return os.str();
}

namespace detail {

inline RunResult run_sweep(const RunConfig& cfg, ArtifactWriter& out) {
  const Spectrum sp = load_spectrum(cfg);
  const std::vector<SweepCell> cells = resolve_cells(cfg, sp);
  InitRecipe recipe;
  if (cfg.initial_data.file) throw UsageError("initial_data.file is not supported by the sweep scenario");
  recipe.preset = *parse_init_preset(cfg.initial_data.preset);
  recipe.mode = cfg.initial_data.mode;
  recipe.seed = cfg.seed;

  SweepOptions opt;
  opt.t_end = cfg.t_end;
  opt.n_steps = cfg.n_steps;
  opt.t_min = cfg.t_min;
  opt.grid_max_factor = cfg.certify.grid_max_factor;
  opt.points_per_decade = cfg.certify.points_per_decade;
  opt.threads = thread_count_from_env();
  const std::vector<SweepRow> rows = sweep(cells, sp, recipe, opt);
  out.write("results.csv", sweep_csv(rows));

  // A row is as expected when admissible cells pass and negative controls fail.
  std::size_t unexpected = 0;
  for (const SweepRow& r : rows)
    if (r.report.pass == r.cell.negative_control) ++unexpected;
  if (unexpected == 0) return {kExitPass, "sweep: " + std::to_string(rows.size()) + " rows as expected"};
  return {kExitScientificFailure, "sweep: " + std::to_string(unexpected) + " of " + std::to_string(rows.size()) +
                                      " rows contradict their expected verdict"};
}

}  // namespace detail

/// Executes a validated config. Scientific outcomes map to exit 0/1; I/O or
/// data problems surface as exit 2.
inline RunResult run(const RunConfig& cfg) {
  try {
    ArtifactWriter out(cfg.outputs);
    RunResult res;
    switch (cfg.scenario) {
      case Scenario::scalar: res = detail::run_scalar(cfg, out); break;
      case Scenario::simulate: res = detail::run_simulate(cfg, out); break;
      case Scenario::certify: res = detail::run_certify(cfg, out); break;
      case Scenario::sweep: res = detail::run_sweep(cfg, out); break;
    }
    out.write_manifest(cfg, res.exit_code);
    return res;
  } catch (const UsageError& e) {
    return {kExitUsage, e.what()};
  } catch (const std::filesystem::filesystem_error& e) {
    return {kExitUsage, std::string("outputs: ") + e.what()};
  } catch (const std::exception& e) {
    return {kExitUsage, e.what()};
  }
}

/// validate_config followed by run; errors are reported one per line.
inline RunResult run_document(const Json& doc) {
  auto parsed = validate_config(doc);
  if (auto* errs = std::get_if<ConfigErrors>(&parsed)) {
    std::string msg;
    for (const std::string& e : *errs) msg += (msg.empty() ? "" : "\n") + e;
    return {kExitUsage, msg};
  }
  return run(std::get<RunConfig>(parsed));
}

}  // namespace cdecay
