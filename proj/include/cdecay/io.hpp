// JSON documents for spectra, initial states and certificate reports.
#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdecay/decay_analysis.hpp"
#include "cdecay/lyapunov_certificate.hpp"
#include "cdecay/propagator.hpp"
#include "cdecay/spectral_core.hpp"

namespace cdecay {

using Json = nlohmann::ordered_json;

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json parse_json_file(const std::filesystem::path& path) {
  try {
    return Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw std::runtime_error("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

/// {"label": string, "eigenvalues": [numbers]}; label is optional.
inline Spectrum spectrum_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("eigenvalues") || !doc["eigenvalues"].is_array())
    throw std::invalid_argument("spectrum document needs an \"eigenvalues\" array");
  std::vector<double> lam;
  for (const Json& v : doc["eigenvalues"]) {
    if (!v.is_number()) throw std::invalid_argument("spectrum eigenvalues must be numbers");
    lam.push_back(v.get<double>());
  }
  std::string label = doc.value("label", std::string{});
  return Spectrum(std::move(lam), std::move(label));
}

inline Json spectrum_to_json(const Spectrum& sp) {
  return Json{{"label", sp.label()}, {"eigenvalues", std::vector<double>(sp.eigenvalues().begin(), sp.eigenvalues().end())}};
}

/// {"coeffs": [[u, v, u', v'], ...]} with one row per mode.
inline ModalState state_from_json(const Json& doc, const Spectrum& sp) {
  if (!doc.is_object() || !doc.contains("coeffs") || !doc["coeffs"].is_array())
    throw std::invalid_argument("initial-state document needs a \"coeffs\" array");
  const Json& rows = doc["coeffs"];
  ModalState s = zero_state(sp);
  if (rows.size() != sp.n_modes())
    throw std::invalid_argument("initial state has " + std::to_string(rows.size()) + " rows but spectrum has " +
                                std::to_string(sp.n_modes()) + " modes");
  for (std::size_t n = 0; n < rows.size(); ++n) {
    if (!rows[n].is_array() || rows[n].size() != 4)
      throw std::invalid_argument("initial-state row " + std::to_string(n) + " must have 4 entries");
    for (int k = 0; k < 4; ++k) {
      if (!rows[n][k].is_number()) throw std::invalid_argument("initial-state entries must be numbers");
      s.coeffs(static_cast<Eigen::Index>(n), k) = rows[n][k].get<double>();
    }
  }
  if (!s.all_finite()) throw std::invalid_argument("initial state has non-finite entries");
  return s;
}

inline Json state_to_json(const ModalState& s) {
  Json rows = Json::array();
  for (Eigen::Index n = 0; n < s.coeffs.rows(); ++n)
    rows.push_back({s.coeffs(n, 0), s.coeffs(n, 1), s.coeffs(n, 2), s.coeffs(n, 3)});
  return Json{{"coeffs", rows}};
}

inline Json params_to_json(const SystemParams& p) {
  return Json{{"alpha", p.alpha}, {"beta", p.beta}, {"b", p.damping_b}, {"zeta_pert", p.zeta_pert}};
}

/// Non-finite values become null so the document stays valid JSON.
inline Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json lyapunov_to_json(const LyapunovParams& l) {
  return Json{{"p", l.p},
              {"gamma", l.gamma_young},
              {"gamma_interval", {l.gamma_lower, l.gamma_upper}},
              {"delta", l.delta},
              {"zeta", l.zeta_const},
              {"rho", l.rho},
              {"a", l.a_exp},
              {"eps", l.eps},
              {"lambda1", l.lambda1},
              {"young", {{"c1", l.young.c1}, {"c2", l.young.c2}, {"c3", l.young.c3}, {"c4", l.young.c4}}}};
}

inline Json certificate_to_json(const CertificateReport& r) {
  Json j{{"pass", r.pass},
         {"beta_case", to_string(r.beta_case)},
         {"reason", r.reason},
         {"uniform_gamma", number_or_null(r.uniform_gamma)},
         {"min_positivity", number_or_null(r.min_positivity)},
         {"eps_used", r.eps_used},
         {"p_used", r.p_used},
         {"halvings", r.halvings},
         {"failing_lambda", r.failing_lambda ? Json(*r.failing_lambda) : Json(nullptr)},
         {"worst_lambda", r.worst_lambda},
         {"n_probe_points", r.per_mode_margins.size()}};
  j["lyapunov"] = r.lyap ? lyapunov_to_json(*r.lyap) : Json(nullptr);
  return j;
}

inline Json decay_report_to_json(const DecayReport& r) {
  return Json{{"sup_tK", number_or_null(r.sup_tK)},
              {"t_at_sup", r.t_at_sup},
              {"loglog_slope", number_or_null(r.loglog_slope)},
              {"bound_constant", number_or_null(r.bound_constant)},
              {"ceiling", number_or_null(r.ceiling)},
              {"pass", r.pass}};
}

}  // namespace cdecay
