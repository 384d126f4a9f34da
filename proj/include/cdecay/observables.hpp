#pragma once

#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cdecay/energy_norms.hpp"
#include "cdecay/lyapunov_certificate.hpp"
#include "cdecay/propagator.hpp"

namespace cdecay {

inline constexpr std::string_view kObservableNames[] = {"E", "K", "tildeE", "u_prime_sq", "H_eps"};

inline bool is_observable(std::string_view name) {
  for (std::string_view n : kObservableNames)
    if (n == name) return true;
  return false;
}

/// Form behind a named observable. H_eps needs the Lyapunov parameters.
inline WeightedForm observable_form(std::string_view name, const SystemParams& p,
                                    std::optional<BetaCase> c = std::nullopt,
                                    const LyapunovParams* lyap = nullptr) {
  if (name == "E") return energy_form(p);
  if (name == "K") return theorem_K_form(p.beta, resolve_case(p.beta, c));
  if (name == "tildeE") return tilde_E_form(p, resolve_case(p.beta, c));
  if (name == "u_prime_sq") return u_prime_sq_form();
  if (name == "H_eps") {
    if (!lyap) throw std::invalid_argument("observable H_eps requires certified Lyapunov parameters");
    return H_eps_form(p, *lyap);
  }
  throw std::invalid_argument("unknown observable '" + std::string(name) + "'");
}

/// Round-trip exact decimal form of a double.
inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// CSV with a "time" column followed by one column per observable.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::vector<std::string>& names,
                                 const LyapunovParams* lyap = nullptr, std::optional<BetaCase> c = std::nullopt) {
  std::vector<BoundForm> forms;
  forms.reserve(names.size());
  for (const std::string& n : names) forms.push_back(observable_form(n, traj.params, c, lyap).bind(traj.spectrum));
  os << "time";
  for (const std::string& n : names) os << ',' << n;
  os << '\n';
  for (const ModalState& s : traj.states) {
    os << format_number(s.time);
    for (const BoundForm& f : forms) os << ',' << format_number(f(s));
    os << '\n';
  }
}

}  // namespace cdecay
