#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cdecay/spectral_core.hpp"

namespace cdecay {

enum class ExampleKind {
  dirichlet_laplacian_1d,  // -d²/dx² on (0, π), Dirichlet: λₙ = n²
  neumann_shifted_1d,      // -d²/dx² + ρ₁ on (0, π), Neumann: λₙ = (n-1)² + ρ₁
  perturbed_A2,            // Dirichlet spectrum, A₂ = A² + ζ_pert A
};

struct ExampleSpec {
  ExampleKind kind = ExampleKind::dirichlet_laplacian_1d;
  int n_modes = 64;
  double rho1 = 1.0;
  double zeta_pert = 0.0;

  void validate() const {
    if (n_modes < 1) throw std::invalid_argument("ExampleSpec: n_modes must be >= 1");
    if (kind == ExampleKind::neumann_shifted_1d && !(rho1 > 0.0))
      throw std::invalid_argument("ExampleSpec: rho1 must be positive");
    if (!(zeta_pert >= 0.0)) throw std::invalid_argument("ExampleSpec: zeta must be nonnegative");
  }

  bool operator==(const ExampleSpec&) const = default;
};

inline Spectrum generate_spectrum(const ExampleSpec& spec) {
  spec.validate();
  std::vector<double> lam;
  lam.reserve(static_cast<std::size_t>(spec.n_modes));
  std::string label;
  for (int n = 1; n <= spec.n_modes; ++n) {
    const double k = spec.kind == ExampleKind::neumann_shifted_1d ? n - 1.0 : static_cast<double>(n);
    lam.push_back(k * k + (spec.kind == ExampleKind::neumann_shifted_1d ? spec.rho1 : 0.0));
  }
  switch (spec.kind) {
    case ExampleKind::dirichlet_laplacian_1d: label = "dirichlet:N=" + std::to_string(spec.n_modes); break;
    case ExampleKind::neumann_shifted_1d:
      label = "neumann:N=" + std::to_string(spec.n_modes);
      {
        std::ostringstream os;
        os << ",rho1=" << spec.rho1;
        label += os.str();
      }
      break;
    case ExampleKind::perturbed_A2: {
      std::ostringstream os;
      os << "perturbed:N=" << spec.n_modes << ",zeta=" << spec.zeta_pert;
      label = os.str();
      break;
    }
  }
  return Spectrum(std::move(lam), std::move(label));
}

/// Constants ν₁ ≤ ⟨A₂u,u⟩/⟨A²u,u⟩ ≤ ν₂ for the diagonal A₂ = A² + ζ_pert A.
struct PertRatio {
  double nu1;
  double nu2;
};

inline PertRatio remark_pert_ratio(const Spectrum& spectrum, double zeta_pert) {
  if (!(zeta_pert >= 0.0)) throw std::domain_error("remark_pert_ratio: zeta_pert must be >= 0");
  return {1.0, 1.0 + zeta_pert / spectrum.lambda1()};
}

/// Parses "dirichlet:N=64", "neumann:N=64,rho1=1.0" or "perturbed:N=64,zeta=2.0".
inline ExampleSpec parse_example_preset(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  ExampleSpec spec;
  if (name == "dirichlet")
    spec.kind = ExampleKind::dirichlet_laplacian_1d;
  else if (name == "neumann")
    spec.kind = ExampleKind::neumann_shifted_1d;
  else if (name == "perturbed")
    spec.kind = ExampleKind::perturbed_A2;
  else
    throw std::invalid_argument("unknown example '" + std::string(name) +
                                "' (expected dirichlet, neumann or perturbed)");

  std::string_view rest = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("malformed example option '" + std::string(item) + "'");
    const std::string key(item.substr(0, eq));
    const std::string value(item.substr(eq + 1));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || value.empty())
      throw std::invalid_argument("example option '" + key + "' is not a number");
    if (key == "N") {
      if (v != std::floor(v)) throw std::invalid_argument("example option N must be an integer");
      spec.n_modes = static_cast<int>(v);
    } else if (key == "rho1" && spec.kind == ExampleKind::neumann_shifted_1d) {
      spec.rho1 = v;
    } else if (key == "zeta" && spec.kind == ExampleKind::perturbed_A2) {
      spec.zeta_pert = v;
    } else {
      throw std::invalid_argument("example option '" + key + "' does not apply to " + std::string(name));
    }
  }
  spec.validate();
  return spec;
}

}  // namespace cdecay
