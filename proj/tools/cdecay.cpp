// cdecay: scalar | simulate | certify | sweep. Flags override the --config document.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cdecay/runner.hpp"

namespace {

using cdecay::Json;

struct Overrides {
  std::string config;
  std::optional<double> alpha, beta, b, zeta_pert;
  std::optional<std::string> example, spectrum_file, init, init_file, out, beta_case;
  std::optional<int> mode, steps, points_per_decade;
  std::optional<double> t_end, t_min, grid_max, eps;
  std::optional<std::int64_t> seed;
  std::optional<double> lambda, mu, c, scalar_eps;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "JSON config file; flags below override its fields");
  app->add_option("--t-end", o.t_end, "final time [200]");
  app->add_option("--steps", o.steps, "number of uniform time steps [4000]");
  app->add_option("--out", o.out, "output directory [out]");
}

void add_system(CLI::App* app, Overrides& o) {
  app->add_option("--alpha", o.alpha, "coupling alpha [0]");
  app->add_option("--beta", o.beta, "coupling power beta in [0, 1.5] [0]");
  app->add_option("--b", o.b, "damping b > 0 [1]");
  app->add_option("--zeta-pert", o.zeta_pert, "A2 = A^2 + zeta_pert*A, zeta_pert >= 0 [0]");
  app->add_option("--example", o.example, "dirichlet:N=64 | neumann:N=64,rho1=1.0 | perturbed:N=64,zeta=2.0");
  app->add_option("--spectrum-file", o.spectrum_file, "JSON {\"label\", \"eigenvalues\"}");
}

void add_init(CLI::App* app, Overrides& o) {
  app->add_option("--init", o.init, "spread_1_over_n | single_mode | v_only_spread | random [spread_1_over_n]");
  app->add_option("--mode", o.mode, "mode index for single_mode, 1-based [1]");
  app->add_option("--init-file", o.init_file, "JSON {\"coeffs\": [[u, v, u', v'], ...]}");
  app->add_option("--seed", o.seed, "seed for the random preset [0]");
  app->add_option("--t-min", o.t_min, "start of the sup t*K window [1]");
}

void add_certify(CLI::App* app, Overrides& o) {
  app->add_option("--grid-max", o.grid_max, "probe grid extends to grid_max*lambda1 [1e6]");
  app->add_option("--points-per-decade", o.points_per_decade, "probe grid density [20]");
  app->add_option("--eps", o.eps, "initial epsilon; halved until the certificate passes [automatic]");
  app->add_option("--case", o.beta_case, "lower | upper weak-norm family [by beta; both at beta = 1]");
}

template <class T>
void put(Json& j, const char* section, const char* key, const std::optional<T>& v) {
  if (!v) return;
  if (section)
    j[section][key] = *v;
  else
    j[key] = *v;
}

Json build_document(const std::string& scenario, const Overrides& o) {
  Json doc = o.config.empty() ? Json::object() : cdecay::parse_json_file(o.config);
  if (!doc.is_object()) throw std::runtime_error("--config: top level must be an object");
  doc["scenario"] = scenario;
  put(doc, "system", "alpha", o.alpha);
  put(doc, "system", "beta", o.beta);
  put(doc, "system", "b", o.b);
  put(doc, "system", "zeta_pert", o.zeta_pert);
  if (o.example || o.spectrum_file) doc["spectrum"] = Json::object();
  put(doc, "spectrum", "example", o.example);
  put(doc, "spectrum", "file", o.spectrum_file);
  if (o.init || o.init_file) {
    doc["initial_data"] = Json::object();
    put(doc, "initial_data", "preset", o.init);
    put(doc, "initial_data", "file", o.init_file);
  }
  put(doc, "initial_data", "mode", o.mode);
  put(doc, "time", "t_end", o.t_end);
  put(doc, "time", "n_steps", o.steps);
  put(doc, "time", "t_min", o.t_min);
  put(doc, nullptr, "outputs", o.out);
  put(doc, nullptr, "seed", o.seed);
  put(doc, "certify", "grid_max_factor", o.grid_max);
  put(doc, "certify", "points_per_decade", o.points_per_decade);
  put(doc, "certify", "eps", o.eps);
  put(doc, "certify", "case", o.beta_case);
  put(doc, "scalar", "lambda", o.lambda);
  put(doc, "scalar", "mu", o.mu);
  put(doc, "scalar", "c", o.c);
  put(doc, "scalar", "eps", o.scalar_eps);
  return doc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and Lyapunov certificates for an indirectly damped coupled system.\n"
               "Exit codes: 0 pass, 1 scientific failure, 2 usage error. "
               "CDECAY_THREADS sets the sweep worker count [1]."};
  app.require_subcommand(1);
  Overrides o;

  CLI::App* scalar = app.add_subcommand("scalar", "two-oscillator model: certificate and exponential rate");
  add_common(scalar, o);
  scalar->add_option("--lambda", o.lambda, "lambda > 0");
  scalar->add_option("--mu", o.mu, "mu > 0");
  scalar->add_option("--c", o.c, "coupling with 0 < c^2 < lambda*mu");
  scalar->add_option("--eps", o.scalar_eps, "epsilon of H_eps [half of min(eps1, Young bound)]");

  CLI::App* simulate = app.add_subcommand("simulate", "exact modal trajectory, observables to results.csv");
  add_common(simulate, o);
  add_system(simulate, o);
  add_init(simulate, o);
  add_certify(simulate, o);

  CLI::App* cert = app.add_subcommand("certify", "uniform Lyapunov certificate over spectrum and probe grid");
  add_common(cert, o);
  add_system(cert, o);
  add_certify(cert, o);

  CLI::App* sw = app.add_subcommand("sweep", "sup t*K(t) per cell of a parameter grid");
  add_common(sw, o);
  add_system(sw, o);
  add_init(sw, o);
  add_certify(sw, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cdecay::kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  cdecay::RunResult res;
  try {
    res = cdecay::run_document(build_document(name, o));
  } catch (const std::exception& e) {
    res = {cdecay::kExitUsage, e.what()};
  }
  (res.exit_code == cdecay::kExitPass ? std::cout : std::cerr) << res.message << '\n';
  return res.exit_code;
}
