#include "mfl/run.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>

#include <Eigen/Core>

#include "mfl/coupling.hpp"
#include "mfl/diagnostics.hpp"
#include "mfl/gan.hpp"
#include "mfl/integrator.hpp"

namespace mfl {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json log_real_json(const LogReal& x) {
  json j = {{"sign", x.sign}, {"value", x.value()}};
  if (x.sign != 0) {
    j["log"] = x.log_abs;
    j["log10"] = x.log10_abs();
  }
  return j;
}

std::ofstream open_artifact(const fs::path& dir, const std::string& name, json& artifacts) {
  std::ofstream f(dir / name);
  if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
  artifacts.push_back(name);
  return f;
}

void write_manifest(const fs::path& dir, const std::string& subcommand, const RunConfig& config,
                    const json& artifacts, const json& results) {
  const json resolved = to_json(config);
  // The output location does not influence any artifact.
  json hashed = resolved;
  hashed.erase("out");
  json manifest = {
      {"subcommand", subcommand},
      {"version", kVersion},
      {"seed", config.seed},
      {"config_hash", config_hash(hashed)},
      {"config", resolved},
      {"artifacts", artifacts},
      {"results", results},
      {"build",
       {{"compiler", __VERSION__},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                      "." + std::to_string(EIGEN_MINOR_VERSION)}}},
  };
  std::ofstream f(dir / "manifest.json");
  if (!f) throw std::runtime_error("cannot write manifest.json");
  f << manifest.dump(2) << '\n';
}

json run_simulate(const RunConfig& config, const fs::path& dir, json& artifacts) {
  const SimulateSection& s = config.simulate;
  InitSpec init = s.init;
  init.seed = config.seed;
  SimulationOptions options;
  options.count = s.count;
  options.dim = s.dim;
  options.record_every = config.record_every.value_or(100);
  options.diagnostics.k = s.entropy_k;
  options.diagnostics.bootstrap = s.bootstrap;
  const Potential potential = s.potential();
  DynamicsParams params = s.dynamics;
  const Trajectory t = simulate(init, potential, params, options);

  auto traj = open_artifact(dir, "trajectory.csv", artifacts);
  write_trajectory_csv(traj, t.rows);
  auto state = open_artifact(dir, "final_state.csv", artifacts);
  write_ensemble_csv(state, t.final_state);

  const double burn_in = static_cast<double>(options.record_every) * params.dt;
  const MonotonicityReport mono = lyapunov_monotonicity(t.rows, burn_in);
  const DiagnosticsRow& last = t.rows.back();
  json results = {
      {"records", t.rows.size()},
      {"final",
       {{"time", last.time},
        {"free_energy", last.free_energy},
        {"free_energy_se", last.free_energy_se},
        {"var_x", last.var_x},
        {"var_v", last.var_v},
        {"mean_x_norm", last.mean_x_norm}}},
      {"monotonicity",
       {{"checked_pairs", mono.checked_pairs},
        {"violations", mono.violations},
        {"max_uphill", mono.max_uphill}}},
  };
  if (s.variant == "quadratic") {
    results["gibbs"] = {{"var_x", s.dynamics.sigma * s.dynamics.sigma * s.dynamics.speed /
                                      (2.0 * s.dynamics.gamma * s.lambda)},
                        {"var_v", s.dynamics.sigma * s.dynamics.sigma / (2.0 * s.dynamics.gamma)}};
  }
  return results;
}

json run_couple(RunConfig& config, const RunOptions& options, const fs::path& dir,
                json& artifacts) {
  ContractionConfig& c = config.couple.experiment;
  if (options.dims_override > 0) c.dim = options.dims_override;
  if (config.record_every) c.record_every = *config.record_every;
  c.seed = config.seed;
  c.init_a.validate(c.dim);
  c.init_b.validate(c.dim);
  const ContractionResult r = contraction_experiment(c);
  auto csv = open_artifact(dir, "contraction.csv", artifacts);
  write_contraction_csv(csv, r.rows);
  json results = {
      {"dim", c.dim},
      {"xi", r.xi},
      {"fitted", r.fitted},
      {"fitted_rate", log_real_json(r.fitted_rate)},
      {"c", log_real_json(r.constants.c)},
      {"slope_log_h", r.slope_log_h},
      {"slope_G_ratio", r.slope_G_ratio},
      {"G_decay_rate", r.G_decay_rate},
      {"cauchy_schwarz_violations", r.cauchy_schwarz_violations},
      {"rates", rates_to_json(r.constants)},
  };
  if (r.fitted && r.fitted_rate.positive()) {
    results["log_fitted_over_c"] = r.fitted_rate.log_abs - r.constants.c.log_abs;
  }
  return results;
}

json run_rates(const RunConfig& config, const RunOptions& options, const fs::path& dir,
               json& artifacts, std::ostream& out) {
  const RateConstants k = assemble_constants(config.rates.inputs);
  json ledger = rates_to_json(k);
  ledger["dim"] = config.rates.inputs.dim;
  auto f = open_artifact(dir, "rates.json", artifacts);
  f << ledger.dump(2) << '\n';
  if (!options.sweep_iota) return ledger;

  // iota* is usually far below double range, so the default grid is laid
  // out in units of iota* and kept in log form.
  const std::size_t points = config.rates.sweep_points;
  const double max = config.rates.sweep_max;
  auto csv = open_artifact(dir, "rates_sweep.csv", artifacts);
  const auto emit = [&](std::ostream& o) {
    o.precision(17);
    o << "iota,iota_log10,c,c_sign,c_log10\n";
    for (std::size_t q = 0; q < points; ++q) {
      const double frac = static_cast<double>(q) / static_cast<double>(points - 1);
      const LogReal iota = max > 0.0 ? LogReal::from(frac * max)
                                     : LogReal::from(2.0 * frac) * k.iota_star;
      const LogReal c = k.rate_at(iota);
      o << iota.value() << ',';
      if (iota.sign != 0) o << iota.log10_abs();
      o << ',' << c.value() << ',' << c.sign << ',';
      if (c.sign != 0) o << c.log10_abs();
      o << '\n';
    }
  };
  emit(csv);
  emit(out);
  return ledger;
}

json run_gan(const RunConfig& config, const fs::path& dir, json& artifacts) {
  GanConfig g = config.gan;
  g.seed = config.seed;
  if (config.record_every) g.record_every = *config.record_every;
  const GanResult r = train(g);
  auto energy = open_artifact(dir, "energy.csv", artifacts);
  write_energy_csv(energy, r.rows);
  auto samples = open_artifact(dir, "samples.csv", artifacts);
  write_samples_csv(samples, r.generated);
  auto target = open_artifact(dir, "target.csv", artifacts);
  write_samples_csv(target, r.target);
  return {
      {"steps", r.steps},
      {"stopped_early", r.stopped_early},
      {"initial_potential", r.rows.front().potential},
      {"final_potential", r.rows.back().potential},
      {"final_kinetic", r.rows.back().kinetic},
      {"initial_lyapunov", r.rows.front().lyapunov},
      {"final_lyapunov", r.rows.back().lyapunov},
      {"w1_generated_target", wasserstein1_1d(r.generated, r.target)},
      {"uphill_fraction", uphill_fraction(r.rows)},
  };
}

}  // namespace

json error_json(const std::string& kind, const std::string& message, const std::string& path) {
  json e = {{"kind", kind}, {"message", message}};
  if (!path.empty()) e["path"] = path;
  return {{"error", e}};
}

json rates_to_json(const RateConstants& k) {
  const QuadraticForm& G = k.G;
  json eig = json::array();
  for (const auto& z : G.spectrum.eigenvalues) eig.push_back({z.real(), z.imag()});
  const auto matrix = [](const auto& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(row);
    }
    return rows;
  };
  return {
      {"inputs",
       {{"gamma", k.inputs.gamma},
        {"lambda", k.inputs.lambda},
        {"sigma", k.inputs.sigma},
        {"lipschitz_x", k.inputs.lipschitz_x},
        {"iota", k.inputs.iota},
        {"M", k.inputs.M},
        {"safety", k.inputs.safety}}},
      {"case", G.spectrum.regime == DampingRegime::kOverdamped ? "a" : "b"},
      {"lambda_used", G.spectrum.lambda},
      {"lambda_shifted", G.spectrum.lambda_shifted},
      {"A", matrix(G.spectrum.A)},
      {"eigenvalues", eig},
      {"Q", matrix(G.Q)},
      {"Sigma", matrix(G.Sigma)},
      {"gamma_bar", G.gamma_bar},
      {"Q_bar", {G.Q_bar(0), G.Q_bar(1), G.Q_bar(2)}},
      {"Q_bar_norm", G.Q_bar_norm},
      {"lambda_G", G.lambda_G},
      {"C_G", G.C_G},
      {"eps0", k.eps0},
      {"eta", k.eta},
      {"theta", k.theta},
      {"phi_min", log_real_json(k.phi_min)},
      {"kappa_bar_M", log_real_json(k.kappa_bar_M)},
      {"kappa_M", log_real_json(k.kappa_M)},
      {"C1", k.C1},
      {"beta", log_real_json(k.beta)},
      {"C_M", k.C_M},
      {"C0", log_real_json(k.C0)},
      {"C2", log_real_json(k.C2)},
      {"h_2M", k.h_2M},
      {"c", log_real_json(k.c)},
      {"iota_star", log_real_json(k.iota_star)},
  };
}

int run_subcommand(const std::string& name, const RunConfig& input, const RunOptions& options,
                   std::ostream& out, std::ostream& err) {
  try {
    RunConfig config = input;
    const fs::path dir(config.out);
    fs::create_directories(dir);
    json artifacts = json::array();
    json results;
    if (name == "simulate") {
      results = run_simulate(config, dir, artifacts);
    } else if (name == "couple") {
      results = run_couple(config, options, dir, artifacts);
    } else if (name == "rates") {
      results = run_rates(config, options, dir, artifacts, out);
    } else if (name == "gan") {
      results = run_gan(config, dir, artifacts);
    } else {
      err << error_json("usage", "unknown subcommand '" + name + "'").dump() << '\n';
      return 2;
    }
    write_manifest(dir, name, config, artifacts, results);
    if (!(name == "rates" && options.sweep_iota)) out << results.dump(2) << '\n';
    return 0;
  } catch (const ConfigError& e) {
    err << error_json("config", e.what(), e.path()).dump() << '\n';
    return 2;
  } catch (const MissingFileError& e) {
    err << error_json("missing_file", e.what(), e.file()).dump() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    err << error_json("domain", e.what()).dump() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    err << error_json("invalid_argument", e.what()).dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << error_json("runtime", e.what()).dump() << '\n';
    return 1;
  }
}

}  // namespace mfl
