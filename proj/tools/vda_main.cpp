// Command-line front end: simulate, make-obs, assimilate, uncertainty,
// twin and verify subcommands over a JSON run configuration.
//
// Exit codes: 0 ok, 2 config error, 3 numerical blow-up, 4 verification
// failure, 1 anything else.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "vda/adjoint.hpp"
#include "vda/config.hpp"
#include "vda/errors.hpp"
#include "vda/io.hpp"
#include "vda/lbfgs.hpp"
#include "vda/rng.hpp"
#include "vda/twin.hpp"
#include "vda/uncertainty.hpp"
#include "vda/verify.hpp"

#include "json.hpp"

namespace fs = std::filesystem;
using namespace vda;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_override;
  std::string profile = "fast";
};

RunConfig load(const CommonArgs& args) {
  RunConfig cfg = load_config(args.config_path);
  if (args.seed_override) cfg.seed = *args.seed_override;
  return cfg;
}

// Output names carry the config hash and seed so reruns are
// reproducible and never collide across configs.
std::string stem_for(const RunConfig& cfg, const std::string& command) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s-%08llx-s%llu", command.c_str(),
                static_cast<unsigned long long>(cfg.content_hash & 0xffffffffull),
                static_cast<unsigned long long>(cfg.seed));
  return buf;
}

fs::path ensure_out_dir(const CommonArgs& args) {
  fs::path dir(args.out_dir);
  fs::create_directories(dir);
  return dir;
}

GridSnapshot field_snapshot(const RunConfig& cfg, const Vector& field,
                            Real time) {
  GridSnapshot snap;
  snap.nx = cfg.grid.nx;
  snap.ny = cfg.grid.ny;
  snap.spacing = cfg.grid.spacing;
  snap.time = time;
  snap.data = field;
  return snap;
}

Profile parse_profile(const std::string& text) {
  if (text == "fast") return Profile::fast;
  if (text == "paper") return Profile::paper;
  throw ConfigError("unknown profile '" + text + "' (want fast or paper)");
}

int cmd_simulate(const CommonArgs& args) {
  const RunConfig cfg = load(args);
  if (cfg.model_kind != "phasefield") {
    throw ConfigError("simulate: only the phasefield model writes snapshots");
  }
  const fs::path dir = ensure_out_dir(args);
  const std::string stem = stem_for(cfg, "simulate");

  std::vector<Real> snapshot_times = cfg.snapshot_times;
  if (snapshot_times.empty()) snapshot_times = {5, 10, 20, 50, 100};
  Real t_last = 0;
  for (Real t : snapshot_times) t_last = std::max(t_last, t);

  const auto model = cfg.make_model();
  const Vector theta0 = cfg.make_truth_state();
  const TimeGrid grid = TimeGrid::covering(cfg.dt, t_last);
  const Trajectory traj = integrate(*model, theta0, grid);

  CsvWriter summary({"time", "mean_phi", "min_phi", "max_phi"});
  write_snapshot(dir / (stem + "-t0.grid"),
                 field_snapshot(cfg, theta0.head(cfg.grid.cells()), 0.0));
  for (Real t : snapshot_times) {
    const Index k = grid.step_of(t);
    const Vector field = traj.state(k).head(cfg.grid.cells());
    char name[64];
    std::snprintf(name, sizeof(name), "%s-t%g.grid", stem.c_str(), t);
    write_snapshot(dir / name, field_snapshot(cfg, field, t));
    summary.row({t, field.mean(), field.minCoeff(), field.maxCoeff()});
  }
  summary.save(dir / (stem + "-summary.csv"));
  std::printf("simulate: wrote %zu snapshots under %s\n",
              snapshot_times.size() + 1, dir.string().c_str());
  return 0;
}

int cmd_make_obs(const CommonArgs& args) {
  const RunConfig cfg = load(args);
  const fs::path dir = ensure_out_dir(args);
  const std::string stem = stem_for(cfg, "obs");

  const auto model = cfg.make_model();
  const auto op = cfg.make_observation_operator();
  const Vector truth = cfg.make_truth_state();
  const std::vector<Real> times = cfg.observation_time_ladder();
  Real t_last = 0;
  for (Real t : times) t_last = std::max(t_last, t);
  const TimeGrid grid = TimeGrid::covering(cfg.dt, t_last);
  const Trajectory traj = integrate(*model, truth, grid);
  const ObservationSeries obs =
      make_synthetic(traj, *op, times, cfg.sigma, cfg.seed);

  // Grid-series layout: one snapshot per time plus a CSV index.
  CsvWriter index({"s", "time", "sigma", "file"});
  for (Index s = 0; s < obs.count(); ++s) {
    char name[64];
    std::snprintf(name, sizeof(name), "%s-%04lld.grid", stem.c_str(),
                  static_cast<long long>(s));
    if (cfg.model_kind == "phasefield") {
      write_snapshot(dir / name,
                     field_snapshot(cfg, obs.values.col(s),
                                    obs.times[static_cast<std::size_t>(s)]));
    }
    index.row_mixed({std::to_string(s),
                     format_real(obs.times[static_cast<std::size_t>(s)]),
                     format_real(cfg.sigma), name});
  }
  index.save(dir / (stem + "-index.csv"));
  std::printf("make-obs: %lld snapshots, sigma = %g, seed = %llu\n",
              static_cast<long long>(obs.count()), cfg.sigma,
              static_cast<unsigned long long>(cfg.seed));
  return 0;
}

struct AssimilationArtifacts {
  RunConfig cfg;
  std::unique_ptr<Model> model;
  std::unique_ptr<ObservationOperator> op;
  TimeGrid grid{0.1, 0};
  ObservationSeries obs;
  MinimizeResult result;
  Real sigma_hat_value = 0;
};

AssimilationArtifacts run_assimilation(const CommonArgs& args) {
  AssimilationArtifacts a{load(args), nullptr, nullptr};
  a.model = a.cfg.make_model();
  a.op = a.cfg.make_observation_operator();

  const Vector truth = a.cfg.make_truth_state();
  const std::vector<Real> times = a.cfg.observation_time_ladder();
  Real t_last = 0;
  for (Real t : times) t_last = std::max(t_last, t);
  a.grid = TimeGrid::covering(a.cfg.dt, t_last);
  const Trajectory truth_traj = integrate(*a.model, truth, a.grid);
  a.obs = make_synthetic(truth_traj, *a.op, times, a.cfg.sigma, a.cfg.seed);

  const Vector guess = a.cfg.make_guess_state();
  a.result = minimize(*a.model, guess, a.obs, a.grid, *a.op, a.cfg.optimizer,
                      a.cfg.free_indices(), nullptr,
                      a.cfg.profiled_likelihood
                          ? ObjectiveKind::profiled_likelihood
                          : ObjectiveKind::misfit);
  a.sigma_hat_value =
      sigma_hat(integrate(*a.model, a.result.theta_hat, a.grid), a.obs, *a.op);
  return a;
}

void write_trace_csv(const fs::path& path, const MinimizeResult& result,
                     bool param_is_b) {
  CsvWriter trace({"iter", "cost", "grad_norm", "param_estimate"});
  for (const TraceRow& row : result.trace) {
    const Real estimate =
        param_is_b ? row.param_estimate - 0.5 : row.param_estimate;
    trace.row({static_cast<Real>(row.iter), row.cost, row.grad_norm, estimate});
  }
  trace.save(path);
}

const char* reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::converged: return "converged";
    case StopReason::max_iters: return "max_iters";
    case StopReason::line_search_stalled: return "line_search_stalled";
  }
  return "unknown";
}

int cmd_assimilate(const CommonArgs& args) {
  AssimilationArtifacts a = run_assimilation(args);
  const fs::path dir = ensure_out_dir(args);
  const std::string stem = stem_for(a.cfg, "assimilate");

  if (a.cfg.model_kind == "phasefield") {
    write_snapshot(dir / (stem + "-theta_hat.grid"),
                   field_snapshot(a.cfg,
                                  a.result.theta_hat.head(a.cfg.grid.cells()),
                                  0.0));
  }
  write_trace_csv(dir / (stem + "-trace.csv"), a.result,
                  a.cfg.model_kind == "phasefield");

  nlohmann::json summary;
  summary["cost"] = a.result.final_cost;
  summary["grad_norm"] = a.result.final_grad_norm;
  summary["iters"] = a.result.iters;
  summary["reason"] = reason_name(a.result.reason);
  summary["sigma_hat"] = a.sigma_hat_value;
  if (a.cfg.per_channel_sigma) {
    const Vector per_channel = sigma_hat_per_channel(
        integrate(*a.model, a.result.theta_hat, a.grid), a.obs, *a.op);
    summary["sigma_hat_per_channel"] = std::vector<Real>(
        per_channel.data(), per_channel.data() + per_channel.size());
  }
  if (a.cfg.model_kind == "phasefield") {
    summary["b_hat"] = a.result.theta_hat(a.cfg.grid.cells());
    summary["m_hat"] = a.result.theta_hat(a.cfg.grid.cells()) - 0.5;
  } else {
    summary["theta_hat"] = std::vector<Real>(
        a.result.theta_hat.data(),
        a.result.theta_hat.data() + a.result.theta_hat.size());
  }
  write_text_atomic(dir / (stem + "-summary.json"), summary.dump(2) + "\n");
  std::printf("assimilate: %s after %d iterations, cost %.6g, sigma_hat %.6g\n",
              reason_name(a.result.reason), a.result.iters, a.result.final_cost,
              a.sigma_hat_value);
  return 0;
}

int cmd_uncertainty(const CommonArgs& args) {
  AssimilationArtifacts a = run_assimilation(args);
  const fs::path dir = ensure_out_dir(args);
  const std::string stem = stem_for(a.cfg, "uncertainty");

  std::vector<Index> components = a.cfg.components;
  if (components.empty()) {
    components.push_back(a.model->state_size() +
                         std::max<Index>(a.model->param_size() - 1, 0));
  }
  const auto results = multi_uncertainty(*a.model, a.result.theta_hat, a.obs,
                                         a.grid, *a.op, components,
                                         a.cfg.solver);

  CsvWriter csv({"component", "diag_entry", "sigma_hat", "std_dev", "valid",
                 "cr_iters", "cr_residual", "grad_norm_at_hat"});
  for (const UncertaintyResult& u : results) {
    csv.row({static_cast<Real>(u.component), u.diag_entry, u.sigma_hat,
             u.std_dev, static_cast<Real>(u.valid),
             static_cast<Real>(u.solver_iters), u.solver_residual,
             u.grad_norm_at_hat});
    std::printf("uncertainty: component %lld: diag %.6g%s std_dev %.6g\n",
                static_cast<long long>(u.component), u.diag_entry,
                u.valid ? "" : " (invalid: non-positive variance)",
                u.std_dev);
  }
  csv.save(dir / (stem + ".csv"));
  return 0;
}

int cmd_twin(const CommonArgs& args) {
  const RunConfig cfg = load(args);
  TwinConfig twin = cfg.twin();
  apply_profile(twin, parse_profile(args.profile));
  const fs::path dir = ensure_out_dir(args);
  const std::string stem = stem_for(cfg, "twin");

  if (cfg.experiment == 1) {
    const SweepResult sweep = run_experiment_1(twin);
    CsvWriter per_trial({"sweep_value", "trial", "seed", "m_hat", "sigma_hat",
                         "delta_m", "valid", "iters"});
    CsvWriter aggregated(
        {"sweep_value", "mean_m_hat", "mean_delta_m", "n_valid"});
    for (const SweepPoint& point : sweep.points) {
      for (const TrialRecord& trial : point.trials) {
        per_trial.row({point.value, static_cast<Real>(trial.trial),
                       static_cast<Real>(trial.seed), trial.m_hat,
                       trial.sigma_hat, trial.delta_m,
                       static_cast<Real>(trial.valid),
                       static_cast<Real>(trial.iters)});
      }
      aggregated.row({point.value, point.mean_m_hat, point.mean_delta_m,
                      static_cast<Real>(point.n_valid)});
    }
    per_trial.save(dir / (stem + "-trials.csv"));
    aggregated.save(dir / (stem + "-aggregate.csv"));

    nlohmann::json summary;
    summary["slope"] = sweep.fit.slope;
    summary["slope_stderr"] = sweep.fit.stderr_slope;
    summary["fit_points"] = sweep.fit.n_points;
    summary["fit_window"] = {sweep.fit_window_lo, sweep.fit_window_hi};
    summary["containment_2dm"] = sweep.containment_2dm;
    write_text_atomic(dir / (stem + "-summary.json"), summary.dump(2) + "\n");
    std::printf("twin: experiment 1 slope %.3f +- %.3f over %d points\n",
                sweep.fit.slope, sweep.fit.stderr_slope, sweep.fit.n_points);
  } else if (cfg.experiment == 2) {
    const Experiment2Record record = run_experiment_2(twin);
    write_trace_csv(dir / (stem + "-trace.csv"), record.result, true);
    write_snapshot(dir / (stem + "-phi_hat0.grid"),
                   field_snapshot(cfg, record.phi_hat0, 0.0));
    write_snapshot(dir / (stem + "-truth0.grid"),
                   field_snapshot(cfg, record.truth_field, 0.0));
    nlohmann::json summary;
    summary["m_hat"] = record.m_hat;
    summary["sigma_hat"] = record.sigma_hat;
    summary["delta_m"] = record.delta_m;
    summary["delta_m_valid"] = record.delta_m_valid;
    summary["rmse_initial_field"] = record.rmse_initial_field;
    summary["n_spots"] = record.spots.size();
    summary["critical_radius"] = record.critical_radius_used;
    int subcritical = 0;
    for (const Spot& spot : record.spots) {
      if (!spot.above_critical) ++subcritical;
    }
    summary["n_subcritical_spots"] = subcritical;
    summary["n_spurious_spots"] = record.spurious_spots.size();
    write_text_atomic(dir / (stem + "-summary.json"), summary.dump(2) + "\n");
    std::printf("twin: experiment 2 m_hat %.6f delta_m %.3g rmse0 %.4f\n",
                record.m_hat, record.delta_m, record.rmse_initial_field);
  } else {
    const Experiment3Record record = run_experiment_3(twin);
    write_trace_csv(dir / (stem + "-trace.csv"), record.result, true);
    write_snapshot(dir / (stem + "-phi_hat0.grid"),
                   field_snapshot(cfg, record.phi_hat0, 0.0));
    for (const auto& [iter, field] : record.iterate_fields) {
      char name[64];
      std::snprintf(name, sizeof(name), "%s-iter%04d.grid", stem.c_str(), iter);
      write_snapshot(dir / name, field_snapshot(cfg, field, 0.0));
    }
    nlohmann::json summary;
    summary["forward_rmse_at_tmin"] = record.forward_rmse_at_tmin;
    summary["plateau_reference_iter"] = record.plateau_reference_iter;
    summary["cost_at_reference"] = record.cost_at_reference;
    summary["cost_final"] = record.cost_final;
    summary["rmse_reference_vs_final"] = record.rmse_reference_vs_final;
    summary["critical_radius"] = record.critical_radius_used;
    summary["n_spots"] = record.spots.size();
    summary["n_spurious_spots"] = record.spurious_spots.size();
    bool spurious_subcritical = true;
    for (const Spot& spot : record.spurious_spots) {
      if (spot.above_critical) spurious_subcritical = false;
    }
    summary["spurious_spots_subcritical"] = spurious_subcritical;
    write_text_atomic(dir / (stem + "-summary.json"), summary.dump(2) + "\n");
    std::printf(
        "twin: experiment 3 forward rmse %.4f, %zu spots, plateau %.3g -> %.3g\n",
        record.forward_rmse_at_tmin, record.spots.size(),
        record.cost_at_reference, record.cost_final);
  }
  return 0;
}

int cmd_verify(const CommonArgs& args) {
  const RunConfig cfg = load(args);

  std::unique_ptr<Model> model = cfg.make_model();
  const Model* active = model.get();
  std::optional<CorruptedVjpModel> corrupted;
  if (cfg.corrupt_vjp) {
    corrupted.emplace(*model);
    active = &*corrupted;
  }
  const auto op = cfg.make_observation_operator();

  Vector probe;
  if (cfg.model_kind == "phasefield") {
    const PhaseFieldModel pf(cfg.grid, cfg.pf);
    GaussianStream rng(cfg.seed);
    Vector field(cfg.grid.cells());
    for (Index i = 0; i < field.size(); ++i) {
      field(i) = 0.5 + 0.25 * std::tanh(rng.next());
    }
    probe = pf.pack(field, 0.07);
  } else {
    probe = cfg.make_truth_state();
  }

  const VerificationReport report = run_verification(
      *active, *op, probe, cfg.observation_time_ladder(), cfg.dt, cfg.seed);
  for (const CheckResult& check : report.checks) {
    std::printf("[%s] %-24s %s\n", check.pass ? "PASS" : "FAIL",
                check.name.c_str(), check.detail.c_str());
  }
  if (!report.all_pass()) {
    std::fprintf(stderr, "verify: FAILED\n");
    return 4;
  }
  std::printf("verify: all checks passed\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adjoint-based state and parameter estimation for autonomous "
               "systems, with second-order-adjoint uncertainties"};
  app.require_subcommand(1);

  CommonArgs args;
  std::uint64_t seed_value = 0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "JSON run configuration")
        ->required();
    sub->add_option("--out", args.out_dir, "output directory");
    sub->add_option("--seed", seed_value, "override the config seed")
        ->each([&](const std::string&) { args.seed_override = seed_value; });
    sub->add_option("--profile", args.profile, "fast or paper scale")
        ->check(CLI::IsMember({"fast", "paper"}));
  };

  CLI::App* simulate = app.add_subcommand("simulate", "forward run, snapshots");
  CLI::App* make_obs = app.add_subcommand("make-obs", "synthetic observations");
  CLI::App* assimilate =
      app.add_subcommand("assimilate", "estimate initial state/parameters");
  CLI::App* uncertainty_cmd =
      app.add_subcommand("uncertainty", "inverse-Hessian diagonals");
  CLI::App* twin = app.add_subcommand("twin", "twin experiments 1-3");
  CLI::App* verify = app.add_subcommand("verify", "adjoint/solver self-checks");
  for (CLI::App* sub :
       {simulate, make_obs, assimilate, uncertainty_cmd, twin, verify}) {
    add_common(sub);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(args);
    if (make_obs->parsed()) return cmd_make_obs(args);
    if (assimilate->parsed()) return cmd_assimilate(args);
    if (uncertainty_cmd->parsed()) return cmd_uncertainty(args);
    if (twin->parsed()) return cmd_twin(args);
    if (verify->parsed()) return cmd_verify(args);
  } catch (const ConfigError& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return 2;
  } catch (const NonFiniteStateError& err) {
    std::fprintf(stderr, "numerical blow-up: %s\n", err.what());
    return 3;
  } catch (const NonFiniteAdjointError& err) {
    std::fprintf(stderr, "numerical blow-up: %s\n", err.what());
    return 3;
  } catch (const Error& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 1;
}
