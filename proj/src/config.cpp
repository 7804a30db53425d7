#include "vda/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vda/errors.hpp"
#include "vda/io.hpp"

namespace vda {

namespace {

using nlohmann::json;

void require_keys(const json& section, const std::string& name,
                  const std::set<std::string>& allowed) {
  if (!section.is_object()) {
    throw ConfigError("config: section '" + name + "' must be an object");
  }
  for (const auto& item : section.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("config: unknown key '" + item.key() +
                        "' in section '" + name + "'");
    }
  }
}

template <typename T>
T get_or(const json& section, const std::string& key, T fallback) {
  if (!section.contains(key)) return fallback;
  try {
    return section.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad value for '" + key + "'");
  }
}

Matrix parse_matrix(const json& rows, const std::string& key) {
  if (!rows.is_array() || rows.empty()) {
    throw ConfigError("config: '" + key + "' must be a non-empty array");
  }
  const auto n_rows = static_cast<Index>(rows.size());
  const auto n_cols = static_cast<Index>(rows.at(0).size());
  Matrix out(n_rows, n_cols);
  for (Index i = 0; i < n_rows; ++i) {
    const json& row = rows.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Index>(row.size()) != n_cols) {
      throw ConfigError("config: ragged matrix in '" + key + "'");
    }
    for (Index j = 0; j < n_cols; ++j) {
      out(i, j) = row.at(static_cast<std::size_t>(j)).get<Real>();
    }
  }
  return out;
}

EstimateMode parse_mode(const std::string& text) {
  if (text == "parameter-only") return EstimateMode::parameter_only;
  if (text == "simultaneous") return EstimateMode::simultaneous;
  if (text == "state-only") return EstimateMode::state_only;
  throw ConfigError("config: unknown estimate_mode '" + text + "'");
}

SweepVariable parse_sweep_variable(const std::string& text) {
  if (text == "t_max") return SweepVariable::t_max;
  if (text == "dt_obs") return SweepVariable::dt_obs;
  if (text == "sigma") return SweepVariable::sigma;
  throw ConfigError("config: unknown sweep variable '" + text + "'");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& err) {
    throw ConfigError(std::string("config: parse error: ") + err.what());
  }
  require_keys(doc, "(top level)",
               {"model", "grid", "observation", "optimizer", "uncertainty",
                "harness", "verify"});

  RunConfig cfg;
  cfg.content_hash = fnv1a64(text.data(), text.size());

  if (doc.contains("model")) {
    const json& m = doc["model"];
    require_keys(m, "model",
                 {"kind", "tau", "eps", "dynamics", "observation_matrix",
                  "n_param"});
    cfg.model_kind = get_or<std::string>(m, "kind", "phasefield");
    if (cfg.model_kind != "phasefield" && cfg.model_kind != "linear") {
      throw ConfigError("config: model.kind must be phasefield or linear");
    }
    cfg.pf.tau = get_or<Real>(m, "tau", 1.0);
    cfg.pf.eps = get_or<Real>(m, "eps", 1.0);
    if (m.contains("dynamics")) {
      cfg.linear_dynamics = parse_matrix(m["dynamics"], "model.dynamics");
    }
    if (m.contains("observation_matrix")) {
      cfg.observation_matrix =
          parse_matrix(m["observation_matrix"], "model.observation_matrix");
    }
    cfg.linear_n_param = get_or<Index>(m, "n_param", 0);
  }

  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    require_keys(g, "grid", {"nx", "ny", "spacing", "dt"});
    const Index nx = get_or<Index>(g, "nx", 75);
    const Index ny = get_or<Index>(g, "ny", 50);
    const Real spacing = get_or<Real>(g, "spacing", 1.0);
    cfg.grid = PfGrid(nx, ny, spacing);
    cfg.dt = get_or<Real>(g, "dt", 0.1);
    if (!(cfg.dt > 0)) throw ConfigError("config: grid.dt must be positive");
  }

  if (doc.contains("observation")) {
    const json& o = doc["observation"];
    require_keys(o, "observation",
                 {"t_min", "t_max", "dt_obs", "sigma", "sigma_mode", "times"});
    cfg.t_min = get_or<Real>(o, "t_min", 0.1);
    cfg.t_max = get_or<Real>(o, "t_max", 16.0);
    cfg.dt_obs = get_or<Real>(o, "dt_obs", 0.1);
    cfg.sigma = get_or<Real>(o, "sigma", 0.01);
    if (cfg.sigma < 0) throw ConfigError("config: observation.sigma must be >= 0");
    const std::string mode = get_or<std::string>(o, "sigma_mode", "shared");
    if (mode != "shared" && mode != "per-channel") {
      throw ConfigError("config: sigma_mode must be shared or per-channel");
    }
    cfg.per_channel_sigma = mode == "per-channel";
    cfg.explicit_times = get_or<std::vector<Real>>(o, "times", {});
  }

  if (doc.contains("optimizer")) {
    const json& o = doc["optimizer"];
    require_keys(o, "optimizer",
                 {"memory", "grad_tol", "tol_mode", "max_iters", "armijo_c1",
                  "backtrack_factor", "max_backtracks", "objective"});
    cfg.optimizer.memory = get_or<int>(o, "memory", 10);
    cfg.optimizer.grad_tol = get_or<Real>(o, "grad_tol", 1e-8);
    const std::string tol_mode = get_or<std::string>(o, "tol_mode", "relative");
    if (tol_mode != "relative" && tol_mode != "absolute") {
      throw ConfigError("config: tol_mode must be relative or absolute");
    }
    cfg.optimizer.relative_tol = tol_mode == "relative";
    cfg.optimizer.max_iters = get_or<int>(o, "max_iters", 1000);
    cfg.optimizer.armijo_c1 = get_or<Real>(o, "armijo_c1", 1e-4);
    cfg.optimizer.backtrack_factor = get_or<Real>(o, "backtrack_factor", 0.5);
    cfg.optimizer.max_backtracks = get_or<int>(o, "max_backtracks", 50);
    const std::string objective = get_or<std::string>(o, "objective", "misfit");
    if (objective != "misfit" && objective != "profiled-likelihood") {
      throw ConfigError(
          "config: optimizer.objective must be misfit or profiled-likelihood");
    }
    cfg.profiled_likelihood = objective == "profiled-likelihood";
    if (!(cfg.optimizer.armijo_c1 > 0 && cfg.optimizer.armijo_c1 < 1)) {
      throw ConfigError("config: armijo_c1 must lie in (0, 1)");
    }
    if (!(cfg.optimizer.backtrack_factor > 0 &&
          cfg.optimizer.backtrack_factor < 1)) {
      throw ConfigError("config: backtrack_factor must lie in (0, 1)");
    }
  }

  if (doc.contains("uncertainty")) {
    const json& u = doc["uncertainty"];
    require_keys(u, "uncertainty",
                 {"rel_tol", "max_iters", "max_iters_ceiling", "components"});
    cfg.solver.rel_tol = get_or<Real>(u, "rel_tol", 1e-8);
    if (!(cfg.solver.rel_tol > 0)) {
      throw ConfigError("config: uncertainty.rel_tol must be positive");
    }
    cfg.solver.max_iters = get_or<Index>(u, "max_iters", -1);
    cfg.solver.max_iters_ceiling = get_or<Index>(u, "max_iters_ceiling", 5000);
    cfg.components = get_or<std::vector<Index>>(u, "components", {});
  }

  if (doc.contains("harness")) {
    const json& h = doc["harness"];
    require_keys(h, "harness",
                 {"experiment", "estimate_mode", "m_true", "m_guess",
                  "phi_guess", "truth_blobs", "blob_edge_width", "n_trials",
                  "seed", "sweep", "fit_window", "snapshot_times",
                  "snapshot_iterations", "truth_state", "theta_guess"});
    cfg.experiment = get_or<int>(h, "experiment", 1);
    if (cfg.experiment < 1 || cfg.experiment > 3) {
      throw ConfigError("config: harness.experiment must be 1, 2 or 3");
    }
    const std::string default_mode = cfg.experiment == 1 ? "parameter-only"
                                     : cfg.experiment == 2 ? "simultaneous"
                                                           : "state-only";
    cfg.estimate_mode =
        parse_mode(get_or<std::string>(h, "estimate_mode", default_mode));
    cfg.m_true = get_or<Real>(h, "m_true", 0.1);
    cfg.m_guess = get_or<Real>(h, "m_guess", -0.1);
    cfg.phi_guess = get_or<Real>(h, "phi_guess", 0.2);
    if (h.contains("truth_blobs")) {
      for (const json& b : h["truth_blobs"]) {
        require_keys(b, "harness.truth_blobs[]", {"cx", "cy", "radius"});
        cfg.truth_blobs.push_back({b.at("cx").get<Real>(),
                                   b.at("cy").get<Real>(),
                                   b.at("radius").get<Real>()});
      }
    }
    cfg.blob_edge_width = get_or<Real>(h, "blob_edge_width", 2.0);
    cfg.n_trials = get_or<int>(h, "n_trials", 20);
    if (cfg.n_trials < 1) throw ConfigError("config: n_trials must be >= 1");
    cfg.seed = get_or<std::uint64_t>(h, "seed", 1);
    if (h.contains("sweep")) {
      const json& s = h["sweep"];
      require_keys(s, "harness.sweep", {"variable", "values"});
      cfg.sweep_variable =
          parse_sweep_variable(get_or<std::string>(s, "variable", "t_max"));
      cfg.sweep_values = get_or<std::vector<Real>>(s, "values", {});
    }
    if (h.contains("fit_window")) {
      const auto window = h["fit_window"].get<std::vector<Real>>();
      if (window.size() != 2) {
        throw ConfigError("config: fit_window must be [lo, hi]");
      }
      cfg.fit_window_lo = window[0];
      cfg.fit_window_hi = window[1];
    }
    cfg.snapshot_times = get_or<std::vector<Real>>(h, "snapshot_times", {});
    cfg.snapshot_iterations =
        get_or<std::vector<int>>(h, "snapshot_iterations", {});
    cfg.truth_state = get_or<std::vector<Real>>(h, "truth_state", {});
    cfg.theta_guess = get_or<std::vector<Real>>(h, "theta_guess", {});
  }

  if (doc.contains("verify")) {
    const json& v = doc["verify"];
    require_keys(v, "verify", {"corrupt_vjp"});
    cfg.corrupt_vjp = get_or<bool>(v, "corrupt_vjp", false);
  }

  if (!(cfg.t_min > 0) || cfg.t_min > cfg.t_max) {
    throw ConfigError("config: need 0 < t_min <= t_max");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

TwinConfig RunConfig::twin() const {
  TwinConfig t;
  t.grid = grid;
  t.pf = pf;
  t.dt = dt;
  t.m_true = m_true;
  t.truth_blobs = truth_blobs;
  t.blob_edge_width = blob_edge_width;
  t.t_min = t_min;
  t.t_max = t_max;
  t.dt_obs = dt_obs;
  t.sigma = sigma;
  t.mode = estimate_mode;
  t.m_guess = m_guess;
  t.phi_guess = phi_guess;
  t.n_trials = n_trials;
  t.base_seed = seed;
  t.sweep_variable = sweep_variable;
  t.sweep_values = sweep_values;
  t.fit_window_lo = fit_window_lo;
  t.fit_window_hi = fit_window_hi;
  t.optimizer = optimizer;
  t.solver = solver;
  t.snapshot_iterations = snapshot_iterations;
  return t;
}

std::unique_ptr<Model> RunConfig::make_model() const {
  if (model_kind == "phasefield") {
    return std::make_unique<PhaseFieldModel>(grid, pf);
  }
  if (linear_dynamics.size() == 0) {
    throw ConfigError("config: linear model needs model.dynamics");
  }
  return std::make_unique<LinearModel>(linear_dynamics, linear_n_param);
}

std::unique_ptr<ObservationOperator> RunConfig::make_observation_operator()
    const {
  if (model_kind == "phasefield") {
    return std::make_unique<IdentityObservation>(grid.cells(),
                                                 grid.cells() + 1);
  }
  const Index n = linear_dynamics.rows() + linear_n_param;
  if (observation_matrix.size() == 0) {
    return std::make_unique<IdentityObservation>(n, n);
  }
  if (observation_matrix.cols() != n) {
    throw ConfigError("config: observation_matrix column count must match N");
  }
  return std::make_unique<LinearObservation>(observation_matrix);
}

std::vector<Real> RunConfig::observation_time_ladder() const {
  if (!explicit_times.empty()) return explicit_times;
  return observation_times(t_min, t_max, dt_obs);
}

Vector RunConfig::make_truth_state() const {
  if (model_kind == "phasefield") {
    const PhaseFieldModel model(grid, pf);
    const Vector field = make_truth_field(
        grid, truth_blobs.empty() ? default_truth_blobs(grid) : truth_blobs,
        blob_edge_width);
    return model.pack(field, m_true);
  }
  if (truth_state.empty()) {
    throw ConfigError("config: linear model needs harness.truth_state");
  }
  return Eigen::Map<const Vector>(truth_state.data(),
                                  static_cast<Index>(truth_state.size()));
}

Vector RunConfig::make_guess_state() const {
  if (model_kind == "phasefield") {
    const PhaseFieldModel model(grid, pf);
    Vector guess(model.size());
    switch (estimate_mode) {
      case EstimateMode::parameter_only:
        guess = make_truth_state();
        break;
      case EstimateMode::simultaneous:
      case EstimateMode::state_only:
        guess.head(grid.cells()).setConstant(phi_guess);
        break;
    }
    guess(grid.cells()) = (estimate_mode == EstimateMode::state_only
                               ? m_true
                               : m_guess) +
                          0.5;
    return guess;
  }
  if (theta_guess.empty()) {
    throw ConfigError("config: linear model needs harness.theta_guess");
  }
  return Eigen::Map<const Vector>(theta_guess.data(),
                                  static_cast<Index>(theta_guess.size()));
}

std::vector<Index> RunConfig::free_indices() const {
  if (model_kind != "phasefield") return {};
  std::vector<Index> free;
  switch (estimate_mode) {
    case EstimateMode::parameter_only:
      free.push_back(grid.cells());
      break;
    case EstimateMode::state_only:
      free.resize(static_cast<std::size_t>(grid.cells()));
      for (Index i = 0; i < grid.cells(); ++i) {
        free[static_cast<std::size_t>(i)] = i;
      }
      break;
    case EstimateMode::simultaneous:
      break;
  }
  return free;
}

}  // namespace vda
