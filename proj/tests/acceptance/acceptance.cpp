// Acceptance suite: one numbered criterion per check, one PASS/FAIL line
// each, nonzero exit if anything executed fails. Criteria can be run
// individually with --criterion N.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vda/adjoint.hpp"
#include "vda/conjugate_residual.hpp"
#include "vda/integrator.hpp"
#include "vda/lbfgs.hpp"
#include "vda/observation.hpp"
#include "vda/phasefield.hpp"
#include "vda/rng.hpp"
#include "vda/spots.hpp"
#include "vda/transforms.hpp"
#include "vda/twin.hpp"
#include "vda/uncertainty.hpp"

using namespace vda;

namespace {

struct Line {
  bool pass = false;
  std::string text;
};

std::vector<Line> g_lines;
double g_last_seconds = 0;

template <typename Fn>
bool record(int criterion, const std::string& label, Fn&& body) {
  const auto start = std::chrono::steady_clock::now();
  bool pass = false;
  std::string detail;
  try {
    detail = body(pass);
  } catch (const std::exception& err) {
    pass = false;
    detail = std::string("exception: ") + err.what();
  }
  g_last_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  char buf[512];
  std::snprintf(buf, sizeof(buf), "[%s] criterion %d: %s -- %s (%.1fs)",
                pass ? "PASS" : "FAIL", criterion, label.c_str(),
                detail.c_str(), g_last_seconds);
  std::puts(buf);
  std::fflush(stdout);
  g_lines.push_back({pass, buf});
  return pass;
}

Vector random_interior_state(const PhaseFieldModel& model, unsigned seed) {
  std::mt19937 eng(seed);
  std::uniform_real_distribution<Real> dist(0.2, 0.8);
  Vector theta(model.size());
  for (Index i = 0; i < theta.size(); ++i) theta(i) = dist(eng);
  return theta;
}

// ---------------------------------------------------------------------
// 1. Adjoint gradient vs central finite differences, component-wise.
std::string criterion_gradient(bool& pass) {
  Real worst = 0;
  for (const Index edge : {Index(8), Index(16)}) {
    const PfGrid grid(edge, edge);
    const PhaseFieldModel model(grid);
    const IdentityObservation op(grid.cells(), model.size());
    const TimeGrid tg(0.1, 20);
    const Vector theta0 = random_interior_state(model, 8100 + edge);
    const Vector truth = random_interior_state(model, 8200 + edge);
    const ObservationSeries obs =
        make_synthetic(integrate(model, truth, tg), op, {0.5, 1.0, 2.0}, 0.0,
                       8300 + static_cast<unsigned>(edge));
    const GradientResult g = gradient(model, theta0, obs, tg, op);
    const Real step = 1e-6;
    for (Index i = 0; i < model.size(); ++i) {
      Vector tp = theta0;
      Vector tm = theta0;
      tp(i) += step;
      tm(i) -= step;
      const Real jp = cost_misfit(integrate(model, tp, tg), obs, op).total;
      const Real jm = cost_misfit(integrate(model, tm, tg), obs, op).total;
      const Real fd = (jp - jm) / (2 * step);
      worst = std::max(worst, std::abs(g.grad_theta(i) - fd) /
                                  std::max(std::abs(fd), Real(1e-12)));
    }
  }
  pass = worst < 1e-6;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "worst component rel err %.2e (tol 1e-6)",
                worst);
  return buf;
}

// ---------------------------------------------------------------------
// 2. Hessian-vector products: symmetry and FD cross-check on PF 8x8.
std::string criterion_hvp(bool& pass) {
  const PfGrid grid(8, 8);
  const PhaseFieldModel model(grid);
  const IdentityObservation op(grid.cells(), model.size());
  const TimeGrid tg(0.1, 20);
  const Vector theta_hat = random_interior_state(model, 8400);
  const Vector truth = random_interior_state(model, 8500);
  const ObservationSeries obs = make_synthetic(
      integrate(model, truth, tg), op, {0.5, 1.0, 2.0}, 0.05, 8600);
  const HvpOperator hvp_op = HvpOperator::prepare(model, theta_hat, obs, tg, op);

  Real worst_sym = 0;
  std::mt19937 eng(8700);
  std::uniform_real_distribution<Real> dist(-1.0, 1.0);
  const auto draw = [&] {
    Vector v(model.size());
    for (Index i = 0; i < v.size(); ++i) v(i) = dist(eng);
    return v;
  };
  for (int pair = 0; pair < 20; ++pair) {
    const Vector a = draw();
    const Vector b = draw();
    const Real ab = a.dot(hvp_op.apply(b));
    const Real ba = b.dot(hvp_op.apply(a));
    worst_sym = std::max(
        worst_sym, std::abs(ab - ba) / std::max(std::abs(ab), std::abs(ba)));
  }

  const Vector gamma = draw();
  const Real eps = 1e-5;
  const Vector gp =
      gradient(model, Vector(theta_hat + eps * gamma), obs, tg, op).grad_theta;
  const Vector gm =
      gradient(model, Vector(theta_hat - eps * gamma), obs, tg, op).grad_theta;
  const Vector fd = (gp - gm) / (2 * eps);
  const Vector ours = hvp_op.apply(gamma);
  const Real fd_err = (ours - fd).norm() / ours.norm();

  pass = worst_sym < 1e-9 && fd_err < 1e-5;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "symmetry %.2e (tol 1e-9), fd cross-check %.2e (tol 1e-5)",
                worst_sym, fd_err);
  return buf;
}

// ---------------------------------------------------------------------
// 3. Uncertainty vs the densely inverted covariance on a linear toy.
std::string criterion_uncertainty_oracle(bool& pass) {
  const Index n = 16;
  const Index k = 10;
  std::srand(8800);
  Matrix dynamics = Matrix::Random(n, n) * 0.3;
  dynamics -= Matrix::Identity(n, n) * 0.4;
  const LinearModel model(dynamics);
  const LinearObservation op(Matrix::Random(k, n) * 0.8);
  const TimeGrid tg(0.05, 24);
  const std::vector<Real> times = {0.3, 0.6, 1.2};

  std::mt19937 eng(8900);
  std::uniform_real_distribution<Real> dist(0.35, 0.65);
  Vector truth(n);
  for (Index i = 0; i < n; ++i) truth(i) = dist(eng);
  const ObservationSeries obs =
      make_synthetic(integrate(model, truth, tg), op, times, 0.02, 9000);

  LbfgsConfig opt_cfg;
  opt_cfg.grad_tol = 1e-11;
  opt_cfg.max_iters = 300;
  const MinimizeResult res =
      minimize(model, Vector::Constant(n, 0.5), obs, tg, op, opt_cfg);

  // Dense oracle: H' = sum_s M_s^T M_s, M_s = B (I + dt L)^{k_s}.
  const Matrix step = Matrix::Identity(n, n) + tg.dt * dynamics;
  Matrix hess = Matrix::Zero(n, n);
  for (Real t : times) {
    Matrix propagator = Matrix::Identity(n, n);
    for (Index j = 0; j < tg.step_of(t); ++j) propagator = step * propagator;
    const Matrix m_s = op.matrix() * propagator;
    hess += m_s.transpose() * m_s;
  }
  const Matrix dense_inverse = hess.inverse();

  Real worst = 0;
  for (Index l : {Index(0), Index(7), Index(15)}) {
    const UncertaintyResult u =
        uncertainty(model, res.theta_hat, obs, tg, op, l);
    if (!u.valid) {
      pass = false;
      return "variance unexpectedly flagged invalid";
    }
    // sigma_hat^2 r_l vs the dense covariance diagonal sigma_hat^2 (H'^-1)_ll
    const Real ours = u.sigma_hat * u.sigma_hat * u.diag_entry;
    const Real oracle = u.sigma_hat * u.sigma_hat * dense_inverse(l, l);
    worst = std::max(worst, std::abs(ours - oracle) / std::abs(oracle));
  }
  pass = worst < 1e-6;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "worst diagonal rel err %.2e (tol 1e-6)",
                worst);
  return buf;
}

// ---------------------------------------------------------------------
// 4 + invariant + 8: the desk-scale experiment-1 sweeps.
TwinConfig desk_sweep_config(SweepVariable variable) {
  TwinConfig cfg;  // 75x50 defaults
  cfg.n_trials = 5;
  cfg.base_seed = 42;
  cfg.sweep_variable = variable;
  cfg.optimizer.max_iters = 100;
  cfg.solver.max_iters = 3000;
  switch (variable) {
    case SweepVariable::t_max:
      break;  // library defaults: values {0.1, 2, 4, 8, 16}, window [2, 16]
    case SweepVariable::dt_obs:
      cfg.t_max = 12.8;
      break;
    case SweepVariable::sigma:
      cfg.t_max = 6.4;
      break;
  }
  return cfg;
}

std::optional<SweepResult> g_tmax_sweep;

const SweepResult& tmax_sweep() {
  if (!g_tmax_sweep) {
    g_tmax_sweep = run_experiment_1(desk_sweep_config(SweepVariable::t_max));
  }
  return *g_tmax_sweep;
}

std::string criterion_scaling_laws(bool& pass) {
  const SweepResult by_sigma =
      run_experiment_1(desk_sweep_config(SweepVariable::sigma));
  const SweepResult by_dt =
      run_experiment_1(desk_sweep_config(SweepVariable::dt_obs));
  const SweepResult& by_tmax = tmax_sweep();

  const bool sigma_ok = std::abs(by_sigma.fit.slope - 1.0) <= 0.1;
  const bool dt_ok = std::abs(by_dt.fit.slope - 0.5) <= 0.1;
  const bool tmax_ok = std::abs(by_tmax.fit.slope - (-1.5)) <= 0.3;
  pass = sigma_ok && dt_ok && tmax_ok;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "slopes: sigma %.3f (1.0+-0.1), dT %.3f (0.5+-0.1), "
                "T_max %.3f (-1.5+-0.3)",
                by_sigma.fit.slope, by_dt.fit.slope, by_tmax.fit.slope);
  return buf;
}

std::string invariant_containment(bool& pass) {
  const SweepResult& sweep = tmax_sweep();
  pass = sweep.containment_2dm >= 0.8;
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "fraction of valid trials with m_true in m_hat +- 2dm: %.2f "
                "(floor 0.8)",
                sweep.containment_2dm);
  return buf;
}

// ---------------------------------------------------------------------
// 5. Simultaneous estimation, small noise.
std::string criterion_parameter_recovery(bool& pass) {
  TwinConfig cfg;
  cfg.t_min = 5.0;
  cfg.t_max = 30.0;
  cfg.dt_obs = 0.1;
  cfg.sigma = 1e-4;
  cfg.mode = EstimateMode::simultaneous;
  cfg.m_guess = -0.2;
  cfg.phi_guess = 0.2;
  cfg.base_seed = 7777;
  cfg.optimizer.max_iters = 2500;
  cfg.optimizer.memory = 30;
  cfg.solver.max_iters = 3000;
  const Experiment2Record record = run_experiment_2(cfg);

  const Real err = std::abs(record.m_hat - cfg.m_true);
  const bool recovered = err < 1e-3;
  const bool contained =
      record.delta_m_valid && err <= 2 * record.delta_m;
  pass = recovered && contained;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "|m_hat - 0.1| = %.2e (tol 1e-3)%s; m_true %s m_hat +- 2dm "
                "(2dm = %.2e)",
                err, recovered ? "" : " MISS",
                contained ? "inside" : "OUTSIDE", 2 * record.delta_m);
  return buf;
}

// ---------------------------------------------------------------------
// 6. Spot-pattern phenomenology, state-only estimation.
std::string criterion_spot_pattern(bool& pass) {
  TwinConfig cfg;
  cfg.t_min = 8.0;
  cfg.t_max = 30.0;
  cfg.dt_obs = 0.1;
  cfg.sigma = 0.3;
  cfg.mode = EstimateMode::state_only;
  cfg.phi_guess = 0.2;
  cfg.base_seed = 2026;
  cfg.optimizer.max_iters = 180;
  cfg.optimizer.grad_tol = 1e-12;
  cfg.snapshot_iterations = {31};
  const Experiment3Record record = run_experiment_3(cfg);

  const bool forward_ok = record.forward_rmse_at_tmin < 0.02;
  bool spots_ok = true;
  Real worst_radius = 0;
  for (const Spot& spot : record.spurious_spots) {
    worst_radius = std::max(worst_radius, spot.radius);
    if (spot.above_critical) spots_ok = false;
  }
  const Real plateau =
      (record.cost_at_reference - record.cost_final) / record.cost_final;
  const bool plateau_ok =
      plateau < 0.01 && record.rmse_reference_vs_final > 0.05;
  pass = forward_ok && spots_ok && plateau_ok;
  char buf[320];
  std::snprintf(
      buf, sizeof(buf),
      "(a) fwd rmse %.4f (tol 0.02); (b) %zu spurious spots, max radius "
      "%.1f vs rc %.2f; (c) plateau %.4f%% (tol 1%%) with field drift %.3f "
      "(floor 0.05)",
      record.forward_rmse_at_tmin, record.spurious_spots.size(), worst_radius,
      record.critical_radius_used, 100 * plateau,
      record.rmse_reference_vs_final);
  return buf;
}

// ---------------------------------------------------------------------
// 7. Critical radius value and inverse proportionality.
std::string criterion_critical_radius(bool& pass) {
  const Real rc01 = critical_radius(0.1);
  const Real rc005 = critical_radius(0.05);
  const Real ratio = rc005 / rc01;
  const bool value_ok = std::abs(rc01 - 7.3) <= 0.5;
  const bool ratio_ok = std::abs(ratio - 2.0) <= 0.3;
  pass = value_ok && ratio_ok;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "rc(0.1) = %.2f eps (7.3 +- 0.5); rc(0.05)/rc(0.1) = %.2f "
                "(2.0 +- 0.3)",
                rc01, ratio);
  return buf;
}

// ---------------------------------------------------------------------
// 8. Data-starved variance goes invalid, flagged, no crash.
std::string criterion_failure_mode(bool& pass) {
  const SweepResult& sweep = tmax_sweep();
  const SweepPoint& starved = sweep.points.front();  // smallest sweep value
  bool all_flagged = true;
  bool any_crash = false;
  for (const TrialRecord& trial : starved.trials) {
    if (!trial.error.empty()) any_crash = true;
    if (trial.valid) all_flagged = false;
  }
  pass = !any_crash && all_flagged && starved.n_valid == 0;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "T_max = %.1f tau: %zu/%zu trials flagged invalid, %s",
                starved.value, starved.trials.size() - starved.n_valid,
                starved.trials.size(),
                any_crash ? "with crashes" : "no crashes");
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = std::atoi(argv[i + 1]);
    }
  }
  const auto want = [&](int criterion) { return only == 0 || only == criterion; };

  bool all_pass = true;
  const auto run = [&](int criterion, const std::string& label, auto&& body) {
    if (!want(criterion)) return;
    all_pass &= record(criterion, label, body);
  };

  run(1, "adjoint gradient matches finite differences", criterion_gradient);
  run(2, "Hessian-vector product symmetry and FD cross-check", criterion_hvp);
  run(3, "uncertainty matches the dense covariance oracle",
      criterion_uncertainty_oracle);
  run(4, "delta_m scaling laws at desk scale", criterion_scaling_laws);
  if (want(4)) {
    // Harness invariant, evaluated on the same sweep as criterion 4.
    bool pass = false;
    std::string detail = invariant_containment(pass);
    char buf[512];
    std::snprintf(buf, sizeof(buf), "[%s] invariant: truth containment -- %s",
                  pass ? "PASS" : "FAIL", detail.c_str());
    std::puts(buf);
    std::fflush(stdout);
    all_pass &= pass;
  }
  run(5, "simultaneous estimation recovers the parameter",
      criterion_parameter_recovery);
  if (want(5)) {
    // Context for criterion 5: the same experiment at the paper's
    // large-noise setting, where the statistical spread dominates the
    // degenerate-valley bias and the 2 delta_m band does cover the error.
    TwinConfig cfg;
    cfg.t_min = 5.0;
    cfg.t_max = 30.0;
    cfg.dt_obs = 0.1;
    cfg.sigma = 0.3;
    cfg.mode = EstimateMode::simultaneous;
    cfg.m_guess = -0.2;
    cfg.phi_guess = 0.2;
    cfg.base_seed = 7777;
    cfg.optimizer.max_iters = 600;
    cfg.optimizer.memory = 30;
    cfg.solver.max_iters = 3000;
    const Experiment2Record record = run_experiment_2(cfg);
    const Real err = std::abs(record.m_hat - cfg.m_true);
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "[INFO] exp-II large-noise (sigma = 0.3): |m_hat - 0.1| = "
                  "%.2e, 2dm = %.2e, m_true %s the band",
                  err, 2 * record.delta_m,
                  err <= 2 * record.delta_m ? "inside" : "outside");
    std::puts(buf);
    std::fflush(stdout);
  }
  run(6, "state-only estimation shows the sub-critical spot pattern",
      criterion_spot_pattern);
  run(7, "critical radius and inverse proportionality",
      criterion_critical_radius);
  run(8, "data-starved variance is flagged invalid, not fatal",
      criterion_failure_mode);

  return all_pass ? 0 : 1;
}
