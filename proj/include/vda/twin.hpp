#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vda/conjugate_residual.hpp"
#include "vda/lbfgs.hpp"
#include "vda/phasefield.hpp"
#include "vda/spots.hpp"
#include "vda/types.hpp"

namespace vda {

/// Which block of Theta the optimizer moves; the rest stays at its
/// configured value.
enum class EstimateMode { parameter_only, simultaneous, state_only };

/// Sweep variable of the parameter-estimation experiment.
enum class SweepVariable { t_max, dt_obs, sigma };

struct BlobSpec {
  Real cx = 0;
  Real cy = 0;
  Real radius = 0;
};

/// Scenario description shared by the twin-experiment drivers. Defaults
/// are the desk-scale scenario; Profile::paper rescales to the full-size
/// setup (300x200, twenty trials).
struct TwinConfig {
  PfGrid grid{75, 50, 1.0};
  PfParams pf;
  Real dt = 0.1;

  Real m_true = 0.1;
  std::vector<BlobSpec> truth_blobs;  // empty = default layout for the grid
  Real blob_edge_width = 2.0;

  Real t_min = 0.1;
  Real t_max = 16.0;
  Real dt_obs = 0.1;
  Real sigma = 0.01;

  EstimateMode mode = EstimateMode::parameter_only;
  Real m_guess = -0.1;
  Real phi_guess = 0.2;

  int n_trials = 20;
  std::uint64_t base_seed = 1;

  SweepVariable sweep_variable = SweepVariable::t_max;
  std::vector<Real> sweep_values;  // empty = per-variable defaults
  Real fit_window_lo = 0;          // 0 = whole sweep
  Real fit_window_hi = 0;

  LbfgsConfig optimizer;
  CrConfig solver;

  /// Iterations of interest for state-estimation snapshots (experiment 3).
  std::vector<int> snapshot_iterations;
};

enum class Profile { fast, paper };

/// fast: trials capped at five (CI-sized). paper: 300x200 grid, twenty
/// trials, full-length sweeps -- overnight territory.
void apply_profile(TwinConfig& cfg, Profile profile);

/// Desk-scale truth: three well-separated circular blobs with smooth
/// edges, scaled to the grid.
std::vector<BlobSpec> default_truth_blobs(const PfGrid& grid);

/// Union (pointwise max) of tanh-edged blobs.
Vector make_truth_field(const PfGrid& grid, const std::vector<BlobSpec>& blobs,
                        Real edge_width);

/// Default sweep values per variable at desk scale. The smallest t_max
/// value sits in the data-starved regime where the variance estimate goes
/// invalid; fit windows skip it.
std::vector<Real> default_sweep_values(SweepVariable variable);
std::pair<Real, Real> default_fit_window(SweepVariable variable);

struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  Real m_hat = 0;
  Real sigma_hat = 0;
  Real delta_m = 0;    // NaN when invalid
  bool valid = false;  // positive-variance flag
  int iters = 0;
  Real grad_norm = 0;
  std::string error;   // nonempty when the trial failed outright
};

struct SweepPoint {
  Real value = 0;
  std::vector<TrialRecord> trials;
  Real mean_m_hat = 0;
  Real mean_delta_m = 0;  // over valid trials only
  int n_valid = 0;
};

struct SlopeFit {
  Real slope = 0;
  Real stderr_slope = 0;
  Real intercept = 0;
  int n_points = 0;
};

struct SweepResult {
  SweepVariable variable = SweepVariable::t_max;
  std::vector<SweepPoint> points;
  SlopeFit fit;           // log-log fit of mean delta_m over the window
  Real fit_window_lo = 0;
  Real fit_window_hi = 0;
  /// Fraction of valid trials whose 2 delta_m band contains m_true.
  Real containment_2dm = 0;
};

/// Parameter estimation conditional on the true initial field: for each
/// sweep value and trial, synthesize data, optimize b alone, and extract
/// delta_m from the inverse Hessian diagonal. Per-trial failures are
/// recorded, not fatal; invalid variances are excluded from the fit.
SweepResult run_experiment_1(const TwinConfig& cfg);

/// Ordinary least squares on (log x, log y).
SlopeFit fit_loglog(const std::vector<Real>& x, const std::vector<Real>& y);

struct Experiment2Record {
  MinimizeResult result;
  Real m_hat = 0;
  Real sigma_hat = 0;
  Real delta_m = 0;
  bool delta_m_valid = false;
  Real rmse_initial_field = 0;  // phi_hat(0) vs truth(0)
  std::vector<Spot> spots;      // components of phi_hat(0) > 1/2
  /// Components with no overlap with the truth mask: reconstruction
  /// artifacts. A converged estimate cannot hold an above-critical one
  /// (it would grow into the observation window and spoil the fit).
  std::vector<Spot> spurious_spots;
  Real critical_radius_used = 0;
  Vector truth_field;
  Vector phi_hat0;
};

/// Simultaneous estimation of b and the initial field from uniform
/// guesses.
Experiment2Record run_experiment_2(const TwinConfig& cfg);

struct Experiment3Record {
  MinimizeResult result;
  std::vector<std::pair<int, Vector>> iterate_fields;  // requested snapshots
  Vector phi_hat0;
  Vector truth_field;
  /// Fields integrated from truth and from the estimate, both at t_min.
  Real forward_rmse_at_tmin = 0;
  /// J' at the reference iteration (~30 before the last) and at the end,
  /// with the field RMSE between those two iterates.
  int plateau_reference_iter = 0;
  Real cost_at_reference = 0;
  Real cost_final = 0;
  Real rmse_reference_vs_final = 0;
  std::vector<Spot> spots;
  std::vector<Spot> spurious_spots;  // see Experiment2Record
  Real critical_radius_used = 0;
};

/// Initial-state estimation with the parameter frozen at its true value;
/// the plateau and the sub-critical spot texture of the estimate are the
/// quantities of interest.
Experiment3Record run_experiment_3(const TwinConfig& cfg);

}  // namespace vda
