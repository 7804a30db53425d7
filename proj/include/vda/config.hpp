#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vda/model.hpp"
#include "vda/observation.hpp"
#include "vda/twin.hpp"
#include "vda/types.hpp"

namespace vda {

/// Parsed and validated run configuration. The on-disk form is JSON with
/// six sections (model, grid, observation, optimizer, uncertainty,
/// harness) plus an optional verify section; unknown keys anywhere are
/// rejected. Numeric defaults follow the reference experiment setup.
struct RunConfig {
  // model
  std::string model_kind = "phasefield";
  PfParams pf;
  Matrix linear_dynamics;      // linear kind only
  Matrix observation_matrix;   // linear kind only; empty = identity
  Index linear_n_param = 0;

  // grid
  PfGrid grid{75, 50, 1.0};
  Real dt = 0.1;

  // observation
  Real t_min = 0.1;
  Real t_max = 16.0;
  Real dt_obs = 0.1;
  Real sigma = 0.01;
  bool per_channel_sigma = false;
  std::vector<Real> explicit_times;  // overrides the t_min..t_max ladder

  // optimizer
  LbfgsConfig optimizer;
  bool profiled_likelihood = false;

  // uncertainty
  CrConfig solver;
  std::vector<Index> components;  // empty = parameter component

  // harness
  int experiment = 1;
  EstimateMode estimate_mode = EstimateMode::parameter_only;
  Real m_true = 0.1;
  Real m_guess = -0.1;
  Real phi_guess = 0.2;
  std::vector<BlobSpec> truth_blobs;
  Real blob_edge_width = 2.0;
  int n_trials = 20;
  std::uint64_t seed = 1;
  SweepVariable sweep_variable = SweepVariable::t_max;
  std::vector<Real> sweep_values;
  Real fit_window_lo = 0;
  Real fit_window_hi = 0;
  std::vector<Real> snapshot_times;
  std::vector<int> snapshot_iterations;
  std::vector<Real> truth_state;  // linear kind
  std::vector<Real> theta_guess;  // linear kind

  // verify (test hook)
  bool corrupt_vjp = false;

  /// FNV-1a of the raw config bytes; output names derive from it.
  std::uint64_t content_hash = 0;

  TwinConfig twin() const;
  std::unique_ptr<Model> make_model() const;
  std::unique_ptr<ObservationOperator> make_observation_operator() const;
  std::vector<Real> observation_time_ladder() const;

  /// Truth and guess states for the configured model (phase-field builds
  /// them from blobs and m; linear takes the explicit vectors).
  Vector make_truth_state() const;
  Vector make_guess_state() const;
  std::vector<Index> free_indices() const;
};

/// Throws ConfigError on parse failures, schema violations and unknown
/// keys.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text);

}  // namespace vda
