#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "vda/adjoint.hpp"
#include "vda/transforms.hpp"
#include "vda/phasefield.hpp"

using namespace vda;

TEST_SUITE_BEGIN("adjoint");

namespace {

struct PfCase {
  PhaseFieldModel model;
  IdentityObservation op;
  TimeGrid grid;
  Vector theta0;
  ObservationSeries obs;

  // Synthetic data from a different random state so the residuals are O(1)
  // everywhere and component-wise relative FD comparisons stay meaningful.
  PfCase(Index nx, Index ny, Index n_steps, const std::vector<Real>& times,
         unsigned seed, Real sigma = 0.0)
      : model(PfGrid(nx, ny)),
        op(model.grid().cells(), model.size()),
        grid(0.1, n_steps),
        theta0(test::random_pf_state(model.grid(), seed)) {
    const Vector truth = test::random_pf_state(model.grid(), seed + 1000);
    const Trajectory truth_traj = integrate(model, truth, grid);
    obs = make_synthetic(truth_traj, op, times, sigma, seed + 2000);
  }
};

}  // namespace

TEST_CASE("step-level transpose identity") {
  // w . (TLM step v) == (adjoint step w) . v for the one-step maps
  // (I + dt A) and its transpose.
  const PfGrid grid(6, 5);
  const PhaseFieldModel model(grid);
  const Real dt = 0.1;
  for (unsigned seed = 300; seed < 306; ++seed) {
    const Vector theta = test::random_pf_state(grid, seed);
    const Vector v = test::random_vector(model.size(), -1.0, 1.0, seed + 1);
    const Vector w = test::random_vector(model.size(), -1.0, 1.0, seed + 2);
    const Vector step_v = v + dt * model.jvp(theta, v);
    const Vector step_w = w + dt * model.vjp(theta, w);
    CHECK(std::abs(w.dot(step_v) - step_w.dot(v)) <=
          1e-12 * v.norm() * w.norm());
  }
}

TEST_CASE("linear model jvp/vjp are an adjoint pair too") {
  std::srand(777);
  const LinearModel model(Matrix::Random(7, 7), 2);
  const Vector theta = test::random_vector(9, 0.2, 0.8, 301);
  for (unsigned seed = 302; seed < 306; ++seed) {
    const Vector v = test::random_vector(9, -1.0, 1.0, seed);
    const Vector w = test::random_vector(9, -1.0, 1.0, seed + 40);
    CHECK(std::abs(w.dot(model.jvp(theta, v)) - v.dot(model.vjp(theta, w))) <=
          1e-12 * v.norm() * w.norm());
  }
}

TEST_CASE("hvp operator rejects a multiplier series of the wrong length") {
  const PfGrid grid(4, 4);
  const PhaseFieldModel model(grid);
  const IdentityObservation op(grid.cells(), model.size());
  const TimeGrid tg(0.1, 10);
  const Vector theta0 = test::random_pf_state(grid, 307);
  const Trajectory traj = integrate(model, theta0, tg);
  const ObservationSeries obs = make_synthetic(traj, op, {0.5}, 0.0, 308);
  std::vector<Vector> short_lambda(3, Vector::Zero(model.size()));
  CHECK_THROWS_AS(HvpOperator(model, op, obs, traj, std::move(short_lambda)),
                  MissingLambdaError);
}

TEST_CASE("gradient vanishes at the optimum of a noiseless problem") {
  const PfGrid grid(8, 8);
  const PhaseFieldModel model(grid);
  const IdentityObservation op(grid.cells(), model.size());
  const TimeGrid tg(0.1, 30);
  const Vector truth = test::random_pf_state(grid, 310);
  const Trajectory traj = integrate(model, truth, tg);
  const ObservationSeries obs =
      make_synthetic(traj, op, {0.5, 1.5, 3.0}, 0.0, 311);
  const GradientResult g = gradient(model, truth, obs, tg, op);
  CHECK(g.cost <= 1e-20);
  CHECK(g.grad_theta.lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("adjoint gradient matches finite differences component-wise") {
  // 16x16, 20 steps, 3 observation times, random starting state.
  PfCase c(16, 16, 20, {0.5, 1.0, 2.0}, 320);
  const GradientResult g = gradient(c.model, c.theta0, c.obs, c.grid, c.op);

  const auto cost_of = [&](const Vector& theta) {
    const Trajectory traj = integrate(c.model, theta, c.grid);
    return cost_misfit(traj, c.obs, c.op).total;
  };
  const Vector fd = test::fd_gradient(cost_of, c.theta0, 1e-6);
  for (Index i = 0; i < c.model.size(); ++i) {
    const Real rel = std::abs(g.grad_theta(i) - fd(i)) /
                     std::max(std::abs(fd(i)), 1e-12);
    CHECK(rel < 1e-6);
  }
  // Psi-space gradient is the chain rule applied to the same vector.
  const Vector expected_psi = grad_theta_to_psi(c.theta0, g.grad_theta);
  CHECK(g.grad_psi == expected_psi);
}

TEST_CASE("gradient is exactly invariant to extending t_f past the data") {
  PfCase c(8, 6, 20, {0.5, 1.0, 2.0}, 330);
  const GradientResult base = gradient(c.model, c.theta0, c.obs, c.grid, c.op);
  const TimeGrid longer(0.1, 30);
  const GradientResult extended =
      gradient(c.model, c.theta0, c.obs, longer, c.op);
  CHECK(base.grad_theta == extended.grad_theta);
  CHECK(base.cost == extended.cost);
}

TEST_CASE("gradient with zero observations is identically zero") {
  const PfGrid grid(5, 5);
  const PhaseFieldModel model(grid);
  const IdentityObservation op(grid.cells(), model.size());
  ObservationSeries obs;
  obs.values.resize(grid.cells(), 0);
  obs.channel_sigma = Vector::Ones(grid.cells());
  const Vector theta0 = test::random_pf_state(grid, 340);
  const GradientResult g = gradient(model, theta0, obs, TimeGrid(0.1, 10), op);
  CHECK(g.cost == 0.0);
  CHECK(g.grad_theta.isZero(0.0));
}

TEST_CASE("full-cost gradient scales the misfit gradient by 1/sigma^2") {
  PfCase c(6, 5, 15, {0.5, 1.0}, 350, 0.05);
  c.obs.channel_sigma = Vector::Constant(c.obs.dim(), 0.2);
  const GradientResult misfit =
      gradient(c.model, c.theta0, c.obs, c.grid, c.op, CostKind::misfit);
  const GradientResult full =
      gradient(c.model, c.theta0, c.obs, c.grid, c.op, CostKind::full);
  CHECK((full.grad_theta - misfit.grad_theta / 0.04).lpNorm<Eigen::Infinity>() <=
        1e-10 * misfit.grad_theta.lpNorm<Eigen::Infinity>());
}

TEST_CASE("tlm sweep") {
  PfCase c(8, 8, 25, {0.5, 1.5, 2.5}, 360);
  const Trajectory around = integrate(c.model, c.theta0, c.grid);

  SUBCASE("parameter component of the tangent stays constant") {
    const Vector gamma = test::random_vector(c.model.size(), -1.0, 1.0, 361);
    const Trajectory xi = tlm_sweep(c.model, around, gamma);
    for (Index k = 0; k <= c.grid.n_steps; ++k) {
      CHECK(xi.state(k)(c.model.state_size()) == gamma(c.model.state_size()));
    }
  }
  SUBCASE("linearity holds to machine precision") {
    const Vector g1 = test::random_vector(c.model.size(), -1.0, 1.0, 362);
    const Vector g2 = test::random_vector(c.model.size(), -1.0, 1.0, 363);
    const Real a = 1.7;
    const Real b = -0.4;
    const Trajectory xa = tlm_sweep(c.model, around, g1);
    const Trajectory xb = tlm_sweep(c.model, around, g2);
    const Trajectory xc = tlm_sweep(c.model, around, a * g1 + b * g2);
    for (Index k = 0; k <= c.grid.n_steps; k += 5) {
      const Vector combo = a * xa.state(k) + b * xb.state(k);
      CHECK((xc.state(k) - combo).lpNorm<Eigen::Infinity>() <=
            1e-12 * combo.lpNorm<Eigen::Infinity>());
    }
  }
  SUBCASE("matches the nonlinear difference quotient") {
    const Vector gamma = test::random_vector(c.model.size(), -1.0, 1.0, 364);
    const Real eps = 1e-5;
    const Trajectory plus = integrate(c.model, c.theta0 + eps * gamma, c.grid);
    const Trajectory minus = integrate(c.model, c.theta0 - eps * gamma, c.grid);
    const Trajectory xi = tlm_sweep(c.model, around, gamma);
    for (Index k = 5; k <= c.grid.n_steps; k += 5) {
      const Vector fd = (plus.state(k) - minus.state(k)) / (2 * eps);
      CHECK((xi.state(k) - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
    }
  }
  SUBCASE("fixed-point linearization: phi = 1 kills the parameter coupling") {
    const PfGrid grid(5, 5);
    const PhaseFieldModel model(grid);
    const Vector fixed = model.pack(Vector::Ones(grid.cells()), 0.1);
    const Trajectory flat = integrate(model, fixed, TimeGrid(0.1, 10));
    Vector gamma = Vector::Zero(model.size());
    gamma(model.state_size()) = 1.0;  // pure parameter probe
    const Trajectory xi = tlm_sweep(model, flat, gamma);
    // theta (1 - theta) = 0 at phi = 1: the tangent field never moves.
    CHECK(xi.state(10).head(grid.cells()).isZero(0.0));
  }
}

TEST_CASE("hvp") {
  PfCase c(8, 8, 20, {0.5, 1.0, 2.0}, 370, 0.05);
  const HvpOperator op_h =
      HvpOperator::prepare(c.model, c.theta0, c.obs, c.grid, c.op);

  SUBCASE("zero probe maps to zero") {
    CHECK(op_h.apply(Vector::Zero(c.model.size())).isZero(0.0));
  }
  SUBCASE("symmetry over random probe pairs") {
    for (unsigned seed = 380; seed < 400; ++seed) {
      const Vector g1 = test::random_vector(c.model.size(), -1.0, 1.0, seed);
      const Vector g2 =
          test::random_vector(c.model.size(), -1.0, 1.0, seed + 50);
      const Real a = g1.dot(op_h.apply(g2));
      const Real b = g2.dot(op_h.apply(g1));
      CHECK(std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)));
    }
  }
  SUBCASE("matches finite differences of the adjoint gradient") {
    const Vector gamma = test::random_vector(c.model.size(), -1.0, 1.0, 371);
    const Real eps = 1e-5;
    const Vector g_plus =
        gradient(c.model, c.theta0 + eps * gamma, c.obs, c.grid, c.op)
            .grad_theta;
    const Vector g_minus =
        gradient(c.model, c.theta0 - eps * gamma, c.obs, c.grid, c.op)
            .grad_theta;
    const Vector fd = (g_plus - g_minus) / (2 * eps);
    const Vector ours = op_h.apply(gamma);
    CHECK((ours - fd).norm() / ours.norm() < 1e-5);
  }
  SUBCASE("parameter diagonal is nonnegative at a noiseless optimum") {
    const PfGrid grid(8, 8);
    const PhaseFieldModel model(grid);
    const IdentityObservation obs_op(grid.cells(), model.size());
    const TimeGrid tg(0.1, 20);
    const Vector truth = test::random_pf_state(grid, 372);
    const Trajectory traj = integrate(model, truth, tg);
    const ObservationSeries clean =
        make_synthetic(traj, obs_op, {0.5, 1.0, 2.0}, 0.0, 373);
    const HvpOperator at_opt =
        HvpOperator::prepare(model, truth, clean, tg, obs_op);
    Vector e = Vector::Zero(model.size());
    e(model.state_size()) = 1.0;
    CHECK(at_opt.apply(e)(model.state_size()) >= 0.0);
  }
}

TEST_CASE("hvp agrees between fully stored and recomputed trajectories") {
  // Same linearization point driven through the checkpointed source.
  PfCase c(6, 6, 32, {0.8, 1.6, 3.2}, 374);
  const Trajectory full = integrate(c.model, c.theta0, c.grid);
  const CheckpointedTrajectory replay(c.model, c.theta0, c.grid, 8);
  std::vector<Vector> lambda_full;
  std::vector<Vector> lambda_replay;
  const GradientResult a =
      gradient(c.model, full, c.obs, c.op, CostKind::misfit, &lambda_full);
  const GradientResult b =
      gradient(c.model, replay, c.obs, c.op, CostKind::misfit, &lambda_replay);
  CHECK(a.grad_theta == b.grad_theta);
  CHECK(a.cost == b.cost);
  for (std::size_t k = 0; k < lambda_full.size(); ++k) {
    CHECK(lambda_full[k] == lambda_replay[k]);
  }
}

TEST_SUITE_END();
