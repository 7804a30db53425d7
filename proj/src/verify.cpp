#include "vda/verify.hpp"

#include <cmath>
#include <sstream>

#include "vda/adjoint.hpp"
#include "vda/conjugate_residual.hpp"
#include "vda/integrator.hpp"
#include "vda/rng.hpp"

namespace vda {

namespace {

std::string describe(Real worst, Real tol) {
  std::ostringstream os;
  os << "worst " << worst << " vs tol " << tol;
  return os.str();
}

CheckResult make_check(const std::string& name, Real worst, Real tol) {
  CheckResult c;
  c.name = name;
  c.worst_error = worst;
  c.tolerance = tol;
  c.pass = worst <= tol;
  c.detail = describe(worst, tol);
  return c;
}

}  // namespace

VerificationReport run_verification(const Model& model,
                                    const ObservationOperator& op,
                                    const Vector& theta_probe,
                                    const std::vector<Real>& times, Real dt,
                                    std::uint64_t seed) {
  VerificationReport report;
  const Index n = model.size();
  GaussianStream rng(seed);

  {  // jvp/vjp adjoint pairing on random probes
    Real worst = 0;
    for (int rep = 0; rep < 10; ++rep) {
      const Vector v = rng.draw(n);
      const Vector w = rng.draw(n);
      const Real lhs = w.dot(model.jvp(theta_probe, v));
      const Real rhs = v.dot(model.vjp(theta_probe, w));
      worst = std::max(worst, std::abs(lhs - rhs) / (v.norm() * w.norm()));
    }
    report.checks.push_back(make_check("adjoint-pair", worst, 1e-10));
  }

  {  // one-step transpose identity for the Euler map
    Real worst = 0;
    for (int rep = 0; rep < 10; ++rep) {
      const Vector v = rng.draw(n);
      const Vector w = rng.draw(n);
      const Vector fv = v + dt * model.jvp(theta_probe, v);
      const Vector bw = w + dt * model.vjp(theta_probe, w);
      worst = std::max(worst,
                       std::abs(w.dot(fv) - bw.dot(v)) / (v.norm() * w.norm()));
    }
    report.checks.push_back(make_check("step-transpose", worst, 1e-12));
  }

  // Shared twin setup for the sweep-level checks.
  Real t_last = 0;
  for (Real t : times) t_last = std::max(t_last, t);
  const TimeGrid grid = TimeGrid::covering(dt, t_last);
  const Trajectory probe_traj = integrate(model, theta_probe, grid);
  Vector truth = theta_probe;
  for (Index i = 0; i < n; ++i) {
    truth(i) = std::min(0.9, std::max(0.1, truth(i) + 0.05));
  }
  const Trajectory truth_traj = integrate(model, truth, grid);
  ObservationSeries obs;
  if (times.empty()) {
    obs.values.resize(op.obs_dim(), 0);
    obs.channel_sigma = Vector::Ones(op.obs_dim());
  } else {
    obs = make_synthetic(truth_traj, op, times, 0.02, seed + 1);
  }

  {  // adjoint gradient vs central finite differences
    const GradientResult g = gradient(model, probe_traj, obs, op);
    Real worst = 0;
    if (times.empty()) {
      worst = g.grad_theta.lpNorm<Eigen::Infinity>();
      report.checks.push_back(make_check("zero-observation-gradient", worst, 0));
    } else {
      const Real step = 1e-6;
      for (Index i = 0; i < n; ++i) {
        Vector tp = theta_probe;
        Vector tm = theta_probe;
        tp(i) += step;
        tm(i) -= step;
        const Real jp = cost_misfit(integrate(model, tp, grid), obs, op).total;
        const Real jm = cost_misfit(integrate(model, tm, grid), obs, op).total;
        const Real fd = (jp - jm) / (2 * step);
        worst = std::max(worst, std::abs(g.grad_theta(i) - fd) /
                                    std::max(std::abs(fd), Real(1e-12)));
      }
      report.checks.push_back(make_check("gradient-vs-fd", worst, 1e-6));
    }
  }

  if (!times.empty()) {
    const HvpOperator hvp_op =
        HvpOperator::prepare(model, theta_probe, obs, grid, op);

    {  // Hessian symmetry over random pairs
      Real worst = 0;
      for (int rep = 0; rep < 10; ++rep) {
        const Vector a = rng.draw(n);
        const Vector b = rng.draw(n);
        const Real ab = a.dot(hvp_op.apply(b));
        const Real ba = b.dot(hvp_op.apply(a));
        worst = std::max(worst, std::abs(ab - ba) /
                                    std::max(std::abs(ab), std::abs(ba)));
      }
      report.checks.push_back(make_check("hvp-symmetry", worst, 1e-9));
    }

    {  // Hessian-vector product vs finite differences of the gradient
      const Vector gamma = rng.draw(n);
      const Real eps = 1e-5;
      const Vector gp =
          gradient(model, Vector(theta_probe + eps * gamma), obs, grid, op)
              .grad_theta;
      const Vector gm =
          gradient(model, Vector(theta_probe - eps * gamma), obs, grid, op)
              .grad_theta;
      const Vector fd = (gp - gm) / (2 * eps);
      const Vector ours = hvp_op.apply(gamma);
      const Real worst = (ours - fd).norm() / std::max(ours.norm(), Real(1e-300));
      report.checks.push_back(make_check("hvp-vs-fd", worst, 1e-5));
    }
  }

  {  // conjugate residual vs a dense factorization
    const Index m = 20;
    Matrix a(m, m);
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j <= i; ++j) {
        a(i, j) = a(j, i) = rng.next();
      }
    }
    a = Matrix(a.transpose() * a) + Matrix::Identity(m, m);
    const Vector q = rng.draw(m);
    const CrResult solve = conjugate_residual(
        [&](const Vector& v) { return Vector(a * v); }, q);
    const Vector exact = a.ldlt().solve(q);
    const Real worst = (solve.x - exact).norm() / exact.norm();
    report.checks.push_back(make_check("cr-vs-dense", worst, 1e-7));
  }

  return report;
}

}  // namespace vda
