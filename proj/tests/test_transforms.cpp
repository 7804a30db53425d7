#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "vda/transforms.hpp"

using namespace vda;

TEST_SUITE_BEGIN("transforms");

TEST_CASE("normalize maps the midpoint to one half") {
  const Bounds b(Vector::Constant(4, -2.0), Vector::Constant(4, 6.0));
  const Vector x = b.lower + 0.5 * (b.upper - b.lower);
  const Vector theta = normalize(x, b);
  CHECK(theta.isApproxToConstant(0.5, 1e-15));
}

TEST_CASE("normalize of m = 0.1 over (-1/2, 1/2) gives b = 0.6") {
  const Bounds b(Vector::Constant(1, -0.5), Vector::Constant(1, 0.5));
  const Vector theta = normalize(Vector::Constant(1, 0.1), b);
  CHECK(theta(0) == doctest::Approx(0.6).epsilon(1e-14));
}

TEST_CASE("normalize/denormalize round trip on random vectors") {
  const Index n = 40;
  const Bounds b(test::random_vector(n, -3.0, -1.0, 11),
                 test::random_vector(n, 1.0, 5.0, 12));
  const Vector x =
      b.lower + (test::random_vector(n, 0.01, 0.99, 13).array() *
                 (b.upper - b.lower).array())
                    .matrix();
  const Vector back = denormalize(normalize(x, b), b);
  for (Index i = 0; i < n; ++i) {
    CHECK(std::abs(back(i) - x(i)) <= 1e-12 * std::abs(x(i)));
  }
}

TEST_CASE("normalize rejects values on or outside the bounds") {
  const Bounds b = Bounds::uniform(2, 0.0, 1.0);
  Vector x(2);
  x << 0.5, 1.0;
  CHECK_THROWS_AS(normalize(x, b), OutOfBoundsError);
  x << -0.1, 0.5;
  CHECK_THROWS_AS(normalize(x, b), OutOfBoundsError);
}

TEST_CASE("denormalize rejects saturated input but handles near-boundary") {
  const Bounds b = Bounds::uniform(3, -1.0, 3.0);
  CHECK_THROWS_AS(denormalize(Vector::Zero(3), b), OutOfBoundsError);
  const Vector theta = Vector::Constant(3, 1.0 - 1e-9);
  const Vector x = denormalize(theta, b);
  for (Index i = 0; i < 3; ++i) {
    CHECK(b.upper(i) - x(i) == doctest::Approx(1e-9 * 4.0).epsilon(1e-6));
  }
}

TEST_CASE("logit fixed values") {
  Vector theta(2);
  theta << 0.5, 1.0 / (1.0 + std::exp(-1.0));
  const Vector psi = to_psi(theta);
  CHECK(psi(0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(psi(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("from_psi saturates but stays strictly below one") {
  Vector psi(2);
  psi << 0.0, 1e3;
  const Vector theta = from_psi(psi);
  CHECK(theta(0) == 0.5);
  CHECK(theta(1) < 1.0);
  CHECK(theta(1) > 1.0 - 1e-10);
}

TEST_CASE("logit round trip within 1e-12 on [1e-6, 1 - 1e-6]") {
  Vector theta = test::random_vector(200, 1e-6, 1.0 - 1e-6, 21);
  theta(0) = 1e-6;
  theta(1) = 1.0 - 1e-6;
  const Vector back = from_psi(to_psi(theta));
  CHECK((back - theta).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("to_psi clamps saturated entries and reports it") {
  Vector theta(3);
  theta << 0.0, 0.5, 1.0;
  ClampReport report;
  const Vector psi = to_psi(theta, &report);
  CHECK(report.count == 2);
  CHECK(std::isfinite(psi(0)));
  CHECK(std::isfinite(psi(2)));
}

TEST_CASE("gradient chain rule values") {
  Vector theta(2);
  theta << 0.5, 1e-9;
  Vector g(2);
  g << 3.0, 5.0;
  const Vector gpsi = grad_theta_to_psi(theta, g);
  CHECK(gpsi(0) == doctest::Approx(0.25 * 3.0).epsilon(1e-15));
  CHECK(std::abs(gpsi(1)) <= 5e-9);
}

TEST_CASE("gradient chain rule matches finite differences of a quadratic") {
  // J(theta) = 1/2 |theta - c|^2 composed with the logistic inverse.
  const Index n = 6;
  const Vector c = test::random_vector(n, 0.2, 0.8, 31);
  const Vector theta0 = test::random_vector(n, 0.2, 0.8, 32);
  const Vector psi0 = to_psi(theta0);

  const auto j_of_psi = [&](const Vector& psi) {
    return 0.5 * (from_psi(psi) - c).squaredNorm();
  };
  const Vector fd = test::fd_gradient(j_of_psi, psi0, 1e-6);
  const Vector analytic = grad_theta_to_psi(theta0, theta0 - c);
  for (Index i = 0; i < n; ++i) {
    CHECK(std::abs(analytic(i) - fd(i)) <= 1e-8 * std::max(1.0, std::abs(fd(i))));
  }
}

TEST_SUITE_END();
