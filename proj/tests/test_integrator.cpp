#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "gfm/errors.hpp"
#include "gfm/integrator.hpp"

using gfm::IntegratorMethod;
using gfm::IntegratorSettings;
using gfm::OdeIntegrator;

namespace {

IntegratorSettings tight(IntegratorMethod m) {
  IntegratorSettings s;
  s.method = m;
  s.rel_tol = 1e-11;
  s.abs_tol = 1e-13;
  s.max_step = 0.1;
  return s;
}

const IntegratorMethod kMethods[] = {IntegratorMethod::rosenbrock4,
                                     IntegratorMethod::dormand_prince45};

}  // namespace

TEST_CASE("exponential decay") {
  for (auto m : kMethods) {
    CAPTURE(gfm::to_string(m));
    OdeIntegrator ode(tight(m));
    std::vector<double> y{1.0};
    double t = 0.0;
    ode.advance([](double, std::span<const double> x, std::span<double> d) { d[0] = -x[0]; }, t, y,
                1.0);
    CHECK(t == 1.0);
    CHECK(std::abs(y[0] - std::exp(-1.0)) < 1e-8);
  }
}

TEST_CASE("exponential decay at the default tolerances") {
  for (auto m : kMethods) {
    IntegratorSettings s;
    s.method = m;
    OdeIntegrator ode(s);
    std::vector<double> y{1.0};
    double t = 0.0;
    ode.advance([](double, std::span<const double> x, std::span<double> d) { d[0] = -x[0]; }, t, y,
                1.0);
    CHECK(std::abs(y[0] - std::exp(-1.0)) < 1e-8);
  }
}

TEST_CASE("constant and linear-in-time right-hand sides") {
  for (auto m : kMethods) {
    OdeIntegrator ode(tight(m));
    std::vector<double> y{2.0, 0.0};
    double t = 0.0;
    ode.advance(
        [](double tt, std::span<const double>, std::span<double> d) {
          d[0] = 0.0;
          d[1] = 3.0 * tt;
        },
        t, y, 2.0);
    CHECK(y[0] == 2.0);
    if (m == IntegratorMethod::dormand_prince45) {
      CHECK(y[1] == doctest::Approx(6.0).epsilon(1e-12));
    } else {
      // the pair's time-derivative coefficients carry four digits, which
      // limits accuracy on explicitly time-dependent problems
      CHECK(std::abs(y[1] - 6.0) < 1e-5);
    }
  }
}

TEST_CASE("stiff linear system against the matrix exponential") {
  Eigen::Matrix3d A;
  A << -1e6, 0.0, 0.0,
       0.0, -1.0, 50.0,
       0.0, -50.0, -1.0;
  const Eigen::Vector3d y0(1.0, 1.0, -0.5);
  const double T = 0.3;
  const Eigen::Vector3d exact = (A * T).exp() * y0;

  IntegratorSettings s;
  s.rel_tol = 1e-9;
  s.abs_tol = 1e-12;
  s.max_step = 1.0;
  OdeIntegrator ode(s);
  std::vector<double> y{y0(0), y0(1), y0(2)};
  double t = 0.0;
  ode.advance(
      [&](double, std::span<const double> x, std::span<double> d) {
        Eigen::Map<const Eigen::Vector3d> xv(x.data());
        Eigen::Map<Eigen::Vector3d> dv(d.data());
        dv = A * xv;
      },
      t, y, T);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(y[i] - exact(i)) < 1e-7);
  // an explicit method would need ~1e6 steps here
  CHECK(ode.stats().accepted < 5000);
  CHECK(ode.stats().jacobian_evaluations > 0);
}

TEST_CASE("tightening the tolerance shrinks the error") {
  auto rhs = [](double, std::span<const double> x, std::span<double> d) {
    d[0] = x[1];
    d[1] = -x[0];
  };
  for (auto m : kMethods) {
    double prev = INFINITY;
    for (double tol : {1e-4, 1e-6, 1e-8, 1e-10}) {
      IntegratorSettings s;
      s.method = m;
      s.rel_tol = tol;
      s.abs_tol = tol;
      s.max_step = 1.0;
      OdeIntegrator ode(s);
      std::vector<double> y{1.0, 0.0};
      double t = 0.0;
      ode.advance(rhs, t, y, 10.0);
      const double err = std::hypot(y[0] - std::cos(10.0), y[1] + std::sin(10.0));
      CHECK(err < prev);
      CHECK(err < 1e3 * tol);
      prev = err;
    }
  }
}

TEST_CASE("stops are hit exactly and steps respect max_step") {
  for (auto m : kMethods) {
    IntegratorSettings s;
    s.method = m;
    s.max_step = 0.05;
    OdeIntegrator ode(s);
    std::vector<double> y{1.0};
    double t = 0.0;
    const std::vector<double> stops{0.1, 0.3333, 0.7, 1.0};
    std::vector<double> seen;
    ode.advance([](double, std::span<const double> x, std::span<double> d) { d[0] = -x[0]; }, t, y,
                1.0, stops, [&](double tt, std::span<const double>) { seen.push_back(tt); });
    for (double st : stops) {
      CHECK(std::find(seen.begin(), seen.end(), st) != seen.end());
    }
    double last = 0.0;
    for (double tt : seen) {
      CHECK(tt > last);
      CHECK(tt - last <= 0.05 * (1.0 + 1e-12));
      last = tt;
    }
    CHECK(seen.back() == 1.0);
  }
}

TEST_CASE("advancing in pieces continues from where it stopped") {
  OdeIntegrator ode(tight(IntegratorMethod::rosenbrock4));
  auto rhs = [](double, std::span<const double> x, std::span<double> d) { d[0] = -2.0 * x[0]; };
  std::vector<double> y{1.0};
  double t = 0.0;
  ode.advance(rhs, t, y, 0.5);
  CHECK(t == 0.5);
  ode.advance(rhs, t, y, 1.0);
  CHECK(t == 1.0);
  CHECK(std::abs(y[0] - std::exp(-2.0)) < 1e-9);
}

TEST_CASE("failures raise IntegrationError") {
  SUBCASE("finite-time blow-up underflows the step size") {
    IntegratorSettings s;
    s.min_step = 1e-8;
    OdeIntegrator ode(s);
    std::vector<double> y{1.0};
    double t = 0.0;
    CHECK_THROWS_AS(ode.advance([](double, std::span<const double> x,
                                   std::span<double> d) { d[0] = x[0] * x[0]; },
                                t, y, 2.0),
                    gfm::IntegrationError);
  }
  SUBCASE("non-finite initial state") {
    OdeIntegrator ode(IntegratorSettings{});
    std::vector<double> y{NAN};
    double t = 0.0;
    CHECK_THROWS_AS(
        ode.advance([](double, std::span<const double>, std::span<double> d) { d[0] = 0.0; }, t, y,
                    1.0),
        gfm::IntegrationError);
  }
  SUBCASE("step budget") {
    IntegratorSettings s;
    s.max_steps = 10;
    OdeIntegrator ode(s);
    std::vector<double> y{1.0};
    double t = 0.0;
    CHECK_THROWS_AS(
        ode.advance([](double, std::span<const double>, std::span<double> d) { d[0] = 1.0; }, t, y,
                    1.0),
        gfm::IntegrationError);
  }
}

TEST_CASE("settings validation and method names") {
  IntegratorSettings s;
  CHECK_NOTHROW(s.validate());
  s.rel_tol = 0.0;
  CHECK_THROWS_AS(s.validate(), gfm::ConfigError);
  s = {};
  s.min_step = 1.0;
  CHECK_THROWS_AS(s.validate(), gfm::ConfigError);
  CHECK(gfm::integrator_method_from_string("rosenbrock4") == IntegratorMethod::rosenbrock4);
  CHECK(gfm::integrator_method_from_string("dormand_prince45") ==
        IntegratorMethod::dormand_prince45);
  CHECK_THROWS_AS(gfm::integrator_method_from_string("euler"), gfm::ConfigError);
  CHECK(gfm::to_string(IntegratorMethod::rosenbrock4) == "rosenbrock4");
}
