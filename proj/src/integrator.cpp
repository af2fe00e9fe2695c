#include "gfm/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <boost/numeric/odeint/stepper/runge_kutta_dopri5.hpp>

#include "gfm/errors.hpp"

namespace gfm {

namespace odeint = boost::numeric::odeint;

std::string_view to_string(IntegratorMethod m) {
  switch (m) {
    case IntegratorMethod::rosenbrock4:
      return "rosenbrock4";
    case IntegratorMethod::dormand_prince45:
      return "dormand_prince45";
  }
  return "?";
}

IntegratorMethod integrator_method_from_string(std::string_view name) {
  if (name == "rosenbrock4") return IntegratorMethod::rosenbrock4;
  if (name == "dormand_prince45") return IntegratorMethod::dormand_prince45;
  throw ConfigError("integrator.method must be \"rosenbrock4\" or \"dormand_prince45\", got \"" +
                    std::string(name) + "\"");
}

void IntegratorSettings::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(std::isfinite(v) && v > 0.0)) {
      throw ConfigError(std::string("integrator.") + name + " must be finite and > 0");
    }
  };
  positive(rel_tol, "rel_tol");
  positive(abs_tol, "abs_tol");
  positive(max_step, "max_step");
  positive(min_step, "min_step");
  positive(initial_step, "initial_step");
  positive(output_interval, "output_interval");
  if (min_step > max_step) throw ConfigError("integrator.min_step must not exceed max_step");
  if (max_steps == 0) throw ConfigError("integrator.max_steps must be > 0");
}

namespace {

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

std::span<const double> view(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> view(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// Shampine's L-stable Rosenbrock 4(3) pair, the same tableau as
// boost::numeric::odeint::rosenbrock4.
struct RosenbrockTableau {
  static constexpr double gamma = 0.25;
  static constexpr double d1 = 0.25, d2 = -0.1043, d3 = 0.1035, d4 = 0.3620000000000023e-01;
  static constexpr double c2 = 0.386, c3 = 0.21, c4 = 0.63;
  static constexpr double c21 = -0.5668800000000000e+01;
  static constexpr double a21 = 0.1544000000000000e+01;
  static constexpr double c31 = -0.2430093356833875e+01, c32 = -0.2063599157091915e+00;
  static constexpr double a31 = 0.9466785280815826e+00, a32 = 0.2557011698983284e+00;
  static constexpr double c41 = -0.1073529058151375e+00, c42 = -0.9594562251023355e+01,
                          c43 = -0.2047028614809616e+02;
  static constexpr double a41 = 0.3314825187068521e+01, a42 = 0.2896124015972201e+01,
                          a43 = 0.9986419139977817e+00;
  static constexpr double c51 = 0.7496443313967647e+01, c52 = -0.1024680431464352e+02,
                          c53 = -0.3399990352819905e+02, c54 = 0.1170890893206160e+02;
  static constexpr double a51 = 0.1221224509226641e+01, a52 = 0.6019134481288629e+01,
                          a53 = 0.1253708332932087e+02, a54 = -0.6878860361058950e+00;
  static constexpr double c61 = 0.8083246795921522e+01, c62 = -0.7981132988064893e+01,
                          c63 = -0.3152159432874371e+02, c64 = 0.1631930543123136e+02,
                          c65 = -0.6058818238834054e+01;
};

std::string dump_state(double t, std::span<const double> y) {
  std::ostringstream os;
  os.precision(17);
  os << "t=" << t << " y=[";
  for (std::size_t i = 0; i < y.size(); ++i) os << (i ? ", " : "") << y[i];
  os << "]";
  return os.str();
}

}  // namespace

struct OdeIntegrator::Impl {
  explicit Impl(IntegratorSettings s) : settings(s), h_next(std::min(s.initial_step, s.max_step)) {}

  IntegratorSettings settings;
  IntegratorStats stats;
  double h_next;
  double err_prev = 1.0;
  bool last_rejected = false;

  odeint::runge_kutta_dopri5<std::vector<double>> dopri;

  // scratch
  Vector rb_x, rb_f, rb_dfdt, rb_tmp, rb_err, g1, g2, g3, g4, g5;
  Matrix rb_jac;
  Eigen::PartialPivLU<Matrix> rb_lu;
  std::vector<double> f1, y_pert;
  std::vector<double> dp_dxdt, dp_dxdt_out, dp_out, dp_err;
  bool fsal_valid = false;
  std::string stage_failure;  // last right-hand-side failure inside a trial step

  int error_exponent_order() const {
    return settings.method == IntegratorMethod::rosenbrock4 ? 4 : 5;
  }

  // Forward differences around (t, x); f0 = f(t, x) is supplied by the caller.
  void finite_difference_jacobian(const OdeRhs& rhs, const Vector& x, const Vector& f0, double t) {
    const auto n = static_cast<std::size_t>(x.size());
    const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());
    f1.resize(n);
    y_pert.assign(x.data(), x.data() + n);
    rb_jac.resize(x.size(), x.size());
    for (std::size_t j = 0; j < n; ++j) {
      const double yj = y_pert[j];
      const double delta = sqrt_eps * std::max(std::abs(yj), 1.0);
      y_pert[j] = yj + delta;
      const double dyj = y_pert[j] - yj;  // exactly representable step
      rhs(t, y_pert, f1);
      for (std::size_t i = 0; i < n; ++i) rb_jac(i, j) = (f1[i] - f0[i]) / dyj;
      y_pert[j] = yj;
    }
    const double t_pert = t + sqrt_eps * std::max(std::abs(t), 1.0);
    const double dt = t_pert - t;
    rhs(t_pert, y_pert, f1);
    rb_dfdt.resize(x.size());
    for (std::size_t i = 0; i < n; ++i) rb_dfdt[i] = (f1[i] - f0[i]) / dt;
    stats.rhs_evaluations += n + 1;
    ++stats.jacobian_evaluations;
  }

  void rosenbrock_step(const OdeRhs& rhs, double t, double h) {
    using T = RosenbrockTableau;
    const Eigen::Index n = rb_x.size();
    auto f = [&](const Vector& x, double tt, Vector& out) {
      out.resize(n);
      rhs(tt, view(x), view(out));
      ++stats.rhs_evaluations;
    };

    f(rb_x, t, rb_f);
    finite_difference_jacobian(rhs, rb_x, rb_f, t);
    rb_lu.compute(Matrix::Identity(n, n) / (T::gamma * h) - rb_jac);

    g1 = rb_lu.solve(rb_f + h * T::d1 * rb_dfdt);

    f(rb_x + T::a21 * g1, t + T::c2 * h, rb_tmp);
    g2 = rb_lu.solve(rb_tmp + h * T::d2 * rb_dfdt + (T::c21 / h) * g1);

    f(rb_x + T::a31 * g1 + T::a32 * g2, t + T::c3 * h, rb_tmp);
    g3 = rb_lu.solve(rb_tmp + h * T::d3 * rb_dfdt + (T::c31 * g1 + T::c32 * g2) / h);

    f(rb_x + T::a41 * g1 + T::a42 * g2 + T::a43 * g3, t + T::c4 * h, rb_tmp);
    g4 = rb_lu.solve(rb_tmp + h * T::d4 * rb_dfdt + (T::c41 * g1 + T::c42 * g2 + T::c43 * g3) / h);

    const Vector x5 = rb_x + T::a51 * g1 + T::a52 * g2 + T::a53 * g3 + T::a54 * g4;
    f(x5, t + h, rb_tmp);
    g5 = rb_lu.solve(rb_tmp + (T::c51 * g1 + T::c52 * g2 + T::c53 * g3 + T::c54 * g4) / h);

    const Vector x6 = x5 + g5;
    f(x6, t + h, rb_tmp);
    rb_err = rb_lu.solve(rb_tmp + (T::c61 * g1 + T::c62 * g2 + T::c63 * g3 + T::c64 * g4 + T::c65 * g5) / h);
    rb_x = x6 + rb_err;  // the fourth-order solution
  }

  // One trial step from (t, y) of size h. Writes the candidate to y_new and
  // returns the scaled error norm. A non-finite candidate, or an
  // IntegrationError raised by the right-hand side at a stage point, counts
  // as an infinite error so the step is retried with a smaller h.
  double trial_step(const OdeRhs& rhs, double t, const std::vector<double>& y, double h,
                    std::vector<double>& y_new) {
    try {
      return attempt(rhs, t, y, h, y_new);
    } catch (const IntegrationError& e) {
      stage_failure = e.what();
      return std::numeric_limits<double>::infinity();
    }
  }

  double attempt(const OdeRhs& rhs, double t, const std::vector<double>& y, double h,
                 std::vector<double>& y_new) {
    const std::size_t n = y.size();
    y_new.resize(n);
    std::span<const double> err;

    if (settings.method == IntegratorMethod::rosenbrock4) {
      rb_x = Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(n));
      rosenbrock_step(rhs, t, h);
      std::copy(rb_x.data(), rb_x.data() + n, y_new.begin());
      err = view(rb_err);
    } else {
      auto sys = [&](const std::vector<double>& x, std::vector<double>& dxdt, double tt) {
        rhs(tt, x, dxdt);
        ++stats.rhs_evaluations;
      };
      if (!fsal_valid) {
        dp_dxdt.resize(n);
        sys(y, dp_dxdt, t);
        fsal_valid = true;
      }
      dp_out.resize(n);
      dp_dxdt_out.resize(n);
      dp_err.resize(n);
      dopri.do_step(sys, y, dp_dxdt, t, dp_out, dp_dxdt_out, h, dp_err);
      y_new = dp_out;
      err = dp_err;
    }

    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(y_new[i]) || !std::isfinite(err[i])) {
        return std::numeric_limits<double>::infinity();
      }
      const double scale =
          settings.abs_tol + settings.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      norm = std::max(norm, std::abs(err[i]) / scale);
    }
    return norm;
  }
};

OdeIntegrator::OdeIntegrator(IntegratorSettings settings) {
  settings.validate();
  impl_ = std::make_unique<Impl>(settings);
}

OdeIntegrator::~OdeIntegrator() = default;
OdeIntegrator::OdeIntegrator(OdeIntegrator&&) noexcept = default;
OdeIntegrator& OdeIntegrator::operator=(OdeIntegrator&&) noexcept = default;

const IntegratorStats& OdeIntegrator::stats() const { return impl_->stats; }
const IntegratorSettings& OdeIntegrator::settings() const { return impl_->settings; }

void OdeIntegrator::advance(const OdeRhs& rhs, double& t, std::vector<double>& y, double t_end,
                            std::span<const double> stops, const StepObserver& observer) {
  Impl& m = *impl_;
  const IntegratorSettings& s = m.settings;
  for (double v : y) {
    if (!std::isfinite(v)) throw IntegrationError("non-finite initial state: " + dump_state(t, y));
  }
  if (!(t_end > t)) return;

  // The rhs may differ from the previous call (piecewise problems).
  m.fsal_valid = false;

  auto next_stop = std::upper_bound(stops.begin(), stops.end(), t);
  std::vector<double> y_new(y.size());
  const double k = m.error_exponent_order();

  while (t < t_end) {
    while (next_stop != stops.end() && *next_stop <= t) ++next_stop;
    const double target =
        (next_stop != stops.end() && *next_stop < t_end) ? *next_stop : t_end;
    const double snap = 1e-12 * std::max(1.0, std::abs(target));

    double h = std::min(m.h_next, s.max_step);
    bool landing = false;
    if (t + h >= target - snap) {
      h = target - t;
      landing = true;
    } else if (t + 2.0 * h > target) {
      h = 0.5 * (target - t);
    }

    const double err = m.trial_step(rhs, t, y, h, y_new);

    if (err <= 1.0) {
      t = landing ? target : t + h;
      y.swap(y_new);
      if (s.method == IntegratorMethod::dormand_prince45) m.dp_dxdt.swap(m.dp_dxdt_out);

      IntegratorStats& st = m.stats;
      ++st.accepted;
      st.smallest_step = st.accepted == 1 ? h : std::min(st.smallest_step, h);
      st.largest_step = std::max(st.largest_step, h);

      double factor = kMaxFactor;
      if (err > 0.0) {
        factor = kSafety * std::pow(err, -0.7 / k) * std::pow(m.err_prev, 0.4 / k);
        factor = std::clamp(factor, kMinFactor, kMaxFactor);
      }
      if (m.last_rejected) factor = std::min(factor, 1.0);
      const double proposed = h * factor;
      // A step shortened to land on a stop says little about the natural size.
      m.h_next = (landing && factor >= 1.0) ? std::max(m.h_next, proposed) : proposed;
      m.h_next = std::min(m.h_next, s.max_step);
      m.err_prev = std::max(err, 1e-4);
      m.last_rejected = false;

      if (observer) observer(t, y);
      if (st.accepted + st.rejected > s.max_steps) {
        throw IntegrationError("step budget exhausted at " + dump_state(t, y));
      }
    } else {
      ++m.stats.rejected;
      m.fsal_valid = m.fsal_valid && s.method == IntegratorMethod::dormand_prince45;
      const double factor =
          std::isfinite(err) ? std::max(kMinFactor, kSafety * std::pow(err, -1.0 / k)) : kMinFactor;
      m.h_next = h * std::min(factor, 1.0);
      m.last_rejected = true;
      if (m.h_next < s.min_step) {
        std::ostringstream os;
        os << "step size underflow (h=" << m.h_next << " < min_step=" << s.min_step
           << "); the problem is too stiff for these settings at " << dump_state(t, y);
        if (!m.stage_failure.empty()) os << "; last stage failure: " << m.stage_failure;
        throw IntegrationError(os.str());
      }
      if (m.stats.accepted + m.stats.rejected > s.max_steps) {
        throw IntegrationError("step budget exhausted at " + dump_state(t, y));
      }
    }
  }
}

}  // namespace gfm
