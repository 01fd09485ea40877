#include "nds/integrate.hpp"

#include <algorithm>

#include "nds/expr.hpp"  // EvalError

namespace nds {

size_t Trajectory::index_at(double s) const {
  auto it = std::lower_bound(t.begin(), t.end(), s);
  return static_cast<size_t>(it - t.begin());
}

namespace {

// Dormand-Prince 5(4) coefficients
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// y5 - y4 error weights
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

double error_norm(const Vec& err, const Vec& y0, const Vec& y1, double atol, double rtol) {
  double acc = 0.0;
  for (int i = 0; i < err.size(); ++i) {
    double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    double q = err[i] / sc;
    acc += q * q;
  }
  return std::sqrt(acc / err.size());
}

std::vector<double> output_grid(double horizon, int points) {
  points = std::max(2, points);
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = horizon * double(i) / (points - 1);
  g.back() = horizon;
  return g;
}

Trajectory integrate_rk4(const VectorField& field, const Vec& x0, const IntegratorConfig& cfg) {
  Trajectory traj;
  std::vector<double> grid = output_grid(cfg.horizon, cfg.output_points);
  Vec y = x0;
  traj.t.push_back(0.0);
  traj.x.push_back(y);
  double t = 0.0;
  for (size_t g = 1; g < grid.size(); ++g) {
    double span = grid[g] - t;
    long k = std::max(1L, std::lround(span / cfg.fixed_step));
    double h = span / double(k);
    for (long s = 0; s < k; ++s) {
      Vec k1 = field.f(y, t);
      Vec k2 = field.f(y + 0.5 * h * k1, t + 0.5 * h);
      Vec k3 = field.f(y + 0.5 * h * k2, t + 0.5 * h);
      Vec k4 = field.f(y + h * k3, t + h);
      y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t += h;
      ++traj.steps_accepted;
      if (y.norm() >= cfg.blowup_norm) {
        traj.diverged = true;
        traj.blowup_time = t;
        traj.t.push_back(t);
        traj.x.push_back(y);
        return traj;
      }
    }
    t = grid[g];
    traj.t.push_back(t);
    traj.x.push_back(y);
  }
  return traj;
}

}  // namespace

Trajectory integrate(const VectorField& field, const Vec& x0, const IntegratorConfig& cfg) {
  if (!(cfg.horizon > 0.0) || !(cfg.abs_tol > 0.0) || !(cfg.rel_tol > 0.0))
    throw NumericError("integrator config: horizon and tolerances must be positive");
  if (!x0.allFinite()) throw NumericError("integrator: non-finite initial state");
  if (cfg.method == IntegratorConfig::Method::RK4Fixed) return integrate_rk4(field, x0, cfg);

  Trajectory traj;
  std::vector<double> grid = output_grid(cfg.horizon, cfg.output_points);
  const int n = static_cast<int>(x0.size());

  Vec y = x0;
  double t = 0.0;
  traj.t.push_back(0.0);
  traj.x.push_back(y);

  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  bool have_k1 = false;

  // initial step heuristic
  double h;
  {
    Vec f0 = field.f(y, t);
    double d0 = y.norm(), d1 = f0.norm();
    h = (d1 > 1e-10) ? 0.01 * std::max(d0, 1.0) / d1 : 1e-6;
    h = std::min({h, cfg.max_step, cfg.horizon / 10.0});
    h = std::max(h, 1e-10);
    k1 = f0;
    have_k1 = true;
  }

  size_t g = 1;
  auto record_stop = [&](bool diverged) {
    traj.t.push_back(t);
    traj.x.push_back(y);
    if (diverged) {
      traj.diverged = true;
      traj.blowup_time = t;
    } else {
      traj.stalled = true;
      traj.stall_time = t;
    }
  };

  while (g < grid.size()) {
    double t_target = grid[g];
    // h is the controller's proposal; hs is the step actually taken, which
    // may be truncated to land on the output grid
    double hs = std::min(h, cfg.max_step);
    bool clamped = false;
    if (t + hs >= t_target) {
      hs = t_target - t;
      clamped = true;
    }
    double hmin = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    if (hs < hmin && !clamped) {
      record_stop(false);
      return traj;
    }

    bool eval_failed = false;
    Vec y1, err;
    try {
      if (!have_k1) {
        k1 = field.f(y, t);
        have_k1 = true;
      }
      k2 = field.f(y + hs * (a21 * k1), t + c2 * hs);
      k3 = field.f(y + hs * (a31 * k1 + a32 * k2), t + c3 * hs);
      k4 = field.f(y + hs * (a41 * k1 + a42 * k2 + a43 * k3), t + c4 * hs);
      k5 = field.f(y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), t + c5 * hs);
      k6 = field.f(y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), t + hs);
      y1 = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      k7 = field.f(y1, t + hs);
      err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    } catch (const EvalError&) {
      eval_failed = true;
    }

    if (eval_failed) {
      if (y.norm() >= 0.5 * cfg.blowup_norm) {
        record_stop(true);
        return traj;
      }
      ++traj.steps_rejected;
      h = 0.25 * hs;
      if (h < hmin) {
        record_stop(false);
        return traj;
      }
      continue;
    }

    bool finite = y1.allFinite();
    double enorm = finite ? error_norm(err, y, y1, cfg.abs_tol, cfg.rel_tol)
                          : std::numeric_limits<double>::infinity();
    if (enorm <= 1.0) {
      t = clamped ? t_target : t + hs;
      y = y1;
      k1 = k7;  // FSAL
      ++traj.steps_accepted;
      if (y.norm() >= cfg.blowup_norm) {
        record_stop(true);
        return traj;
      }
      if (clamped) {
        traj.t.push_back(t);
        traj.x.push_back(y);
        ++g;
      }
      double fac = enorm > 0.0 ? std::clamp(0.9 * std::pow(enorm, -0.2), 0.2, 5.0) : 5.0;
      double candidate = hs * fac;
      // an output-grid truncation must not shrink the controller's step
      h = clamped ? std::max(h, candidate) : candidate;
    } else {
      ++traj.steps_rejected;
      double fac = std::isfinite(enorm) ? std::clamp(0.9 * std::pow(enorm, -0.2), 0.1, 0.9) : 0.1;
      h = hs * fac;
      if (h < hmin) {
        record_stop(false);
        return traj;
      }
    }
  }
  return traj;
}

}  // namespace nds
