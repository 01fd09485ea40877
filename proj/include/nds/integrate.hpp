#pragma once

// ODE integration: adaptive Dormand-Prince 5(4) by default, fixed-step RK4
// for order studies. Steps are clamped to land exactly on the output grid,
// so recorded states carry no interpolation error.

#include <cmath>
#include <limits>
#include <vector>

#include "nds/field.hpp"

namespace nds {

struct IntegratorConfig {
  enum class Method { RK45, RK4Fixed };
  Method method = Method::RK45;
  double abs_tol = 1e-9;
  double rel_tol = 1e-7;
  double max_step = std::numeric_limits<double>::infinity();
  double fixed_step = 1e-2;  // RK4Fixed only
  double horizon = 10.0;
  int output_points = 201;  // includes both endpoints
  double blowup_norm = 1e6;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<Vec> x;
  bool diverged = false;  // state norm crossed blowup_norm
  double blowup_time = std::numeric_limits<double>::quiet_NaN();
  bool stalled = false;  // step size underflow (stiffness) or failed evaluation
  double stall_time = std::numeric_limits<double>::quiet_NaN();
  long steps_accepted = 0;
  long steps_rejected = 0;

  bool complete() const { return !diverged && !stalled; }
  const Vec& final_state() const { return x.back(); }
  double final_time() const { return t.back(); }

  /// Index of the first output time >= s (t.size() if none).
  size_t index_at(double s) const;
};

Trajectory integrate(const VectorField& field, const Vec& x0, const IntegratorConfig& cfg);

}  // namespace nds
