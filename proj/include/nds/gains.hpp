#pragma once

// Interconnection gain constants for systems in standard singular
// perturbation form, the critical timescale separation derived from them,
// and the closed-form transient/tracking bounds they imply.

#include <vector>

#include "nds/linalg.hpp"

namespace nds {

/// Affine bounds on the perturbation blocks:
///   |df(xt, y, u)| <= d_f + a_fx |xt| + a_fy |y|
///   |dg(xt, y, u)| <= d_g + a_gx |xt|
/// together with the block contraction data (chi, beta per block), the
/// reduced-trajectory bound m_bar >= sup |ybar(t)| and the initial slow
/// offset |y(0) - ybar(0)|.
struct GainConstants {
  double d_f = 0.0, a_fx = 0.0, a_fy = 0.0;
  double d_g = 0.0, a_gx = 0.0;
  double chi_f = 1.0, beta_f = 1.0;
  double chi_g = 1.0, beta_g = 1.0;
  double m_bar = 0.0;
  double delta_offset = 0.0;
};

/// Reciprocal of the small-gain bracket
///   (chi_f/beta_f) (a_fx + (chi_g/beta_g) a_fy a_gx);
/// +infinity when the bracket is zero (no feedback).
double epsilon_critical(const GainConstants& gc);

struct Lemma3Bounds {
  bool valid = false;      // requires eps < eps_c
  double epsilon = 0.0;
  double m_xtilde = 0.0;   // sup_t |xt(t)| bound
  double ytilde_asymptote = 0.0;
  double chi_g = 1.0, delta_offset = 0.0, eps_beta_g = 0.0;

  /// |y(t) - ybar(t)| <= chi_g |Delta| e^(-eps beta_g t) + asymptote
  double ytilde_at(double t) const;
};

/// Explicit bounds on the fast state and the slow tracking error for a
/// given eps < eps_c and fast initial condition norm |xt(0)|.
Lemma3Bounds lemma3_bounds(const GainConstants& gc, double eps, double xt0_norm);

struct TransientTimes {
  bool valid = false;  // requires 0 < eps < 1
  double t_fast = 0.0;
  double t_total = 0.0;
};

/// Boundary-layer time log(1/eps)/beta_f and the total transient
/// (1/beta_f + 1/(eps beta_g)) log(1/eps).
TransientTimes transient_time(double beta_f, double beta_g, double eps);

struct CascadeEstimate {
  std::vector<double> eps_c;  // per level
  double product = 1.0;       // timescale ratio tau_small / tau_large
};

/// Per-level eps_c and their product for a cascade of modular levels.
CascadeEstimate cascade_epsilon(const std::vector<GainConstants>& levels);

}  // namespace nds
