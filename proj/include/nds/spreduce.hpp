#pragma once

// Singular-perturbation reduction: slow-manifold solves, transformation to
// standard form (fast deviation coordinates), estimation of the
// interconnection gain constants by linear programming over samples, and the
// report combining eps_c with the explicit transient/tracking bounds.

#include <optional>
#include <string>

#include "nds/compile.hpp"
#include "nds/contraction.hpp"
#include "nds/gains.hpp"

namespace nds {

/// Newton failure on the fast root solve; carries the best residual seen.
class NoConvergence : public NumericError {
 public:
  NoConvergence(std::string msg, double best_residual)
      : NumericError(std::move(msg)), best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

/// Root x with fast_field(x, y, u(t)) = 0 for frozen (y, t); unique on the
/// certified domain by partial contraction of the fast block.
class SlowManifold {
 public:
  SlowManifold(CompiledSystem system, ContractionCertificate fast_certificate);

  int n_fast() const { return sys0_.n_fast(); }
  int n_slow() const { return sys0_.n_slow(); }

  /// Damped Newton from x_init; residual <= tol on success.
  Vec solve(const Vec& y, double t, const Vec& x_init) const;
  Vec solve(const Vec& y, double t) const;

  /// d xbar / dy via the implicit function theorem.
  Mat sensitivity_y(const Vec& y, double t) const;
  /// d xbar / dt at frozen y (explicit time dependence through inputs).
  Vec sensitivity_t(const Vec& y, double t) const;

  double residual_tol() const { return 1e-10; }
  int max_iterations() const { return 100; }
  const ContractionCertificate& certificate() const { return cert_; }

  /// Fast residual field f(x, y, t) at eps = 0 and its x-Jacobian.
  Vec fast_residual(const Vec& x, const Vec& y, double t) const;
  Mat fast_jacobian_x(const Vec& x, const Vec& y, double t) const;

 private:
  CompiledSystem sys0_;  // epsilon frozen to 0
  ContractionCertificate cert_;
};

/// The transformed system
///   xt' = f~(xt, y, u) + eps df(xt, y, u)
///   y'  = eps gbar(y, u) + eps dg(xt, y, u)
/// with f~(0, y, u) = 0, plus exact assembled evaluators valid at any eps.
class ModularSystem {
 public:
  ModularSystem(CompiledSystem sys, SlowManifold manifold);

  int n_fast() const { return sys_.n_fast(); }
  int n_slow() const { return sys_.n_slow(); }
  double epsilon() const { return sys_.epsilon(); }
  ModularSystem with_epsilon(double eps) const;

  const CompiledSystem& system() const { return sys_; }
  const SlowManifold& manifold() const { return manifold_; }

  Vec xbar(const Vec& y, double t) const;

  // standard-form blocks (delta blocks need eps > 0 unless the RHS is
  // affine in eps, which is handled exactly through a reference slope)
  Vec f_tilde(const Vec& xt, const Vec& y, double t) const;
  Vec delta_f(const Vec& xt, const Vec& y, double t) const;
  Vec g_bar(const Vec& y, double t) const;
  Vec delta_g(const Vec& xt, const Vec& y, double t) const;

  // exact dynamics in (xt, y) coordinates
  Vec full_fast(const Vec& xt, const Vec& y, double t) const;
  Vec full_slow(const Vec& xt, const Vec& y, double t) const;
  VectorField stacked_field() const;   // Jacobian by finite differences
  VectorField reduced_field() const;   // ybar' = eps gbar(ybar, u)

  /// Domain of the original states mapped into (xt, y): fast intervals are
  /// kept as xt intervals (xbar recentering is applied per sample).
  Box domain_box() const { return sys_.domain_box(); }

 private:
  struct ManifoldPoint {
    Vec xb;
    Mat sens_y;  // d xbar / dy
    Vec sens_t;  // d xbar / dt
  };
  ManifoldPoint manifold_point(const Vec& y, double t) const;

  CompiledSystem sys_;        // at the system's eps
  CompiledSystem sys0_;       // eps frozen to 0
  SlowManifold manifold_;
  double eps_slope_ref_ = 1e-8;  // used only when eps == 0
  Vec g_scaled(const Vec& x, const Vec& y, double t) const;   // slow RHS / eps
  Vec g_x(const Vec& x, const Vec& y, double t) const;        // (fast(eps)-fast(0))/eps
};

/// Builds the standard form; requires a declared fast/slow partition with an
/// epsilon parameter and checks that the slow RHS vanishes at eps = 0.
ModularSystem to_standard_form(const CompiledSystem& sys,
                               const ContractionCertificate& fast_certificate);

struct GainEstimate {
  GainConstants constants;
  bool superlinear_warning = false;  // |df| looks worse than affine in |xt|
  double worst_margin = 0.0;         // max over samples of |d.| - bound (<= 0)
  int samples = 0;
};

/// Smallest affine constants dominating |df| and |dg| over a sample of the
/// domain (LP, objective d + alpha_fx + alpha_fy), inflated 1% and
/// re-verified. chi/beta are copied from the certificates.
GainEstimate estimate_gain_constants(const ModularSystem& ms,
                                     const ContractionCertificate& fast_cert,
                                     const ContractionCertificate& slow_cert, int samples);

struct GainCheck {
  bool ok = false;
  double worst_margin = 0.0;
  Vec worst_point;
};

/// Sampled domination check of given constants over a domain in original
/// coordinates (fast states recentred by xbar).
GainCheck verify_gain_constants(const ModularSystem& ms, const GainConstants& gc, const Box& domain,
                                int samples);

/// 1.05 x the observed sup of |ybar(t)| from y0 over the horizon.
double estimate_m_bar(const ModularSystem& ms, const Vec& y0, double horizon);

struct SPReport {
  double epsilon = 0.0;
  double epsilon_c = 0.0;
  double margin = 0.0;  // 1 - eps/eps_c
  bool bounds_valid = false;
  double m_xtilde = 0.0;
  double ytilde_asymptote = 0.0;
  double t_fast = 0.0;
  double t_total = 0.0;
  double xt0_norm = 0.0;  // fast IC norm the bounds assume
  GainConstants constants;
  std::string constants_source;  // "fitted" or "provided"
  bool constants_verified = false;
  double constants_margin = 0.0;
  bool superlinear_warning = false;
  double beta_f = 0.0, chi_f = 1.0, beta_g = 0.0, chi_g = 1.0;
  bool has_inputs = false;  // input derivative bound is assumed, not checked
  int samples = 0;
};

/// Full reduction pipeline: fast/slow certificates, manifold, standard form,
/// constants (fitted unless provided), eps_c and the explicit bounds.
SPReport analyze_reduction(const CompiledSystem& sys, std::optional<GainConstants> provided,
                           int samples, std::optional<double> xt0_norm = std::nullopt);

}  // namespace nds
