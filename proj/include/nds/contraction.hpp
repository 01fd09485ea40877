#pragma once

// Numerical contraction certificates: the symmetric part of the generalized
// Jacobian F = Theta_dot Theta^-1 + Theta J Theta^-1 is eigensolved on a
// low-discrepancy sample of the domain. A certificate is evidence over the
// sampled points, not a proof.

#include <optional>
#include <string>

#include "nds/field.hpp"
#include "nds/metric.hpp"
#include "nds/sampling.hpp"

namespace nds {

struct ContractionCertificate {
  double beta = 0.0;  // -max over samples of lambda_max(F_sym)
  double chi = 1.0;   // max sampled spectral condition number of Theta
  Box domain;
  int samples = 0;
  Vec worst_point;
  double worst_eig = 0.0;
  std::string metric_desc;
  double time_span = 0.0;  // t sampled over [0, time_span] (0: frozen at t=0)
};

struct ContractionViolation {
  Vec point;
  double lambda_max = 0.0;
};

struct CertifyResult {
  bool contracting = false;
  ContractionCertificate certificate;
  std::optional<ContractionViolation> violation;
};

/// Certify dx/dt = f(x, t) on the domain box. For time-varying fields pass
/// time_span > 0 to sample t as an extra dimension.
CertifyResult certify(const VectorField& field, const Metric& metric, const Box& domain,
                      int samples, double time_span = 0.0);

/// Partial contraction of the first n_x components with respect to the first
/// n_x states; the remaining states are frozen exogenous parameters sampled
/// over their part of the joint domain.
CertifyResult certify_partial(const VectorField& stacked, int n_x, const Metric& metric_x,
                              const Box& joint_domain, int samples, double time_span = 0.0);

struct HierarchyCheck {
  bool contracting = false;
  double nu = 0.0;          // largest grid value passing the Schur test
  double margin = 0.0;      // max over samples of lambda_max(Schur) at nu
  double b_bound = 0.0;     // sup sampled |B|_2
  double fy_upper = 0.0;    // max over samples of lambda_max(F_y^s); must be < 0
  int samples = 0;
};

/// Hierarchical composition test: fast block dx = f(x, y) over the joint
/// domain, slow reduced field dy = eps * gbar(y). Searches the geometric grid
/// nu in {1, 1/2, ..., 2^-20} for the largest nu making
/// F_x^s - nu^2 B (F_y^s)^-1 B^T negative definite at every sample.
HierarchyCheck check_hierarchy(const VectorField& fast_joint, int n_x,
                               const VectorField& slow_reduced, const Metric& metric_x,
                               const Metric& metric_y, const Box& joint_domain, int samples);

}  // namespace nds
