#pragma once

// Closed-form disturbance-rejection bounds for contracting systems and an
// empirical verifier that integrates nominal/disturbed pairs and compares
// the deviation against the bound curve.

#include <limits>

#include "nds/contraction.hpp"
#include "nds/integrate.hpp"

namespace nds {

/// R(t) = chi * r0 * exp(-rate * t) + offset
struct BoundCurve {
  double chi = 1.0, r0 = 0.0, rate = 0.0, offset = 0.0;
  double at(double t) const { return chi * r0 * std::exp(-rate * t) + offset; }
  double asymptote() const { return offset; }
};

/// Bounded disturbance: |x(t) - x0(t)| <= chi R0 e^(-beta t) + ||d|| chi / beta.
BoundCurve lemma1_bound(double beta, double chi, double r0, double d_sup);

struct Lemma2Result {
  bool small_gain_ok = false;
  double margin = 0.0;  // beta/chi - k_x; negative when the hypothesis fails
  BoundCurve curve;     // meaningful only when small_gain_ok
};

/// Finite-gain disturbance |d| <= K0 + Kx |x|: requires Kx < beta/chi, then
/// |x - x0| <= chi R0 e^(-(beta - chi Kx) t) + chi (K0 + Kx x00)/(beta - chi Kx).
Lemma2Result lemma2_bound(double beta, double chi, double r0, double k0, double kx, double x00);

struct DisturbanceModel {
  enum class Kind { BoundedSup, AffineGain };
  Kind kind = Kind::BoundedSup;
  double d_sup = 0.0;              // BoundedSup
  double k0 = 0.0, kx = 0.0, x00 = 0.0;  // AffineGain

  static DisturbanceModel bounded(double d_sup);
  static DisturbanceModel affine(double k0, double kx, double x00);
};

struct VerificationReport {
  enum class Status { Pass, Fail, Inconclusive, SmallGainViolated };
  Status status = Status::Fail;
  double max_ratio = 0.0;  // max over grid of |x - x0| / max(bound, floor)
  double at_time = 0.0;
  double exit_time = std::numeric_limits<double>::quiet_NaN();
  int points = 0;
  double tolerance = 0.02;
  double floor = 1e-9;
  BoundCurve bound;
  double small_gain_margin = 0.0;

  bool passed() const { return status == Status::Pass; }
};

/// Integrates both systems from their initial conditions on a shared output
/// grid (>= 200 points) and reports max |x - x0| / R_bound. PASS needs the
/// ratio <= 1 + tolerance everywhere; leaving the certified domain makes the
/// verdict INCONCLUSIVE from the exit time on.
VerificationReport verify_bound(const VectorField& nominal, const VectorField& disturbed,
                                const ContractionCertificate& cert,
                                const DisturbanceModel& model, const Vec& x0_nominal,
                                const Vec& x0_disturbed, double horizon,
                                IntegratorConfig cfg = {});

}  // namespace nds
