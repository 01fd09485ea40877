#include "nds/robustness.hpp"

#include <algorithm>

namespace nds {

BoundCurve lemma1_bound(double beta, double chi, double r0, double d_sup) {
  if (!(beta > 0.0) || !(chi >= 1.0) || r0 < 0.0 || d_sup < 0.0)
    throw NumericError("lemma1_bound: need beta > 0, chi >= 1, r0, d >= 0");
  BoundCurve b;
  b.chi = chi;
  b.r0 = r0;
  b.rate = beta;
  b.offset = d_sup * chi / beta;
  return b;
}

Lemma2Result lemma2_bound(double beta, double chi, double r0, double k0, double kx, double x00) {
  if (!(beta > 0.0) || !(chi >= 1.0) || r0 < 0.0 || k0 < 0.0 || kx < 0.0 || x00 < 0.0)
    throw NumericError("lemma2_bound: nonnegative parameters with beta > 0, chi >= 1 required");
  Lemma2Result res;
  res.margin = beta / chi - kx;
  if (!(kx < beta / chi)) {
    res.small_gain_ok = false;
    return res;
  }
  res.small_gain_ok = true;
  res.curve.chi = chi;
  res.curve.r0 = r0;
  res.curve.rate = beta - chi * kx;
  res.curve.offset = chi * (k0 + kx * x00) / (beta - chi * kx);
  return res;
}

DisturbanceModel DisturbanceModel::bounded(double d_sup) {
  DisturbanceModel m;
  m.kind = Kind::BoundedSup;
  m.d_sup = d_sup;
  return m;
}

DisturbanceModel DisturbanceModel::affine(double k0, double kx, double x00) {
  DisturbanceModel m;
  m.kind = Kind::AffineGain;
  m.k0 = k0;
  m.kx = kx;
  m.x00 = x00;
  return m;
}

VerificationReport verify_bound(const VectorField& nominal, const VectorField& disturbed,
                                const ContractionCertificate& cert,
                                const DisturbanceModel& model, const Vec& x0_nominal,
                                const Vec& x0_disturbed, double horizon, IntegratorConfig cfg) {
  VerificationReport rep;
  double r0 = (x0_disturbed - x0_nominal).norm();
  if (model.kind == DisturbanceModel::Kind::BoundedSup) {
    rep.bound = lemma1_bound(cert.beta, cert.chi, r0, model.d_sup);
  } else {
    Lemma2Result l2 = lemma2_bound(cert.beta, cert.chi, r0, model.k0, model.kx, model.x00);
    rep.small_gain_margin = l2.margin;
    if (!l2.small_gain_ok) {
      rep.status = VerificationReport::Status::SmallGainViolated;
      return rep;
    }
    rep.bound = l2.curve;
  }

  cfg.horizon = horizon;
  cfg.output_points = std::max(cfg.output_points, 201);
  Trajectory tn = integrate(nominal, x0_nominal, cfg);
  Trajectory td = integrate(disturbed, x0_disturbed, cfg);

  size_t n = std::min(tn.t.size(), td.t.size());
  rep.points = static_cast<int>(n);
  bool exited = false;
  double exit_time = std::numeric_limits<double>::quiet_NaN();
  double max_ratio = 0.0, at_time = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (!exited &&
        (!cert.domain.contains(tn.x[i], 1e-12) || !cert.domain.contains(td.x[i], 1e-12))) {
      exited = true;
      exit_time = tn.t[i];
      break;
    }
    double dev = (td.x[i] - tn.x[i]).norm();
    double bound = std::max(rep.bound.at(tn.t[i]), rep.floor);
    double ratio = dev / bound;
    if (ratio > max_ratio) {
      max_ratio = ratio;
      at_time = tn.t[i];
    }
  }
  rep.max_ratio = max_ratio;
  rep.at_time = at_time;

  if (max_ratio > 1.0 + rep.tolerance) {
    rep.status = VerificationReport::Status::Fail;
    return rep;
  }
  if (exited || !tn.complete() || !td.complete()) {
    rep.status = VerificationReport::Status::Inconclusive;
    rep.exit_time = exited ? exit_time : std::min(tn.t[n - 1], td.t[n - 1]);
    return rep;
  }
  rep.status = VerificationReport::Status::Pass;
  return rep;
}

}  // namespace nds
