#include "nds/gains.hpp"

#include <cmath>
#include <limits>

namespace nds {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_valid(const GainConstants& gc) {
  auto nonneg = [](double v) { return v >= 0.0 && std::isfinite(v); };
  if (!nonneg(gc.d_f) || !nonneg(gc.a_fx) || !nonneg(gc.a_fy) || !nonneg(gc.d_g) ||
      !nonneg(gc.a_gx) || !nonneg(gc.m_bar) || !nonneg(gc.delta_offset))
    throw NumericError("gain constants must be nonnegative and finite");
  if (!(gc.beta_f > 0.0) || !(gc.beta_g > 0.0) || !(gc.chi_f >= 1.0) || !(gc.chi_g >= 1.0))
    throw NumericError("need beta_f, beta_g > 0 and chi_f, chi_g >= 1");
}

}  // namespace

double epsilon_critical(const GainConstants& gc) {
  require_valid(gc);
  double bracket = (gc.chi_f / gc.beta_f) * (gc.a_fx + (gc.chi_g / gc.beta_g) * gc.a_fy * gc.a_gx);
  if (bracket == 0.0) return kInf;
  return 1.0 / bracket;
}

double Lemma3Bounds::ytilde_at(double t) const {
  return chi_g * delta_offset * std::exp(-eps_beta_g * t) + ytilde_asymptote;
}

Lemma3Bounds lemma3_bounds(const GainConstants& gc, double eps, double xt0_norm) {
  require_valid(gc);
  if (!(eps >= 0.0) || !(xt0_norm >= 0.0)) throw NumericError("eps and |xt(0)| must be >= 0");
  Lemma3Bounds b;
  b.epsilon = eps;
  b.chi_g = gc.chi_g;
  b.delta_offset = gc.delta_offset;
  b.eps_beta_g = eps * gc.beta_g;
  double eps_c = epsilon_critical(gc);
  if (!(eps < eps_c)) {
    b.valid = false;
    b.m_xtilde = kInf;
    b.ytilde_asymptote = kInf;
    return b;
  }
  double numerator =
      gc.chi_f * xt0_norm +
      (eps * gc.chi_f / gc.beta_f) *
          (gc.d_f + gc.a_fy * (gc.m_bar + gc.chi_g * (gc.delta_offset + gc.d_g / gc.beta_g)));
  b.m_xtilde = numerator / (1.0 - eps / eps_c);
  b.ytilde_asymptote = gc.chi_g * gc.a_gx * b.m_xtilde / gc.beta_g;
  b.valid = true;
  return b;
}

TransientTimes transient_time(double beta_f, double beta_g, double eps) {
  if (!(beta_f > 0.0) || !(beta_g > 0.0)) throw NumericError("rates must be positive");
  TransientTimes tt;
  if (!(eps > 0.0) || !(eps < 1.0)) {
    tt.valid = false;  // boundary layer notion void
    tt.t_fast = tt.t_total = std::numeric_limits<double>::quiet_NaN();
    return tt;
  }
  double l = std::log(1.0 / eps);
  tt.t_fast = l / beta_f;
  tt.t_total = (1.0 / beta_f + 1.0 / (eps * beta_g)) * l;
  tt.valid = true;
  return tt;
}

CascadeEstimate cascade_epsilon(const std::vector<GainConstants>& levels) {
  if (levels.empty()) throw NumericError("cascade needs at least one level");
  CascadeEstimate ce;
  ce.product = 1.0;
  for (const auto& gc : levels) {
    double ec = epsilon_critical(gc);
    if (ec == 0.0) throw NumericError("degenerate level with eps_c = 0");
    ce.eps_c.push_back(ec);
    ce.product *= ec;
  }
  return ce;
}

}  // namespace nds
