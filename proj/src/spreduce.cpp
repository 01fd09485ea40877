#include "nds/spreduce.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "nds/integrate.hpp"
#include "nds/parallel.hpp"

namespace nds {

namespace {

Vec stack(const Vec& x, const Vec& y) {
  Vec s(x.size() + y.size());
  s.head(x.size()) = x;
  s.tail(y.size()) = y;
  return s;
}

}  // namespace

SlowManifold::SlowManifold(CompiledSystem system, ContractionCertificate fast_certificate)
    : sys0_(system.with_epsilon(0.0)), cert_(std::move(fast_certificate)) {
  if (sys0_.n_fast() < 1 || sys0_.n_slow() < 1)
    throw NumericError("slow manifold needs a fast/slow partition");
}

Vec SlowManifold::fast_residual(const Vec& x, const Vec& y, double t) const {
  return sys0_.rhs(stack(x, y), t).head(sys0_.n_fast());
}

Mat SlowManifold::fast_jacobian_x(const Vec& x, const Vec& y, double t) const {
  int nf = sys0_.n_fast();
  return sys0_.jacobian(stack(x, y), t).topLeftCorner(nf, nf);
}

Vec SlowManifold::solve(const Vec& y, double t) const {
  return solve(y, t, Vec::Zero(sys0_.n_fast()));
}

Vec SlowManifold::solve(const Vec& y, double t, const Vec& x_init) const {
  Vec x = x_init;
  Vec r = fast_residual(x, y, t);
  double rn = r.norm();
  double best = rn;
  for (int iter = 0; iter < max_iterations(); ++iter) {
    if (rn <= residual_tol()) return x;
    Eigen::FullPivLU<Mat> lu(fast_jacobian_x(x, y, t));
    if (!lu.isInvertible())
      throw NumericError("singular fast Jacobian in slow-manifold solve "
                         "(contradicts partial contraction)");
    Vec dx = lu.solve(-r);
    // damped step: halve until the residual decreases
    double alpha = 1.0;
    for (int halve = 0; halve < 40; ++halve) {
      Vec x_try = x + alpha * dx;
      Vec r_try;
      bool ok = true;
      try {
        r_try = fast_residual(x_try, y, t);
      } catch (const EvalError&) {
        ok = false;
      }
      if (ok && r_try.norm() < rn) {
        x = x_try;
        r = r_try;
        rn = r_try.norm();
        best = std::min(best, rn);
        break;
      }
      alpha *= 0.5;
      if (halve == 39) {
        throw NoConvergence("slow-manifold Newton stalled (best residual " +
                                std::to_string(best) + ")",
                            best);
      }
    }
  }
  if (rn <= residual_tol()) return x;
  throw NoConvergence(
      "slow-manifold Newton did not converge (best residual " + std::to_string(best) + ")", best);
}

Mat SlowManifold::sensitivity_y(const Vec& y, double t) const {
  int nf = sys0_.n_fast();
  int ns = sys0_.n_slow();
  Vec xb = solve(y, t);
  Mat j = sys0_.jacobian(stack(xb, y), t);
  Eigen::FullPivLU<Mat> lu(j.topLeftCorner(nf, nf));
  if (!lu.isInvertible())
    throw NumericError("singular fast Jacobian in sensitivity solve");
  return lu.solve(-j.topRightCorner(nf, ns));
}

Vec SlowManifold::sensitivity_t(const Vec& y, double t) const {
  int nf = sys0_.n_fast();
  if (!sys0_.time_varying()) return Vec::Zero(nf);
  Vec xb = solve(y, t);
  Vec dfdt = sys0_.rhs_dt(stack(xb, y), t).head(nf);
  Eigen::FullPivLU<Mat> lu(fast_jacobian_x(xb, y, t));
  if (!lu.isInvertible())
    throw NumericError("singular fast Jacobian in sensitivity solve");
  return lu.solve(-dfdt);
}

ModularSystem::ModularSystem(CompiledSystem sys, SlowManifold manifold)
    : sys_(std::move(sys)), sys0_(sys_.with_epsilon(0.0)), manifold_(std::move(manifold)) {}

ModularSystem ModularSystem::with_epsilon(double eps) const {
  return ModularSystem(sys_.with_epsilon(eps), manifold_);
}

Vec ModularSystem::xbar(const Vec& y, double t) const { return manifold_.solve(y, t); }

Vec ModularSystem::f_tilde(const Vec& xt, const Vec& y, double t) const {
  Vec xb = xbar(y, t);
  return sys0_.rhs(stack(xb + xt, y), t).head(n_fast());
}

Vec ModularSystem::g_scaled(const Vec& x, const Vec& y, double t) const {
  double eps = sys_.epsilon();
  if (eps > 0.0) return sys_.rhs(stack(x, y), t).tail(n_slow()) / eps;
  return sys_.with_epsilon(eps_slope_ref_).rhs(stack(x, y), t).tail(n_slow()) / eps_slope_ref_;
}

Vec ModularSystem::g_x(const Vec& x, const Vec& y, double t) const {
  double eps = sys_.epsilon();
  Vec s = stack(x, y);
  if (eps > 0.0) return (sys_.rhs(s, t).head(n_fast()) - sys0_.rhs(s, t).head(n_fast())) / eps;
  return (sys_.with_epsilon(eps_slope_ref_).rhs(s, t).head(n_fast()) -
          sys0_.rhs(s, t).head(n_fast())) /
         eps_slope_ref_;
}

Vec ModularSystem::g_bar(const Vec& y, double t) const {
  return g_scaled(xbar(y, t), y, t);
}

Vec ModularSystem::delta_g(const Vec& xt, const Vec& y, double t) const {
  Vec xb = xbar(y, t);
  return g_scaled(xb + xt, y, t) - g_scaled(xb, y, t);
}

ModularSystem::ManifoldPoint ModularSystem::manifold_point(const Vec& y, double t) const {
  ManifoldPoint mp;
  mp.xb = manifold_.solve(y, t);
  int nf = n_fast();
  int ns = n_slow();
  Mat j0 = sys0_.jacobian(stack(mp.xb, y), t);
  Eigen::FullPivLU<Mat> lu(j0.topLeftCorner(nf, nf));
  if (!lu.isInvertible())
    throw NumericError("singular fast Jacobian in sensitivity solve");
  mp.sens_y = lu.solve(-j0.topRightCorner(nf, ns));
  if (sys0_.time_varying())
    mp.sens_t = lu.solve(-sys0_.rhs_dt(stack(mp.xb, y), t).head(nf));
  else
    mp.sens_t = Vec::Zero(nf);
  return mp;
}

Vec ModularSystem::delta_f(const Vec& xt, const Vec& y, double t) const {
  ManifoldPoint mp = manifold_point(y, t);
  Vec x = mp.xb + xt;
  Vec df = g_x(x, y, t);
  if (mp.sens_y.norm() > 0.0) {
    Vec gb = g_scaled(mp.xb, y, t);
    Vec dg = g_scaled(x, y, t) - gb;
    df -= mp.sens_y * (gb + dg);
  }
  if (sys0_.time_varying()) {
    double eps = sys_.epsilon();
    if (eps <= 0.0)
      throw NumericError("delta_f with inputs requires eps > 0 (slow input convention)");
    df -= mp.sens_t / eps;
  }
  return df;
}

Vec ModularSystem::full_fast(const Vec& xt, const Vec& y, double t) const {
  ManifoldPoint mp = manifold_point(y, t);
  Vec s = sys_.rhs(stack(mp.xb + xt, y), t);
  Vec out = s.head(n_fast());
  if (mp.sens_y.norm() > 0.0) out -= mp.sens_y * s.tail(n_slow());
  if (sys0_.time_varying()) out -= mp.sens_t;
  return out;
}

Vec ModularSystem::full_slow(const Vec& xt, const Vec& y, double t) const {
  Vec xb = xbar(y, t);
  return sys_.rhs(stack(xb + xt, y), t).tail(n_slow());
}

VectorField ModularSystem::stacked_field() const {
  ModularSystem copy = *this;
  VectorField vf;
  vf.dim = n_fast() + n_slow();
  vf.time_varying = sys_.time_varying();
  int nf = n_fast();
  int ns = n_slow();
  vf.f = [copy, nf, ns](const Vec& s, double t) {
    Vec xt = s.head(nf);
    Vec y = s.tail(ns);
    ManifoldPoint mp = copy.manifold_point(y, t);
    Vec r = copy.sys_.rhs(stack(mp.xb + xt, y), t);
    Vec fast = r.head(nf);
    if (mp.sens_y.norm() > 0.0) fast -= mp.sens_y * r.tail(ns);
    if (copy.sys0_.time_varying()) fast -= mp.sens_t;
    return stack(fast, r.tail(ns).eval());
  };
  return vf;
}

VectorField ModularSystem::reduced_field() const {
  ModularSystem copy = *this;
  VectorField vf;
  vf.dim = n_slow();
  vf.time_varying = sys_.time_varying();
  vf.f = [copy](const Vec& y, double t) {
    // slow RHS on the manifold; exact at any eps including 0
    Vec xb = copy.xbar(y, t);
    return copy.sys_.rhs(stack(xb, y), t).tail(copy.n_slow()).eval();
  };
  return vf;
}

ModularSystem to_standard_form(const CompiledSystem& sys,
                               const ContractionCertificate& fast_certificate) {
  if (sys.n_fast() < 1 || sys.n_slow() < 1)
    throw NumericError("standard form needs declared fast and slow states");
  if (!sys.has_param("epsilon"))
    throw NumericError("standard form needs an epsilon parameter");

  // the slow block must vanish at eps = 0
  CompiledSystem sys0 = sys.with_epsilon(0.0);
  std::vector<Vec> probes = sample_box(sys.domain_box(), 32);
  for (const auto& p : probes) {
    Vec slow = sys0.rhs(p, 0.0).tail(sys.n_slow());
    double scale = 1.0 + sys0.rhs(p, 0.0).norm();
    if (slow.norm() > 1e-9 * scale)
      throw NumericError("slow RHS does not vanish at eps = 0; system is not in the "
                         "weak-coupling form");
  }
  return ModularSystem(sys, SlowManifold(sys, fast_certificate));
}

namespace {

// min d + lambda * sum(alpha) subject to d + alpha . phi_i >= target_i,
// all variables >= 0. Solved through the dual (k+1 rows, N columns) with a
// dense tableau; the primal optimum is read off the slack reduced costs.
struct EnvelopeFit {
  double d = 0.0;
  std::vector<double> alpha;
};

EnvelopeFit fit_envelope(const std::vector<double>& targets,
                         const std::vector<std::vector<double>>& phi, double lambda) {
  const int n = static_cast<int>(targets.size());
  if (n == 0) throw NumericError("envelope fit needs samples");
  const int k = static_cast<int>(phi.empty() ? 0 : phi[0].size());
  const int rows = k + 1;
  const int cols = n + rows;

  // tableau for: min -sum(target_i y_i) s.t. [1; phi^T] y + s = (1, lambda..)
  Mat t(rows + 1, cols + 1);
  t.setZero();
  for (int i = 0; i < n; ++i) {
    t(0, i) = 1.0;
    for (int j = 0; j < k; ++j) t(1 + j, i) = phi[static_cast<size_t>(i)][j];
    t(rows, i) = -targets[static_cast<size_t>(i)];
  }
  for (int r = 0; r < rows; ++r) t(r, n + r) = 1.0;
  t(0, cols) = 1.0;
  for (int j = 0; j < k; ++j) t(1 + j, cols) = lambda;

  std::vector<int> basis(rows);
  for (int r = 0; r < rows; ++r) basis[r] = n + r;

  const double tiny = 1e-12;
  long max_iters = 50L * (cols + rows);
  for (long iter = 0;; ++iter) {
    if (iter > max_iters) throw NumericError("envelope fit: simplex iteration cap exceeded");
    // entering column: most negative objective coefficient
    int enter = -1;
    double best = -tiny;
    for (int c = 0; c < cols; ++c)
      if (t(rows, c) < best) {
        best = t(rows, c);
        enter = c;
      }
    if (enter < 0) break;  // optimal
    // ratio test
    int leave = -1;
    double best_ratio = 0.0;
    for (int r = 0; r < rows; ++r) {
      if (t(r, enter) > tiny) {
        double ratio = t(r, cols) / t(r, enter);
        if (leave < 0 || ratio < best_ratio - tiny ||
            (std::abs(ratio - best_ratio) <= tiny && basis[r] < basis[leave])) {
          leave = r;
          best_ratio = ratio;
        }
      }
    }
    if (leave < 0) throw NumericError("envelope fit: dual unbounded");
    // pivot
    t.row(leave) /= t(leave, enter);
    for (int r = 0; r <= rows; ++r) {
      if (r == leave) continue;
      double f = t(r, enter);
      if (f != 0.0) t.row(r) -= f * t.row(leave);
    }
    basis[leave] = enter;
  }

  EnvelopeFit fit;
  fit.d = std::max(0.0, t(rows, n + 0));
  fit.alpha.resize(k);
  for (int j = 0; j < k; ++j) fit.alpha[static_cast<size_t>(j)] = std::max(0.0, t(rows, n + 1 + j));
  return fit;
}

struct SampleRow {
  double df_norm, dg_norm, xt_norm, y_norm;
};

std::vector<SampleRow> collect_rows(const ModularSystem& ms, const Box& domain, int samples) {
  std::vector<Vec> pts = sample_box(domain, samples);
  std::vector<SampleRow> rows(pts.size());
  std::exception_ptr error;
  std::mutex m;
  parallel_chunks(static_cast<long>(pts.size()), [&](size_t, long b, long e) {
    try {
      for (long i = b; i < e; ++i) {
        const Vec& p = pts[static_cast<size_t>(i)];
        Vec y = p.tail(ms.n_slow());
        Vec xb = ms.xbar(y, 0.0);
        Vec xt = p.head(ms.n_fast()) - xb;
        SampleRow r;
        r.df_norm = ms.delta_f(xt, y, 0.0).norm();
        r.dg_norm = ms.delta_g(xt, y, 0.0).norm();
        r.xt_norm = xt.norm();
        r.y_norm = y.norm();
        rows[static_cast<size_t>(i)] = r;
      }
    } catch (...) {
      std::lock_guard<std::mutex> lk(m);
      if (!error) error = std::current_exception();
    }
  });
  if (error) std::rethrow_exception(error);
  return rows;
}

}  // namespace

GainEstimate estimate_gain_constants(const ModularSystem& ms,
                                     const ContractionCertificate& fast_cert,
                                     const ContractionCertificate& slow_cert, int samples) {
  if (!(ms.epsilon() > 0.0))
    throw NumericError("gain estimation needs eps > 0 to separate the perturbation blocks");
  std::vector<SampleRow> rows = collect_rows(ms, ms.domain_box(), samples);

  std::vector<double> df_t, dg_t;
  std::vector<std::vector<double>> df_phi, dg_phi;
  df_t.reserve(rows.size());
  for (const auto& r : rows) {
    df_t.push_back(r.df_norm);
    df_phi.push_back({r.xt_norm, r.y_norm});
    dg_t.push_back(r.dg_norm);
    dg_phi.push_back({r.xt_norm});
  }
  EnvelopeFit ff = fit_envelope(df_t, df_phi, 1.0);
  EnvelopeFit fg = fit_envelope(dg_t, dg_phi, 1.0);

  GainEstimate est;
  est.samples = static_cast<int>(rows.size());
  est.constants.d_f = 1.01 * ff.d;
  est.constants.a_fx = 1.01 * ff.alpha[0];
  est.constants.a_fy = 1.01 * ff.alpha[1];
  est.constants.d_g = 1.01 * fg.d;
  est.constants.a_gx = 1.01 * fg.alpha[0];
  est.constants.chi_f = fast_cert.chi;
  est.constants.beta_f = fast_cert.beta;
  est.constants.chi_g = slow_cert.chi;
  est.constants.beta_g = slow_cert.beta;

  // re-verify domination on the same samples
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    worst = std::max(worst, r.df_norm - (est.constants.d_f + est.constants.a_fx * r.xt_norm +
                                         est.constants.a_fy * r.y_norm));
    worst = std::max(worst, r.dg_norm - (est.constants.d_g + est.constants.a_gx * r.xt_norm));
  }
  est.worst_margin = worst;
  if (worst > 1e-9)
    throw NumericError("gain constants failed re-verification after fitting");

  // superlinear sniff test: refit |df| on the inner half of |xt| and compare
  std::vector<double> radii;
  for (const auto& r : rows) radii.push_back(r.xt_norm);
  std::nth_element(radii.begin(), radii.begin() + radii.size() / 2, radii.end());
  double median = radii[radii.size() / 2];
  std::vector<double> in_t;
  std::vector<std::vector<double>> in_phi;
  for (const auto& r : rows)
    if (r.xt_norm <= median) {
      in_t.push_back(r.df_norm);
      in_phi.push_back({r.xt_norm, r.y_norm});
    }
  if (!in_t.empty()) {
    EnvelopeFit inner = fit_envelope(in_t, in_phi, 1.0);
    if (ff.alpha[0] > 2.0 * inner.alpha[0] + 0.05) est.superlinear_warning = true;
  }
  return est;
}

GainCheck verify_gain_constants(const ModularSystem& ms, const GainConstants& gc,
                                const Box& domain, int samples) {
  std::vector<Vec> pts = sample_box(domain, samples);
  GainCheck check;
  check.worst_margin = -std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    Vec y = p.tail(ms.n_slow());
    Vec xb = ms.xbar(y, 0.0);
    Vec xt = p.head(ms.n_fast()) - xb;
    double df = ms.delta_f(xt, y, 0.0).norm();
    double dg = ms.delta_g(xt, y, 0.0).norm();
    double m1 = df - (gc.d_f + gc.a_fx * xt.norm() + gc.a_fy * y.norm());
    double m2 = dg - (gc.d_g + gc.a_gx * xt.norm());
    double m = std::max(m1, m2);
    if (m > check.worst_margin) {
      check.worst_margin = m;
      check.worst_point = p;
    }
  }
  check.ok = check.worst_margin <= 1e-9;
  return check;
}

double estimate_m_bar(const ModularSystem& ms, const Vec& y0, double horizon) {
  IntegratorConfig cfg;
  cfg.horizon = horizon;
  cfg.output_points = 401;
  Trajectory tr = integrate(ms.reduced_field(), y0, cfg);
  double sup = 0.0;
  for (const auto& y : tr.x) sup = std::max(sup, y.norm());
  return 1.05 * sup;
}

SPReport analyze_reduction(const CompiledSystem& sys, std::optional<GainConstants> provided,
                           int samples, std::optional<double> xt0_norm) {
  if (sys.n_fast() < 1 || sys.n_slow() < 1)
    throw NumericError("reduction needs declared fast and slow states");
  double eps = sys.epsilon();
  if (!(eps > 0.0)) throw NumericError("reduction needs eps > 0");

  SPReport rep;
  rep.epsilon = eps;
  rep.samples = samples;
  rep.has_inputs = sys.time_varying();

  Box domain = sys.domain_box();
  int nf = sys.n_fast();
  int ns = sys.n_slow();

  CertifyResult fast = certify_partial(sys.with_epsilon(0.0).field(), nf, Metric::identity(nf),
                                       domain, samples);
  if (!fast.contracting)
    throw NumericError("fast block is not partially contracting at eps = 0");
  rep.beta_f = fast.certificate.beta;
  rep.chi_f = fast.certificate.chi;

  ModularSystem ms = to_standard_form(sys, fast.certificate);

  // reduced slow field gbar (unscaled by eps)
  ModularSystem ms_copy = ms;
  VectorField gbar_field;
  gbar_field.dim = ns;
  gbar_field.time_varying = sys.time_varying();
  gbar_field.f = [ms_copy](const Vec& y, double t) { return ms_copy.g_bar(y, t); };
  CertifyResult slow = certify(gbar_field, Metric::identity(ns), domain.tail(ns), samples);
  if (!slow.contracting)
    throw NumericError("reduced slow field is not contracting");
  rep.beta_g = slow.certificate.beta;
  rep.chi_g = slow.certificate.chi;

  GainConstants gc;
  if (provided.has_value()) {
    gc = *provided;
    rep.constants_source = "provided";
    GainCheck check = verify_gain_constants(ms, gc, domain, std::min(samples, 4096));
    rep.constants_verified = check.ok;
    rep.constants_margin = check.worst_margin;
  } else {
    GainEstimate est = estimate_gain_constants(ms, fast.certificate, slow.certificate, samples);
    gc = est.constants;
    rep.constants_source = "fitted";
    rep.constants_verified = true;
    rep.constants_margin = est.worst_margin;
    rep.superlinear_warning = est.superlinear_warning;
  }

  // worst slow start inside the domain for the reduced-trajectory bound
  Vec y_corner(ns);
  Box ybox = domain.tail(ns);
  for (int i = 0; i < ns; ++i)
    y_corner[i] = std::max(std::abs(ybox.lo[i]), std::abs(ybox.hi[i]));
  double m_horizon = std::min(1e4, 6.0 / (eps * std::max(gc.beta_g, 1e-6)));
  gc.m_bar = estimate_m_bar(ms, y_corner, m_horizon);
  gc.delta_offset = 0.0;

  rep.constants = gc;
  rep.epsilon_c = epsilon_critical(gc);
  rep.margin = 1.0 - eps / rep.epsilon_c;

  double x0n;
  if (xt0_norm.has_value()) {
    x0n = *xt0_norm;
  } else {
    Vec hw(nf);
    for (int i = 0; i < nf; ++i) hw[i] = 0.5 * (domain.hi[i] - domain.lo[i]);
    x0n = hw.norm();
  }
  rep.xt0_norm = x0n;

  Lemma3Bounds l3 = lemma3_bounds(gc, eps, x0n);
  rep.bounds_valid = l3.valid;
  rep.m_xtilde = l3.m_xtilde;
  rep.ytilde_asymptote = l3.ytilde_asymptote;
  TransientTimes tt = transient_time(gc.beta_f, gc.beta_g, eps);
  rep.t_fast = tt.valid ? tt.t_fast : std::numeric_limits<double>::quiet_NaN();
  rep.t_total = tt.valid ? tt.t_total : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

}  // namespace nds
