#include "nds/contraction.hpp"

#include <atomic>
#include <cmath>
#include <mutex>

#include "nds/parallel.hpp"

namespace nds {

namespace {

struct WorstSample {
  double lambda = -std::numeric_limits<double>::infinity();
  double cond = 1.0;
  long index = -1;
  Vec point;

  void absorb(const WorstSample& o) {
    cond = std::max(cond, o.cond);
    if (o.lambda > lambda || (o.lambda == lambda && o.index < index && o.index >= 0)) {
      lambda = o.lambda;
      index = o.index;
      point = o.point;
    }
  }
};

// Evaluates lambda_max(F_sym) and cond(Theta) per sample and reduces to the
// worst sample deterministically (ties resolved by sample index).
template <class PerSample>
WorstSample scan_samples(const std::vector<Vec>& pts, const PerSample& per) {
  long n = static_cast<long>(pts.size());
  long chunk_guess = (n + 255) / 256;
  std::vector<WorstSample> partial(static_cast<size_t>(std::max(chunk_guess, long(max_threads())) + 8));
  std::mutex grow;
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  parallel_chunks(n, [&](size_t chunk, long b, long e) {
    if (failed.load()) return;
    WorstSample acc;
    try {
      for (long i = b; i < e; ++i) {
        WorstSample s = per(pts[static_cast<size_t>(i)], i);
        acc.absorb(s);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lk(grow);
      if (!error) error = std::current_exception();
      failed.store(true);
      return;
    }
    std::lock_guard<std::mutex> lk(grow);
    if (chunk >= partial.size()) partial.resize(chunk + 1);
    partial[chunk] = acc;
  });
  if (error) std::rethrow_exception(error);
  WorstSample total;
  for (const auto& p : partial) total.absorb(p);
  return total;
}

std::vector<Vec> sample_with_time(const Box& domain, int samples, double time_span) {
  if (time_span > 0.0) {
    Box with_t = domain;
    with_t.lo.push_back(0.0);
    with_t.hi.push_back(time_span);
    with_t.labels.clear();
    return sample_box(with_t, samples);
  }
  return sample_box(domain, samples);
}

}  // namespace

CertifyResult certify(const VectorField& field, const Metric& metric, const Box& domain,
                      int samples, double time_span) {
  if (field.dim != domain.dim()) throw NumericError("certify: domain/field dimension mismatch");
  if (metric.dim() != field.dim) throw NumericError("certify: metric dimension mismatch");
  std::vector<Vec> pts = sample_with_time(domain, samples, time_span);

  const bool constant_metric = metric.is_constant();
  Mat theta0, theta0_inv;
  double cond0 = 1.0;
  if (constant_metric) {
    theta0 = metric.theta(Vec::Zero(field.dim), 0.0);
    theta0_inv = theta0.partialPivLu().inverse();
    cond0 = metric.cond(Vec::Zero(field.dim), 0.0);
  }

  WorstSample worst = scan_samples(pts, [&](const Vec& p, long idx) {
    double t = time_span > 0.0 ? p[field.dim] : 0.0;
    Vec x = p.head(field.dim);
    Mat j = field.jacobian(x, t);
    WorstSample s;
    s.index = idx;
    s.point = x;
    if (constant_metric) {
      s.lambda = lambda_max_sym(theta0 * j * theta0_inv);
      s.cond = cond0;
    } else {
      Mat th = metric.theta(x, t);
      Mat th_inv = th.partialPivLu().inverse();
      if (!th_inv.allFinite()) throw NumericError("singular metric at a sample point");
      Mat f = metric.theta_dot(x, t, field) * th_inv + th * j * th_inv;
      s.lambda = lambda_max_sym(f);
      s.cond = spectral_cond(th);
    }
    return s;
  });

  CertifyResult result;
  result.certificate.domain = domain;
  result.certificate.samples = static_cast<int>(pts.size());
  result.certificate.metric_desc = metric.description();
  result.certificate.time_span = time_span;
  result.certificate.worst_point = worst.point;
  result.certificate.worst_eig = worst.lambda;
  result.certificate.chi = worst.cond;
  if (worst.lambda < 0.0) {
    result.contracting = true;
    result.certificate.beta = -worst.lambda;
  } else {
    result.contracting = false;
    result.violation = ContractionViolation{worst.point, worst.lambda};
  }
  return result;
}

CertifyResult certify_partial(const VectorField& stacked, int n_x, const Metric& metric_x,
                              const Box& joint_domain, int samples, double time_span) {
  if (stacked.dim != joint_domain.dim())
    throw NumericError("certify_partial: domain/field dimension mismatch");
  if (n_x <= 0 || n_x > stacked.dim) throw NumericError("certify_partial: bad fast dimension");
  if (metric_x.dim() != n_x) throw NumericError("certify_partial: metric dimension mismatch");
  std::vector<Vec> pts = sample_with_time(joint_domain, samples, time_span);

  const bool constant_metric = metric_x.is_constant();
  Mat theta0, theta0_inv;
  double cond0 = 1.0;
  if (constant_metric) {
    theta0 = metric_x.theta(Vec::Zero(n_x), 0.0);
    theta0_inv = theta0.partialPivLu().inverse();
    cond0 = metric_x.cond(Vec::Zero(n_x), 0.0);
  }

  WorstSample worst = scan_samples(pts, [&](const Vec& p, long idx) {
    double t = time_span > 0.0 ? p[stacked.dim] : 0.0;
    Vec q = p.head(stacked.dim);
    Mat jxx = stacked.jacobian(q, t).topLeftCorner(n_x, n_x);
    WorstSample s;
    s.index = idx;
    s.point = q;
    if (constant_metric) {
      s.lambda = lambda_max_sym(theta0 * jxx * theta0_inv);
      s.cond = cond0;
    } else {
      Vec x = q.head(n_x);
      Mat th = metric_x.theta(x, t);
      Mat th_inv = th.partialPivLu().inverse();
      if (!th_inv.allFinite()) throw NumericError("singular metric at a sample point");
      // flow of the fast block with the slow part frozen at this sample
      VectorField sub;
      sub.dim = n_x;
      sub.f = [&stacked, q, n_x](const Vec& xs, double ts) {
        Vec full = q;
        full.head(n_x) = xs;
        return stacked.f(full, ts).head(n_x).eval();
      };
      Mat f = metric_x.theta_dot(x, t, sub) * th_inv + th * jxx * th_inv;
      s.lambda = lambda_max_sym(f);
      s.cond = spectral_cond(th);
    }
    return s;
  });

  CertifyResult result;
  result.certificate.domain = joint_domain;
  result.certificate.samples = static_cast<int>(pts.size());
  result.certificate.metric_desc = metric_x.description();
  result.certificate.time_span = time_span;
  result.certificate.worst_point = worst.point;
  result.certificate.worst_eig = worst.lambda;
  result.certificate.chi = worst.cond;
  if (worst.lambda < 0.0) {
    result.contracting = true;
    result.certificate.beta = -worst.lambda;
  } else {
    result.contracting = false;
    result.violation = ContractionViolation{worst.point, worst.lambda};
  }
  return result;
}

HierarchyCheck check_hierarchy(const VectorField& fast_joint, int n_x,
                               const VectorField& slow_reduced, const Metric& metric_x,
                               const Metric& metric_y, const Box& joint_domain, int samples) {
  const int n = fast_joint.dim;
  const int n_y = n - n_x;
  if (n_y <= 0 || slow_reduced.dim != n_y || joint_domain.dim() != n)
    throw NumericError("check_hierarchy: dimension mismatch");
  if (!metric_x.is_constant() || !metric_y.is_constant())
    throw NumericError("check_hierarchy: constant block metrics required");

  Mat thx = metric_x.theta(Vec::Zero(n_x), 0.0);
  Mat thx_inv = thx.partialPivLu().inverse();
  Mat thy = metric_y.theta(Vec::Zero(n_y), 0.0);
  Mat thy_inv = thy.partialPivLu().inverse();

  std::vector<Vec> pts = sample_box(joint_domain, samples);

  // precompute per-sample blocks once, then sweep the nu grid
  struct Blocks {
    Mat fx, b, fy_inv;
  };
  std::vector<Blocks> blocks(pts.size());
  std::atomic<bool> fy_ok{true};
  double fy_upper = -std::numeric_limits<double>::infinity();
  double b_bound = 0.0;
  std::mutex agg;
  std::exception_ptr error;
  parallel_chunks(static_cast<long>(pts.size()), [&](size_t, long bgn, long end) {
    double local_fy = -std::numeric_limits<double>::infinity();
    double local_b = 0.0;
    try {
      for (long i = bgn; i < end; ++i) {
        const Vec& p = pts[static_cast<size_t>(i)];
        Mat jf = fast_joint.jacobian(p, 0.0);
        Mat fx = symmetric_part(thx * jf.topLeftCorner(n_x, n_x) * thx_inv);
        Mat b = 0.5 * thx * jf.topRightCorner(n_x, n_y) * thy_inv;
        Mat jy = slow_reduced.jacobian(p.tail(n_y), 0.0);
        Mat fy = symmetric_part(thy * jy * thy_inv);
        Eigen::SelfAdjointEigenSolver<Mat> es(fy);
        if (es.eigenvalues().maxCoeff() >= 0.0) fy_ok.store(false);
        local_fy = std::max(local_fy, es.eigenvalues().maxCoeff());
        local_b = std::max(local_b, b.norm());
        blocks[static_cast<size_t>(i)] = {fx, b, fy.partialPivLu().inverse()};
      }
    } catch (...) {
      std::lock_guard<std::mutex> lk(agg);
      if (!error) error = std::current_exception();
      return;
    }
    std::lock_guard<std::mutex> lk(agg);
    fy_upper = std::max(fy_upper, local_fy);
    b_bound = std::max(b_bound, local_b);
  });
  if (error) std::rethrow_exception(error);

  HierarchyCheck hc;
  hc.samples = static_cast<int>(pts.size());
  hc.b_bound = b_bound;
  hc.fy_upper = fy_upper;
  if (!fy_ok.load())
    throw NumericError("check_hierarchy: F_y^s not negative definite at a sample");

  for (int i = 0; i <= 20; ++i) {
    double nu = std::pow(0.5, i);
    double margin = -std::numeric_limits<double>::infinity();
    for (const auto& blk : blocks) {
      Mat schur = blk.fx - nu * nu * blk.b * blk.fy_inv * blk.b.transpose();
      margin = std::max(margin, lambda_max_sym(schur));
      if (margin >= 0.0) break;
    }
    if (margin < 0.0) {
      hc.contracting = true;
      hc.nu = nu;
      hc.margin = margin;
      return hc;
    }
    hc.margin = margin;  // margin at the smallest nu tried so far
    hc.nu = nu;
  }
  hc.contracting = false;
  return hc;
}

}  // namespace nds
