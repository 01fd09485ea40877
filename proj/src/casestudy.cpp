#include "nds/casestudy.hpp"

#include <cmath>
#include <mutex>

#include "nds/parallel.hpp"

namespace nds {

double figure_horizon(double epsilon) {
  TransientTimes tt = transient_time(0.5, 0.25, epsilon);
  if (!tt.valid) return 100.0;
  return std::min(500.0, 5.0 * tt.t_total);
}

FigureRun reproduce_figure(int figure, std::uint64_t seed, int runs) {
  if (figure < 1 || figure > 3) throw NumericError("figure must be 1, 2 or 3");
  if (runs < 1) throw NumericError("reproduce needs at least one run");

  FigureRun out;
  out.figure = figure;
  out.eps_ratio = figure == 1 ? 0.5 : (figure == 2 ? 2.5 : 5.0);
  double eps_c = std::sqrt(2.0) / 7.0;
  out.epsilon = out.eps_ratio * eps_c;
  out.runs = runs;
  out.seed = seed;
  out.horizon = figure_horizon(out.epsilon);
  TransientTimes tt = transient_time(0.5, 0.25, out.epsilon);
  if (tt.valid) out.t_total = tt.t_total;

  BuildingOptions opt;
  opt.epsilon = out.epsilon;
  CompiledSystem sys(building_barycentric(opt));

  Box raw_box = Box::cube(4, -5.0, 5.0);
  out.ics_raw.resize(static_cast<size_t>(runs));
  for (int r = 0; r < runs; ++r) out.ics_raw[static_cast<size_t>(r)] = seeded_point(seed, r, raw_box);

  IntegratorConfig cfg;
  cfg.horizon = out.horizon;
  cfg.output_points = 501;

  out.trajectories.resize(static_cast<size_t>(runs));
  std::exception_ptr error;
  std::mutex m;
  VectorField field = sys.field();
  parallel_chunks(runs, [&](size_t, long b, long e) {
    try {
      for (long r = b; r < e; ++r)
        out.trajectories[static_cast<size_t>(r)] =
            integrate(field, raw_to_barycentric(out.ics_raw[static_cast<size_t>(r)]), cfg);
    } catch (...) {
      std::lock_guard<std::mutex> lk(m);
      if (!error) error = std::current_exception();
    }
  });
  if (error) std::rethrow_exception(error);

  for (const auto& tr : out.trajectories)
    if (!tr.complete()) ++out.divergences;
  out.clusters = cluster_finals(out.trajectories, 1e-2);
  if (out.divergences > 0)
    out.regime = "divergent";
  else if (out.clusters.size() >= 2)
    out.regime = "multi-equilibria";
  else
    out.regime = "converged";

  if (out.epsilon < eps_c && tt.valid) {
    out.has_tracking = true;
    CertifyResult fast = certify_partial(sys.with_epsilon(0.0).field(), 2, Metric::identity(2),
                                         sys.domain_box(), 4096);
    if (!fast.contracting) throw NumericError("building fast block failed certification");
    ModularSystem ms = to_standard_form(sys, fast.certificate);

    out.m_xtilde_bound.resize(static_cast<size_t>(runs));
    out.max_xt_post.resize(static_cast<size_t>(runs));
    out.ytilde_asymptote.resize(static_cast<size_t>(runs));
    out.max_yt_post.resize(static_cast<size_t>(runs));
    std::exception_ptr terror;
    parallel_chunks(runs, [&](size_t, long b, long e) {
      try {
        for (long r = b; r < e; ++r) {
          Vec d0 = raw_to_barycentric(out.ics_raw[static_cast<size_t>(r)]);
          Vec xt0 = d0.head(2);
          Vec y0 = d0.tail(1);
          GainConstants gc = building_reference_gains();
          gc.m_bar = estimate_m_bar(ms, y0, out.horizon);
          gc.delta_offset = 0.0;  // the reduced system starts at y0
          Lemma3Bounds l3 = lemma3_bounds(gc, out.epsilon, xt0.norm());
          TrackingTrace trace = compare_full_reduced(ms, xt0, y0, tt.t_total, cfg);
          out.m_xtilde_bound[static_cast<size_t>(r)] = l3.m_xtilde;
          out.ytilde_asymptote[static_cast<size_t>(r)] = l3.ytilde_asymptote;
          out.max_xt_post[static_cast<size_t>(r)] = trace.max_xt_post;
          out.max_yt_post[static_cast<size_t>(r)] = trace.max_yt_post;
        }
      } catch (...) {
        std::lock_guard<std::mutex> lk(m);
        if (!terror) terror = std::current_exception();
      }
    });
    if (terror) std::rethrow_exception(terror);
  }
  return out;
}

}  // namespace nds
