#include "nds/ensemble.hpp"

#include <mutex>

#include "nds/parallel.hpp"

namespace nds {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

double seeded_u01(std::uint64_t seed, long run, int coordinate) {
  std::uint64_t h = splitmix64(splitmix64(splitmix64(seed) + static_cast<std::uint64_t>(run)) +
                               static_cast<std::uint64_t>(coordinate));
  return double(h >> 11) * 0x1.0p-53;
}

Vec seeded_point(std::uint64_t seed, long run, const Box& box) {
  Vec p(box.dim());
  for (int i = 0; i < box.dim(); ++i)
    p[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * seeded_u01(seed, run, i);
  return p;
}

EnsembleResult run_ensemble(const VectorField& field, const EnsembleConfig& cfg) {
  if (cfg.runs < 1) throw NumericError("ensemble needs at least one run");
  if (cfg.ic_box.dim() != field.dim) throw NumericError("ensemble: ic box dimension mismatch");
  EnsembleResult res;
  res.ics.resize(static_cast<size_t>(cfg.runs));
  res.trajectories.resize(static_cast<size_t>(cfg.runs));
  for (int r = 0; r < cfg.runs; ++r) res.ics[static_cast<size_t>(r)] = seeded_point(cfg.seed, r, cfg.ic_box);

  std::exception_ptr error;
  std::mutex m;
  parallel_chunks(cfg.runs, [&](size_t, long b, long e) {
    try {
      for (long r = b; r < e; ++r)
        res.trajectories[static_cast<size_t>(r)] =
            integrate(field, res.ics[static_cast<size_t>(r)], cfg.integ);
    } catch (...) {
      std::lock_guard<std::mutex> lk(m);
      if (!error) error = std::current_exception();
    }
  });
  if (error) std::rethrow_exception(error);

  for (const auto& tr : res.trajectories)
    if (!tr.complete()) ++res.divergences;
  res.clusters = cluster_finals(res.trajectories, cfg.cluster_radius);
  return res;
}

std::vector<Cluster> cluster_finals(const std::vector<Trajectory>& trajectories, double radius) {
  std::vector<Cluster> clusters;
  for (const auto& tr : trajectories) {
    if (!tr.complete()) continue;
    const Vec& f = tr.final_state();
    bool placed = false;
    for (auto& c : clusters) {
      if ((f - c.representative).norm() <= radius) {
        ++c.count;
        placed = true;
        break;
      }
    }
    if (!placed) clusters.push_back(Cluster{f, 1});
  }
  return clusters;
}

TrackingTrace compare_full_reduced(const ModularSystem& ms, const Vec& xt0, const Vec& y0,
                                   double t_total, const IntegratorConfig& cfg) {
  TrackingTrace trace;
  trace.t_total = t_total;

  Vec s0(xt0.size() + y0.size());
  s0.head(xt0.size()) = xt0;
  s0.tail(y0.size()) = y0;
  Trajectory full = integrate(ms.stacked_field(), s0, cfg);
  Trajectory red = integrate(ms.reduced_field(), y0, cfg);
  trace.complete = full.complete() && red.complete();

  size_t n = std::min(full.t.size(), red.t.size());
  int nf = ms.n_fast();
  int ns = ms.n_slow();
  for (size_t i = 0; i < n; ++i) {
    double xt = full.x[i].head(nf).norm();
    double yt = (full.x[i].tail(ns) - red.x[i]).norm();
    trace.t.push_back(full.t[i]);
    trace.xt_norm.push_back(xt);
    trace.yt_err.push_back(yt);
    if (full.t[i] >= t_total) {
      trace.max_xt_post = std::max(trace.max_xt_post, xt);
      trace.max_yt_post = std::max(trace.max_yt_post, yt);
    }
  }
  return trace;
}

}  // namespace nds
