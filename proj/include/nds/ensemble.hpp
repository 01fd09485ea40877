#pragma once

// Trajectory ensembles from seeded random initial conditions, final-state
// clustering, and full-vs-reduced tracking comparisons.

#include <cstdint>
#include <vector>

#include "nds/integrate.hpp"
#include "nds/sampling.hpp"
#include "nds/spreduce.hpp"

namespace nds {

/// Counter-based uniform draw: identical across platforms and thread counts.
double seeded_u01(std::uint64_t seed, long run, int coordinate);
Vec seeded_point(std::uint64_t seed, long run, const Box& box);

struct EnsembleConfig {
  int runs = 20;
  std::uint64_t seed = 0;
  Box ic_box;
  IntegratorConfig integ;
  double cluster_radius = 1e-2;
};

struct Cluster {
  Vec representative;  // final state of the first member
  int count = 0;
};

struct EnsembleResult {
  std::vector<Vec> ics;
  std::vector<Trajectory> trajectories;
  int divergences = 0;  // diverged or aborted runs
  std::vector<Cluster> clusters;
};

/// Integrates `runs` trajectories from seeded uniform draws over ic_box.
/// Members run in parallel; results are ordered by run index, so the thread
/// count never changes the output.
EnsembleResult run_ensemble(const VectorField& field, const EnsembleConfig& cfg);

/// Greedy clustering of the final states of completed trajectories.
std::vector<Cluster> cluster_finals(const std::vector<Trajectory>& trajectories, double radius);

struct TrackingTrace {
  std::vector<double> t;
  std::vector<double> xt_norm;   // |xt(t)|
  std::vector<double> yt_err;    // |y(t) - ybar(t)|
  double t_total = 0.0;
  double max_xt_post = 0.0;      // sup over t >= t_total
  double max_yt_post = 0.0;
  bool complete = false;
};

/// Integrates the transformed system and the reduced slow system from
/// (xt0, y0) and ybar(0) = y0 on a shared grid and reports the tracking
/// errors, with sups taken after t_total.
TrackingTrace compare_full_reduced(const ModularSystem& ms, const Vec& xt0, const Vec& y0,
                                   double t_total, const IntegratorConfig& cfg);

}  // namespace nds
