#pragma once

// Reproduction of the built-in building experiments: seeded ensembles in the
// raw temperature box, integrated in barycentric coordinates at
// eps/eps_c in {0.5, 2.5, 5}, with final-state clustering and, below the
// critical separation, tracking-bound overlays from the reference gains.

#include <cstdint>
#include <string>
#include <vector>

#include "nds/building.hpp"
#include "nds/ensemble.hpp"

namespace nds {

struct FigureRun {
  int figure = 1;          // 1, 2 or 3
  double eps_ratio = 0.5;  // eps / eps_c
  double epsilon = 0.0;
  double horizon = 0.0;
  double t_total = std::numeric_limits<double>::quiet_NaN();
  int runs = 0;
  std::uint64_t seed = 0;
  std::vector<Vec> ics_raw;               // drawn in [-5,5]^4
  std::vector<Trajectory> trajectories;   // (d1, d2, D) coordinates
  int divergences = 0;
  std::vector<Cluster> clusters;
  std::string regime;  // "converged" | "multi-equilibria" | "divergent"

  // tracking overlay, filled when eps < eps_c
  bool has_tracking = false;
  std::vector<double> m_xtilde_bound;      // per run
  std::vector<double> max_xt_post;         // per run, sup_{t >= t_total} |xt|
  std::vector<double> ytilde_asymptote;    // per run
  std::vector<double> max_yt_post;         // per run
};

/// Default horizon policy: 5 x t_total capped at 500 when eps < 1, else 100.
double figure_horizon(double epsilon);

FigureRun reproduce_figure(int figure, std::uint64_t seed = 20200521, int runs = 20);

}  // namespace nds
