#pragma once

// The insulated-building case study: n floors of m rooms with nonlinear
// conductances, strong within a floor and eps-weak across floors. Provided
// in raw room-temperature coordinates (pairwise antisymmetric fluxes, so the
// total energy sum x_ij is invariant) and, for the 2x2 case, in barycentric
// coordinates (d1, d2, D) where the invariant has been eliminated.

#include <string>
#include <vector>

#include "nds/gains.hpp"
#include "nds/system_spec.hpp"

namespace nds {

struct BuildingOptions {
  int floors = 2;
  int rooms = 2;
  // conductance bodies; g entries may reference k and previously defined g's
  std::string f_body = "x + 0.5*sin(x)";
  std::vector<std::string> g_bodies = {"x + 0.5*sin(x)", "-k*g1(x)"};
  double epsilon = 0.1;
  double k = 0.5;
  double half_width = 10.0;  // analysis domain half width per state
};

/// Raw coordinates x_ij: within-floor chain coupling f, cross-floor coupling
/// eps g_j per room column. For floors = rooms = 2 this is exactly the
/// four-equation two-floor system.
SystemSpec building_raw(const BuildingOptions& opt = {});
std::string building_raw_source(const BuildingOptions& opt = {});

/// Barycentric coordinates for the 2x2 building:
///   d_i = (x_i2 - x_i1)/2,  D = ((x_22 + x_21) - (x_12 + x_11))/2.
/// Throws NumericError for other sizes.
SystemSpec building_barycentric(const BuildingOptions& opt = {});
std::string building_barycentric_source(const BuildingOptions& opt = {});

/// Coordinate maps between the raw 2x2 states and (d1, d2, D).
Vec raw_to_barycentric(const Vec& x4);
/// Inverse map; `total` is the conserved sum x11+x12+x21+x22.
Vec barycentric_to_raw(const Vec& d3, double total);

/// Reference certificate for the 2x2 case with f = g1 = x + sin(x)/2 and
/// g2 = -g1/2 in the identity metric: beta_f = 1/2, beta_g = 1/4,
/// d_f = 3/4, a_fx = sqrt(2)/4, a_fy = 3/4, d_g = 1, a_gx = sqrt(2)/2,
/// giving eps_c = sqrt(2)/7.
GainConstants building_reference_gains();

}  // namespace nds
