#pragma once

// Deterministic low-discrepancy sampling of box domains: a stratified grid
// union a Halton sequence. Certificates report which points were checked, so
// the same call always yields the same points.

#include <string>
#include <vector>

#include "nds/linalg.hpp"

namespace nds {

struct Box {
  std::vector<double> lo, hi;
  std::vector<std::string> labels;  // optional, parallel to lo/hi

  int dim() const { return static_cast<int>(lo.size()); }
  Vec center() const;
  bool contains(const Vec& x, double slack = 0.0) const;
  static Box cube(int dim, double lo, double hi);
  Box concat(const Box& other) const;
  Box head(int k) const;
  Box tail(int k) const;
};

/// Radical-inverse (van der Corput) value of index i in the given base.
double radical_inverse(unsigned base, unsigned long long i);

/// Deterministic sample of `count` points: half stratified-grid cell centers,
/// half Halton points (prime bases per dimension).
std::vector<Vec> sample_box(const Box& box, int count);

}  // namespace nds
