#include "nds/sampling.hpp"

#include <cmath>

namespace nds {

Vec Box::center() const {
  Vec c(dim());
  for (int i = 0; i < dim(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
  return c;
}

bool Box::contains(const Vec& x, double slack) const {
  for (int i = 0; i < dim(); ++i)
    if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
  return true;
}

Box Box::cube(int dim, double l, double h) {
  Box b;
  b.lo.assign(dim, l);
  b.hi.assign(dim, h);
  return b;
}

Box Box::concat(const Box& other) const {
  Box b = *this;
  b.lo.insert(b.lo.end(), other.lo.begin(), other.lo.end());
  b.hi.insert(b.hi.end(), other.hi.begin(), other.hi.end());
  if (!labels.empty() || !other.labels.empty()) {
    b.labels = labels;
    b.labels.resize(lo.size());
    b.labels.insert(b.labels.end(), other.labels.begin(), other.labels.end());
    b.labels.resize(b.lo.size());
  }
  return b;
}

Box Box::head(int k) const {
  Box b;
  b.lo.assign(lo.begin(), lo.begin() + k);
  b.hi.assign(hi.begin(), hi.begin() + k);
  if (!labels.empty()) b.labels.assign(labels.begin(), labels.begin() + k);
  return b;
}

Box Box::tail(int k) const {
  Box b;
  b.lo.assign(lo.end() - k, lo.end());
  b.hi.assign(hi.end() - k, hi.end());
  if (!labels.empty() && static_cast<int>(labels.size()) >= k)
    b.labels.assign(labels.end() - k, labels.end());
  return b;
}

double radical_inverse(unsigned base, unsigned long long i) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * (i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

namespace {

const unsigned kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                            31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

}  // namespace

std::vector<Vec> sample_box(const Box& box, int count) {
  const int d = box.dim();
  std::vector<Vec> pts;
  if (d == 0 || count <= 0) return pts;
  pts.reserve(static_cast<size_t>(count) + 8);

  // stratified grid: cell centers of a k^d lattice covering half the budget
  int grid_budget = count / 2;
  int k = std::max(1, static_cast<int>(std::floor(std::pow(double(grid_budget), 1.0 / d))));
  long long cells = 1;
  for (int i = 0; i < d; ++i) cells *= k;
  for (long long c = 0; c < cells; ++c) {
    long long rest = c;
    Vec p(d);
    for (int i = 0; i < d; ++i) {
      int idx = static_cast<int>(rest % k);
      rest /= k;
      double u = (idx + 0.5) / k;
      p[i] = box.lo[i] + u * (box.hi[i] - box.lo[i]);
    }
    pts.push_back(std::move(p));
  }

  // Halton fills the remainder; skip the first few points (poor uniformity)
  int halton_count = count - static_cast<int>(pts.size());
  for (int n = 0; n < halton_count; ++n) {
    Vec p(d);
    for (int i = 0; i < d; ++i) {
      unsigned base = kPrimes[i % (sizeof(kPrimes) / sizeof(kPrimes[0]))];
      double u = radical_inverse(base, static_cast<unsigned long long>(n) + 17);
      p[i] = box.lo[i] + u * (box.hi[i] - box.lo[i]);
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

}  // namespace nds
