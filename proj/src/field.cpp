#include "nds/field.hpp"

namespace nds {

Mat VectorField::jacobian(const Vec& x, double t) const {
  if (jac) return jac(x, t);
  return fd_jacobian(f, x, t);
}

Mat fd_jacobian(const std::function<Vec(const Vec&, double)>& f, const Vec& x, double t,
                double h) {
  const int n = static_cast<int>(x.size());
  Mat j(n, n);
  Vec xp = x, xm = x;
  for (int c = 0; c < n; ++c) {
    xp[c] += h;
    xm[c] -= h;
    j.col(c) = (f(xp, t) - f(xm, t)) / (2.0 * h);
    xp[c] = x[c];
    xm[c] = x[c];
  }
  return j;
}

}  // namespace nds
