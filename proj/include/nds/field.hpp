#pragma once

#include <functional>

#include "nds/linalg.hpp"

namespace nds {

/// An evaluatable vector field dx/dt = f(x, t) with its Jacobian.
struct VectorField {
  int dim = 0;
  std::function<Vec(const Vec&, double)> f;
  std::function<Mat(const Vec&, double)> jac;  // empty: use fd_jacobian
  bool time_varying = false;

  Mat jacobian(const Vec& x, double t) const;
};

/// Central finite-difference Jacobian, used when no exact one is attached
/// and as the cross-check oracle in tests.
Mat fd_jacobian(const std::function<Vec(const Vec&, double)>& f, const Vec& x, double t,
                double h = 1e-5);

}  // namespace nds
