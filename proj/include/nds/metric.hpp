#pragma once

// Contraction metrics Theta with Theta^T Theta > 0. Constant matrices are the
// common case; state/time-dependent metrics come either as expressions of the
// states (Theta_dot assembled symbolically via the chain rule) or as opaque
// callables (Theta_dot finite-differenced along the flow, h = 1e-6).

#include <functional>
#include <string>
#include <vector>

#include "nds/compile.hpp"
#include "nds/expr.hpp"
#include "nds/field.hpp"

namespace nds {

class Metric {
 public:
  static Metric identity(int n);
  static Metric constant(Mat theta);
  static Metric from_expressions(std::vector<std::vector<std::string>> entries,
                                 std::vector<std::string> state_names);
  static Metric from_callable(int n, std::function<Mat(const Vec&, double)> theta);

  int dim() const { return n_; }
  bool is_constant() const { return kind_ == Kind::Constant; }

  Mat theta(const Vec& x, double t) const;
  /// Total derivative along trajectories of `field`.
  Mat theta_dot(const Vec& x, double t, const VectorField& field) const;
  double cond(const Vec& x, double t) const;

  const std::string& description() const { return desc_; }

 private:
  enum class Kind { Constant, Expressions, Callable };
  Kind kind_ = Kind::Constant;
  int n_ = 0;
  Mat theta_const_;
  double cond_const_ = 1.0;
  std::vector<std::vector<Expr>> exprs_;          // entries
  std::vector<std::vector<Expr>> exprs_dt_;       // d/dt entries
  std::vector<std::vector<std::vector<Expr>>> exprs_dx_;  // [i][j][state]
  std::vector<std::string> state_names_;
  std::function<Mat(const Vec&, double)> callable_;
  std::string desc_ = "identity";
};

}  // namespace nds
