#pragma once

// Compiles a validated SystemSpec into flat evaluation tapes: the right-hand
// side, its exact (symbolically differentiated) Jacobian, and the explicit
// time derivative. Input signals are inlined as expressions of t before
// compilation, so evaluators depend on (state, t) only.

#include <memory>
#include <string>
#include <vector>

#include "nds/field.hpp"
#include "nds/sampling.hpp"
#include "nds/system_spec.hpp"

namespace nds {

class CompiledSystem {
 public:
  explicit CompiledSystem(SystemSpec spec);

  int dim() const;
  int n_fast() const;
  int n_slow() const;
  const std::vector<std::string>& states() const;
  const SystemSpec& spec() const;

  double param(const std::string& name) const;
  bool has_param(const std::string& name) const;
  double epsilon() const;

  /// Copy sharing the compiled tapes with one parameter rebound.
  CompiledSystem with_param(const std::string& name, double value) const;
  CompiledSystem with_epsilon(double eps) const;

  Vec rhs(const Vec& x, double t) const;
  Mat jacobian(const Vec& x, double t) const;
  /// Explicit time derivative of the RHS (nonzero only via inputs / t terms).
  Vec rhs_dt(const Vec& x, double t) const;

  bool time_varying() const;

  VectorField field() const;

  /// Analysis box over the states in canonical (fast, slow) order.
  Box domain_box() const;

 private:
  struct Program;
  CompiledSystem(std::shared_ptr<const Program> prog, std::vector<double> params);

  std::shared_ptr<const Program> prog_;
  std::vector<double> param_values_;
};

}  // namespace nds
