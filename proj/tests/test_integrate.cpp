#include <cmath>

#include "doctest.h"
#include "nds/building.hpp"
#include "nds/compile.hpp"
#include "nds/integrate.hpp"

using namespace nds;

namespace {

VectorField decay_field() {
  VectorField f;
  f.dim = 1;
  f.f = [](const Vec& x, double) { return Vec(-x); };
  f.jac = [](const Vec&, double) { return -Mat::Identity(1, 1); };
  return f;
}

}  // namespace

TEST_CASE("exponential decay to 1e-8") {
  IntegratorConfig cfg;
  cfg.horizon = 1.0;
  Vec x0(1);
  x0[0] = 1.0;
  Trajectory tr = integrate(decay_field(), x0, cfg);
  CHECK(tr.complete());
  CHECK(tr.final_time() == 1.0);
  CHECK(std::abs(tr.final_state()[0] - std::exp(-1.0)) <= 1e-8);
}

TEST_CASE("fixed RK4 shows fourth-order convergence") {
  IntegratorConfig cfg;
  cfg.method = IntegratorConfig::Method::RK4Fixed;
  cfg.horizon = 1.0;
  cfg.output_points = 2;
  Vec x0(1);
  x0[0] = 1.0;

  cfg.fixed_step = 0.05;
  double err_h = std::abs(integrate(decay_field(), x0, cfg).final_state()[0] - std::exp(-1.0));
  cfg.fixed_step = 0.025;
  double err_h2 = std::abs(integrate(decay_field(), x0, cfg).final_state()[0] - std::exp(-1.0));
  double ratio = err_h / err_h2;
  CHECK(ratio >= 12.0);
  CHECK(ratio <= 20.0);
}

TEST_CASE("harmonic oscillator conserves energy to 1e-6 over T = 100") {
  VectorField f;
  f.dim = 2;
  f.f = [](const Vec& x, double) {
    Vec d(2);
    d[0] = x[1];
    d[1] = -x[0];
    return d;
  };
  IntegratorConfig cfg;
  cfg.horizon = 100.0;
  cfg.abs_tol = 1e-12;
  cfg.rel_tol = 1e-10;
  cfg.output_points = 401;
  Vec x0(2);
  x0[0] = 1.0;
  x0[1] = 0.0;
  Trajectory tr = integrate(f, x0, cfg);
  REQUIRE(tr.complete());
  for (size_t i = 0; i < tr.t.size(); ++i) {
    double energy = tr.x[i].squaredNorm();
    CHECK(std::abs(energy - 1.0) <= 1e-6);
  }
}

TEST_CASE("blow-up is flagged with its time") {
  VectorField f;  // x' = x^2, x(0)=1 escapes at t = 1
  f.dim = 1;
  f.f = [](const Vec& x, double) { return Vec(x.array().square().matrix()); };
  IntegratorConfig cfg;
  cfg.horizon = 2.0;
  Vec x0(1);
  x0[0] = 1.0;
  Trajectory tr = integrate(f, x0, cfg);
  CHECK(tr.diverged);
  CHECK(tr.blowup_time == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(tr.final_state().norm() >= 1e6);
}

TEST_CASE("step underflow near a time singularity is reported") {
  VectorField f;  // x' = 1/(1 - t): integrable blow-up of the vector field
  f.dim = 1;
  f.time_varying = true;
  f.f = [](const Vec&, double t) {
    Vec d(1);
    if (t >= 1.0) throw EvalError("domain error: division by zero");
    d[0] = 1.0 / (1.0 - t);
    return d;
  };
  IntegratorConfig cfg;
  cfg.horizon = 2.0;
  cfg.output_points = 3;
  Vec x0 = Vec::Zero(1);
  Trajectory tr = integrate(f, x0, cfg);
  CHECK(tr.stalled);
  CHECK(tr.stall_time == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("decoupled building floors equalize at eps = 0") {
  CompiledSystem sys = CompiledSystem(building_raw()).with_epsilon(0.0);
  IntegratorConfig cfg;
  cfg.horizon = 20.0;
  Vec x0(4);
  x0 << 4.0, -3.0, 2.5, -5.0;
  Trajectory tr = integrate(sys.field(), x0, cfg);
  REQUIRE(tr.complete());
  Vec d = raw_to_barycentric(tr.final_state());
  CHECK(std::abs(d[0]) <= 1e-6);
  CHECK(std::abs(d[1]) <= 1e-6);
  // sum is conserved, the floor difference persists at eps = 0
  CHECK(tr.final_state().sum() == doctest::Approx(x0.sum()).epsilon(1e-9));
}

TEST_CASE("output grid is exact and monotone") {
  IntegratorConfig cfg;
  cfg.horizon = 3.0;
  cfg.output_points = 7;
  Vec x0(1);
  x0[0] = 1.0;
  Trajectory tr = integrate(decay_field(), x0, cfg);
  REQUIRE(tr.t.size() == 7);
  for (size_t i = 0; i < tr.t.size(); ++i) CHECK(std::abs(tr.t[i] - 0.5 * i) <= 1e-15);
  CHECK(tr.index_at(1.5) == 3);
}
