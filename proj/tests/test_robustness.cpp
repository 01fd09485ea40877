#include <cmath>
#include <random>

#include "doctest.h"
#include "nds/robustness.hpp"

using namespace nds;

TEST_CASE("lemma 1 bound formula") {
  BoundCurve b = lemma1_bound(1.0, 1.0, 2.0, 0.5);
  CHECK(b.at(0.0) == doctest::Approx(2.5));
  CHECK(b.asymptote() == doctest::Approx(0.5));

  BoundCurve pure = lemma1_bound(2.0, 1.5, 3.0, 0.0);
  CHECK(pure.asymptote() == 0.0);
  CHECK(pure.at(1.0) == doctest::Approx(1.5 * 3.0 * std::exp(-2.0)));

  CHECK(lemma1_bound(0.5, 1.0, 0.0, 0.75).asymptote() == doctest::Approx(1.5));
}

TEST_CASE("lemma 2 reduces to lemma 1 when the gain vanishes") {
  BoundCurve l1 = lemma1_bound(1.3, 1.2, 2.0, 0.4);
  Lemma2Result l2 = lemma2_bound(1.3, 1.2, 2.0, 0.4, 0.0, 123.0);
  REQUIRE(l2.small_gain_ok);
  for (double t : {0.0, 0.5, 1.0, 5.0, 20.0})
    CHECK(l2.curve.at(t) == doctest::Approx(l1.at(t)).epsilon(1e-15));

  Lemma2Result tiny = lemma2_bound(1.3, 1.2, 2.0, 0.4, 1e-12, 1.0);
  REQUIRE(tiny.small_gain_ok);
  for (double t : {0.0, 1.0, 10.0}) CHECK(std::abs(tiny.curve.at(t) - l1.at(t)) <= 1e-9);
}

TEST_CASE("lemma 2 asymptote and small-gain violation") {
  Lemma2Result r = lemma2_bound(1.0, 1.0, 0.0, 0.0, 0.5, 2.0);
  REQUIRE(r.small_gain_ok);
  CHECK(r.curve.asymptote() == doctest::Approx(2.0));

  Lemma2Result bad = lemma2_bound(1.0, 2.0, 1.0, 0.1, 0.6, 1.0);
  CHECK_FALSE(bad.small_gain_ok);
  CHECK(bad.margin == doctest::Approx(0.5 - 0.6));  // beta/chi - kx

  // equality also violates: the denominator would vanish
  CHECK_FALSE(lemma2_bound(1.0, 2.0, 1.0, 0.1, 0.5, 1.0).small_gain_ok);
}

TEST_CASE("bounds are monotone in their parameters") {
  auto l1 = [](double beta, double chi, double r0, double d) {
    return lemma1_bound(beta, chi, r0, d).at(0.7);
  };
  double base = l1(1.0, 1.5, 2.0, 0.5);
  CHECK(l1(1.0, 1.5, 2.0 + 0.1, 0.5) > base);
  CHECK(l1(1.0, 1.5, 2.0, 0.5 + 0.1) > base);
  CHECK(l1(1.0, 1.5 + 0.1, 2.0, 0.5) > base);
  CHECK(l1(1.0 + 0.1, 1.5, 2.0, 0.5) < base);

  auto l2 = [](double beta, double chi, double kx) {
    return lemma2_bound(beta, chi, 1.0, 0.3, kx, 2.0).curve.at(0.7);
  };
  double b2 = l2(2.0, 1.2, 0.4);
  CHECK(l2(2.0, 1.2, 0.5) > b2);
  CHECK(l2(2.0, 1.3, 0.4) > b2);
  CHECK(l2(2.2, 1.2, 0.4) < b2);
}

namespace {

VectorField decay() {
  VectorField f;
  f.dim = 1;
  f.f = [](const Vec& x, double) { return (-x).eval(); };
  f.jac = [](const Vec&, double) { return (-Mat::Identity(1, 1)).eval(); };
  return f;
}

ContractionCertificate unit_certificate(double beta, double chi, double half_width) {
  ContractionCertificate c;
  c.beta = beta;
  c.chi = chi;
  c.domain = Box::cube(1, -half_width, half_width);
  return c;
}

}  // namespace

TEST_CASE("sinusoidal disturbance stays under the lemma 1 envelope") {
  VectorField disturbed;
  disturbed.dim = 1;
  disturbed.time_varying = true;
  disturbed.f = [](const Vec& x, double t) {
    Vec d(1);
    d[0] = -x[0] + 0.5 * std::sin(t);
    return d;
  };
  Vec xn(1), xd(1);
  xn[0] = 0.0;
  xd[0] = 1.0;  // R0 = 1
  VerificationReport rep = verify_bound(decay(), disturbed, unit_certificate(1.0, 1.0, 50.0),
                                        DisturbanceModel::bounded(0.5), xn, xd, 12.0);
  CHECK(rep.passed());
  CHECK(rep.max_ratio <= 1.0);
}

TEST_CASE("zero disturbance with identical initial conditions passes via the floor") {
  Vec x0(1);
  x0[0] = 0.5;
  VerificationReport rep = verify_bound(decay(), decay(), unit_certificate(1.0, 1.0, 50.0),
                                        DisturbanceModel::bounded(0.0), x0, x0, 5.0);
  CHECK(rep.passed());
}

TEST_CASE("affine state disturbance stays under the lemma 2 envelope") {
  VectorField disturbed;
  disturbed.dim = 1;
  disturbed.f = [](const Vec& x, double) { return (-x + 0.25 * x).eval(); };
  Vec xn(1), xd(1);
  xn[0] = 2.0;
  xd[0] = 2.0;
  // nominal decays from 2, so x00 = 2
  VerificationReport rep = verify_bound(decay(), disturbed, unit_certificate(1.0, 1.0, 50.0),
                                        DisturbanceModel::affine(0.0, 0.25, 2.0), xn, xd, 10.0);
  CHECK(rep.passed());
}

TEST_CASE("small-gain violation is reported instead of a bound") {
  VerificationReport rep =
      verify_bound(decay(), decay(), unit_certificate(1.0, 2.0, 50.0),
                   DisturbanceModel::affine(0.0, 0.6, 1.0), Vec::Zero(1), Vec::Ones(1), 5.0);
  CHECK(rep.status == VerificationReport::Status::SmallGainViolated);
  CHECK(rep.small_gain_margin < 0.0);
}

TEST_CASE("leaving the certified domain turns the verdict inconclusive") {
  Vec xn = Vec::Zero(1), xd(1);
  xd[0] = 1.0;
  VerificationReport rep = verify_bound(decay(), decay(), unit_certificate(1.0, 1.0, 0.5),
                                        DisturbanceModel::bounded(0.0), xn, xd, 5.0);
  CHECK(rep.status == VerificationReport::Status::Inconclusive);
  CHECK(rep.exit_time == doctest::Approx(0.0));
}

TEST_CASE("mini randomized lemma 1 suite") {
  std::mt19937_64 rng(2718);
  auto u01 = [&rng] { return double(rng() >> 11) * 0x1.0p-53; };
  for (int trial = 0; trial < 10; ++trial) {
    int n = 2 + int(rng() % 3);
    // G has symmetric part <= -beta I by construction; A = Theta^-1 G Theta
    double beta = 0.3 + u01();
    Mat m = Mat::NullaryExpr(n, n, [&](Eigen::Index, Eigen::Index) { return 2.0 * u01() - 1.0; });
    Mat g = m - (lambda_max_sym(m) + beta) * Mat::Identity(n, n);
    Mat theta = Mat::Identity(n, n);
    theta(0, 0) = 1.0 + u01();
    theta(0, n - 1) = 0.5 * u01();
    Mat a = theta.partialPivLu().solve(g * theta);

    VectorField nominal;
    nominal.dim = n;
    nominal.f = [a](const Vec& x, double) { return (a * x).eval(); };
    nominal.jac = [a](const Vec&, double) { return a; };

    double certified_beta = -lambda_max_sym(theta * a * theta.partialPivLu().inverse());
    double chi = spectral_cond(theta);
    REQUIRE(certified_beta > 0.0);

    double d_sup = 0.5 * u01() + 0.1;
    Vec dir = Vec::NullaryExpr(n, [&](Eigen::Index) { return 2.0 * u01() - 1.0; });
    dir.normalize();
    double omega = 1.0 + 3.0 * u01();
    VectorField disturbed;
    disturbed.dim = n;
    disturbed.time_varying = true;
    disturbed.f = [a, dir, d_sup, omega](const Vec& x, double t) {
      return (a * x + d_sup * std::sin(omega * t) * dir).eval();
    };

    ContractionCertificate cert;
    cert.beta = certified_beta;
    cert.chi = chi;
    cert.domain = Box::cube(n, -1e6, 1e6);

    Vec xn = Vec::NullaryExpr(n, [&](Eigen::Index) { return 2.0 * u01() - 1.0; });
    Vec xd = Vec::NullaryExpr(n, [&](Eigen::Index) { return 2.0 * u01() - 1.0; });
    VerificationReport rep = verify_bound(nominal, disturbed, cert,
                                          DisturbanceModel::bounded(d_sup), xn, xd,
                                          10.0 / certified_beta);
    CHECK_MESSAGE(rep.max_ratio <= 1.02, "trial " << trial << " ratio " << rep.max_ratio);
  }
}
