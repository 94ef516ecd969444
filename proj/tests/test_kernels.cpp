#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include "fracgrid/kernels.hpp"

using namespace fracgrid;

namespace {

// Closed forms through the regularized lower incomplete gamma function.
double weighted_cell(double beta, double mu, double a, double b) {
  using boost::math::gamma_p;
  return std::pow(mu, -beta) * (gamma_p(beta, mu * b) - (a > 0.0 ? gamma_p(beta, mu * a) : 0.0));
}

double G(double alpha, double mu, double t) {
  return t > 0.0 ? std::pow(mu, -alpha) * boost::math::gamma_p(alpha, mu * t) : 0.0;
}

double int_G(double alpha, double mu, double t) {
  if (t <= 0.0) return 0.0;
  return t * G(alpha, mu, t) - alpha * std::pow(mu, -alpha - 1.0) * boost::math::gamma_p(alpha + 1.0, mu * t);
}

double l_cell(double alpha, double mu, double a, double b) {
  return G(alpha, mu, b) - G(alpha, mu, a) + mu * (int_G(alpha, mu, b) - int_G(alpha, mu, a));
}

double max_abs(const std::vector<double>& v, std::size_t from = 0) {
  double w = 0.0;
  for (std::size_t i = from; i < v.size(); ++i) w = std::max(w, std::abs(v[i]));
  return w;
}

} // namespace

TEST(TimeGrid, RejectsInvalid) {
  EXPECT_THROW(TimeGrid(0.0, 10), std::invalid_argument);
  EXPECT_THROW(TimeGrid(1.0, 0), std::invalid_argument);
  TimeGrid g(2.0, 8);
  EXPECT_DOUBLE_EQ(g.tau(), 0.25);
  EXPECT_DOUBLE_EQ(g.time(8), 2.0);
}

TEST(RlKernel, UnitExponentIsStep) {
  TimeGrid g(1.0, 7);
  auto k = rl_kernel(1.0, g);
  for (double c : k.cell_integrals()) EXPECT_DOUBLE_EQ(c, g.tau());
}

TEST(RlKernel, HalfOrderCellsMatchQuadrature) {
  TimeGrid g(2.0, 2);
  auto k = rl_kernel(0.5, g);
  boost::math::quadrature::tanh_sinh<double> ts;
  auto density = [](double t) { return 1.0 / std::sqrt(t) / std::tgamma(0.5); };
  EXPECT_NEAR(k.cell(0), ts.integrate(density, 0.0, 1.0), 1e-12);
  EXPECT_NEAR(k.cell(1), ts.integrate(density, 1.0, 2.0), 1e-12);
  EXPECT_NEAR(k.cell(0), 2.0 / std::sqrt(std::numbers::pi), 1e-15);
  EXPECT_NEAR(k.cell(1), 2.0 * (std::sqrt(2.0) - 1.0) / std::sqrt(std::numbers::pi), 1e-15);
}

TEST(RlKernel, MonotonicityFlagsFollowExponent) {
  TimeGrid g(1.0, 50);
  EXPECT_TRUE(rl_kernel(0.5, g).is_nonincreasing());
  EXPECT_FALSE(rl_kernel(1.5, g).is_nonincreasing());
  EXPECT_TRUE(rl_kernel(1.5, g).is_nonnegative());
  EXPECT_THROW(rl_kernel(0.0, g), std::domain_error);
  EXPECT_THROW(rl_kernel(-1.0, g), std::domain_error);
}

TEST(RlKernel, CellsSumToAntiderivative) {
  TimeGrid g(3.0, 600);
  for (double beta : {0.25, 0.5, 1.7}) {
    auto k = rl_kernel(beta, g);
    double sum = 0.0;
    for (double c : k.cell_integrals()) sum += c;
    EXPECT_NEAR(sum, std::pow(3.0, beta) / std::tgamma(beta + 1.0), 1e-12) << beta;
  }
}

TEST(WeightedKernel, MatchesIncompleteGamma) {
  TimeGrid g(1.0, 40);
  for (double beta : {0.3, 0.5, 0.8}) {
    auto k = weighted_rl_kernel(beta, 1.7, g);
    for (std::size_t i = 0; i < g.steps(); ++i)
      EXPECT_NEAR(k.cell(i), weighted_cell(beta, 1.7, g.time(i), g.time(i + 1)), 1e-10) << beta << " " << i;
  }
}

TEST(PcPair, WeightedLMatchesClosedForm) {
  TimeGrid g(1.0, 30);
  const double alpha = 0.4, mu = 1.3;
  auto pair = pc_pair({alpha, mu}, g);
  for (std::size_t i = 0; i < g.steps(); ++i)
    EXPECT_NEAR(pair.l().cell(i), l_cell(alpha, mu, g.time(i), g.time(i + 1)), 1e-9) << i;
  EXPECT_TRUE(pair.k().is_nonnegative());
  EXPECT_TRUE(pair.k().is_nonincreasing());
}

TEST(PcPair, KFlagsHoldForAllParameters) {
  TimeGrid g(1.0, 64);
  for (double alpha : {0.1, 0.5, 0.9})
    for (double mu : {0.0, 0.5, 3.0}) {
      auto pair = pc_pair({alpha, mu}, g);
      EXPECT_TRUE(pair.k().is_nonnegative());
      EXPECT_TRUE(pair.k().is_nonincreasing());
    }
  EXPECT_THROW(pc_pair({1.0, 0.0}, g), std::domain_error);
  EXPECT_THROW(pc_pair({0.5, -1.0}, g), std::domain_error);
}

// g_{1/2} * g_{1/2} = 1 exactly, but the product rule with l frozen to its
// cell average has a scale-invariant error at the first node: 4/pi - 1.
TEST(PcPair, HalfOrderResidualProfile) {
  TimeGrid g(1.0, 1000);
  auto pair = pc_pair({0.5, 0.0}, g);
  const auto r = pair_residual_profile(pair.k(), pair.l());
  EXPECT_NEAR(r[0], 4.0 / std::numbers::pi - 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(pair.pair_residual(), max_abs(r));
  EXPECT_LT(max_abs(r, 10), 0.01);
  double l1 = 0.0;
  for (double x : r) l1 += g.tau() * std::abs(x);
  EXPECT_LT(l1, 1e-3);
}

TEST(PcPair, WeightedResidualDecaysUnderRefinement) {
  auto tail = [](std::size_t M) {
    TimeGrid g(1.0, M);
    auto pair = pc_pair({0.5, 1.0}, g);
    const auto r = pair_residual_profile(pair.k(), pair.l());
    double l1 = 0.0;
    for (double x : r) l1 += g.tau() * std::abs(x);
    return l1;
  };
  const double coarse = tail(250), fine = tail(500);
  EXPECT_LT(fine, 0.6 * coarse);
}

TEST(Convolve, UnitKernelIntegrates) {
  TimeGrid g(2.0, 20);
  std::vector<double> ones(20, 1.0);
  auto out = convolve(rl_kernel(1.0, g), ones);
  for (std::size_t m = 0; m < out.size(); ++m) EXPECT_NEAR(out[m], g.time(m + 1), 1e-14);
}

TEST(Convolve, ZeroAndLinearity) {
  TimeGrid g(1.0, 64);
  auto k = rl_kernel(0.3, g);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> x(64), y(64), z(64), zero(64, 0.0);
  for (std::size_t i = 0; i < 64; ++i) {
    x[i] = U(rng);
    y[i] = U(rng);
    z[i] = x[i] + 2.5 * y[i];
  }
  for (double v : convolve(k, zero)) EXPECT_EQ(v, 0.0);
  auto cx = convolve(k, x), cy = convolve(k, y), cz = convolve(k, z);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(cz[i], cx[i] + 2.5 * cy[i], 1e-13);
}

TEST(Convolve, LengthMismatchThrows) {
  TimeGrid g(1.0, 10);
  std::vector<double> v(9, 1.0);
  EXPECT_THROW(convolve(rl_kernel(0.5, g), v), std::invalid_argument);
}

TEST(Resolvent, SatisfiesDefiningEquation) {
  TimeGrid g(1.0, 500);
  auto pair = pc_pair({0.5, 0.0}, g);
  for (std::size_t n : {1u, 4u, 16u, 64u}) {
    auto h = resolvent_kernel(pair.l(), n);
    EXPECT_LE(resolvent_residual(pair.l(), h, n), 1e-10) << n;
    EXPECT_TRUE(h.is_nonnegative()) << n;
  }
  EXPECT_THROW(resolvent_kernel(pair.l(), 0), std::invalid_argument);
}

TEST(Resolvent, DegenerateLeadingCellThrows) {
  TimeGrid g(1.0, 3);
  KernelGrid l(g, {0.0, 0.0, 0.0});
  EXPECT_THROW(resolvent_kernel(l, 2), std::domain_error);
}

TEST(Resolvent, ApproximateIdentityTrend) {
  TimeGrid g(1.0, 500);
  auto pair = pc_pair({0.5, 0.0}, g);
  double prev = 1e300;
  for (std::size_t n : {1u, 4u, 16u, 64u}) {
    auto h = resolvent_kernel(pair.l(), n);
    double mass = 0.0;
    for (double c : h.cell_integrals()) mass += c;
    const double err = std::abs(mass - 1.0);
    EXPECT_LT(err, prev) << n;
    prev = err;
  }
}

TEST(Yosida, FlagsAndL1Convergence) {
  TimeGrid g(1.0, 500);
  auto pair = pc_pair({0.5, 0.0}, g);
  double prev = 1e300;
  for (std::size_t n : {1u, 4u, 16u, 64u}) {
    auto kn = yosida_kernel(pair, n);
    EXPECT_TRUE(kn.is_nonnegative()) << n;
    EXPECT_TRUE(kn.is_nonincreasing()) << n;
    EXPECT_TRUE(std::isfinite(kn.cell(0)));
    const double d = l1_distance(kn, pair.k());
    EXPECT_LT(d, prev) << n;
    prev = d;
  }
}

TEST(FundamentalIdentity, ConstantSequence) {
  TimeGrid g(1.0, 200);
  auto kn = yosida_kernel(pc_pair({0.5, 0.0}, g), 16);
  std::vector<double> u(200, 0.7);
  auto chk = check_fundamental_identity(kn, u, Truncation::plus);
  EXPECT_LE(chk.identityResidual, 1e-12);
}

TEST(FundamentalIdentity, RandomSequenceBothVariants) {
  TimeGrid g(1.0, 300);
  auto kn = yosida_kernel(pc_pair({0.5, 0.0}, g), 16);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> u(300);
  for (double& x : u) x = U(rng);
  for (auto v : {Truncation::plus, Truncation::minus}) {
    auto chk = check_fundamental_identity(kn, u, v);
    EXPECT_LE(chk.identityResidual, 1e-10);
    EXPECT_LE(chk.inequalityViolation, g.tau());
  }
}

TEST(FundamentalIdentity, NonnegativeSequenceMinusVariant) {
  TimeGrid g(1.0, 100);
  auto kn = yosida_kernel(pc_pair({0.3, 0.0}, g), 4);
  std::vector<double> u(100);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::sin(0.1 * i) + 1.0;
  auto chk = check_fundamental_identity(kn, u, Truncation::minus);
  EXPECT_EQ(chk.identityResidual, 0.0);
  EXPECT_EQ(chk.inequalityViolation, 0.0);
}

TEST(FundamentalIdentity, RejectsIncreasingKernel) {
  TimeGrid g(1.0, 10);
  std::vector<double> u(10, 1.0);
  EXPECT_THROW(check_fundamental_identity(rl_kernel(1.5, g), u, Truncation::plus), std::invalid_argument);
}

TEST(ClassicalKernel, IsUnitMassAtOrigin) {
  TimeGrid g(1.0, 5);
  auto k = classical_kernel(g);
  EXPECT_EQ(k.cell(0), 1.0);
  EXPECT_TRUE(k.is_nonincreasing());
  EXPECT_TRUE(k.is_nonnegative());
}
