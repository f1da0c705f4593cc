#include <gtest/gtest.h>

#include <random>

#include "evcap/lolp.hpp"
#include "evcap/provision.hpp"
#include "oracles.hpp"

using namespace evcap;

namespace {

const std::vector<CustomerClass> kTwoClass{{50, 3.0, 5.0}, {7, 0.42, 5.0}};

bool meets(const std::vector<CustomerClass>& cls, int c, const QosTargets& t) {
  const auto beta = lolp(Scenario{c, cls});
  for (std::size_t j = 0; j < cls.size(); ++j) {
    if (beta[j] > t.delta[j]) return false;
  }
  return true;
}

// Smallest feasible capacity by plain linear search.
int linear_min(const std::vector<CustomerClass>& cls, const QosTargets& t) {
  for (int c = 0;; ++c) {
    if (meets(cls, c, t)) return c;
  }
}

}  // namespace

TEST(NormalHazard, AgreesWithErfc) {
  for (double y = -7.5; y <= 8.0; y += 0.25) {
    EXPECT_LT(oracle::rel_err(normal_hazard(y), oracle::hazard(y)), 1e-12) << y;
  }
}

TEST(NormalHazard, DeepTailBehavesLikeMinusY) {
  for (double y : {-9.0, -15.0, -40.0, -1e3}) {
    const double h = normal_hazard(y);
    EXPECT_TRUE(std::isfinite(h));
    // phi/Phi = -y + 1/(-y) - 2/(-y)^3 + ...
    EXPECT_NEAR(h, -y - 1.0 / y, 3.0 / std::pow(-y, 3));
  }
}

TEST(Psi, FixedPoints) {
  EXPECT_NEAR(psi(oracle::normal_pdf(0.0) / 0.5), 0.0, 1e-9);
  EXPECT_NEAR(psi(oracle::hazard(1.0)), 1.0, 1e-8);
  EXPECT_NEAR(psi(0.2876000), 1.0, 1e-5);
}

TEST(Psi, ResidualAndMonotone) {
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 1000; ++i) {
    const double x = 1e-6 + (10.0 - 1e-6) * i / 999.0;
    const double y = psi(x);
    EXPECT_LT(std::abs(normal_hazard(y) - x), 1e-9);
    EXPECT_LT(y, prev);
    prev = y;
  }
}

TEST(Psi, RejectsNonPositive) {
  EXPECT_THROW(psi(0.0), std::invalid_argument);
  EXPECT_THROW(psi(-1.0), std::invalid_argument);
  EXPECT_THROW(psi(std::nan("")), std::invalid_argument);
}

TEST(CapacityAsymptotic, TwoClassCloseToExact) {
  const QosTargets t{{0.03, 0.03}};
  const auto asym = capacity_asymptotic(kTwoClass, t);
  const auto exact = capacity_exact(kTwoClass, t);
  EXPECT_EQ(asym.dominant, 0u);
  EXPECT_EQ(exact.dominant_class, 0u);
  EXPECT_EQ(exact.capacity_exact, 348);
  EXPECT_LE(std::abs(asym.capacity - exact.capacity_exact), 0.1 * exact.capacity_exact);
}

TEST(CapacityAsymptotic, FormulaByHand) {
  const auto stats = offered_load_stats(kTwoClass);
  const double sd = std::sqrt(stats.variance);
  const double x = psi(0.03 / 50 * sd);
  const auto asym = capacity_asymptotic(kTwoClass, QosTargets{{0.03, 0.03}});
  EXPECT_NEAR(asym.x_star, x, 1e-12);
  EXPECT_NEAR(asym.capacity, stats.mean + x * sd, 1e-9);
}

TEST(CapacityAsymptotic, ErlangSquareRootStaffing) {
  const double q = 100.0;
  const double delta = 0.01;
  const auto asym = capacity_asymptotic({{1, 1.0, q}}, QosTargets{{delta}});
  EXPECT_NEAR(asym.capacity, q + psi(delta * std::sqrt(q)) * std::sqrt(q), 1e-9);
  const int exact = capacity_exact({{1, 1.0, q}}, QosTargets{{delta}}).capacity_exact;
  EXPECT_LE(std::abs(asym.capacity - exact), 3.0);
}

TEST(CapacityAsymptotic, NoLoadIsRejected) {
  EXPECT_THROW(capacity_asymptotic({{2, 1.0, 0.0}}, QosTargets{{0.1}}), std::invalid_argument);
}

TEST(CapacityExact, HandCases) {
  EXPECT_EQ(capacity_exact({{1, 1.0, 1.0}}, QosTargets{{0.5}}).capacity_exact, 1);
  const auto loose = capacity_exact({{4, 1.0, 1e-6}, {9, 1.0, 1e-6}}, QosTargets{{0.999999, 0.999999}});
  EXPECT_EQ(loose.capacity_exact, 9);
}

TEST(CapacityExact, PeakSettingOfSecondCaseStudy) {
  // Exact answer of the model for lambda = (12, 10), delta = (0.04, 0.01).
  const std::vector<CustomerClass> cls{{50, 3.0, 12.0}, {7, 0.42, 10.0}};
  const auto res = capacity_exact(cls, QosTargets{{0.04, 0.01}});
  EXPECT_EQ(res.capacity_exact, 582);
  EXPECT_NEAR(res.capacity_asymptotic, 555.085, 1e-3);
}

TEST(CapacityExact, MinimalAndDominanceSufficient) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> d(0.002, 0.2);
  for (int i = 0; i < 40; ++i) {
    auto s = oracle::random_scenario(rng, 3, 15, 10, 30.0);
    QosTargets t;
    for (std::size_t j = 0; j < s.classes.size(); ++j) t.delta.push_back(d(rng));
    const auto res = capacity_exact(s.classes, t);
    EXPECT_EQ(res.capacity_exact, linear_min(s.classes, t));
    EXPECT_TRUE(meets(s.classes, res.capacity_exact, t));
    EXPECT_FALSE(meets(s.classes, res.capacity_exact - 1, t));
    int bmax = 0;
    for (const auto& c : s.classes) bmax = std::max(bmax, c.b);
    EXPECT_GE(res.capacity_exact, bmax);

    // The dominant class alone pins the answer for every class.
    const std::size_t k = res.dominant_class;
    for (std::size_t j = 0; j < s.classes.size(); ++j) {
      EXPECT_LE(t.delta[k] / s.classes[k].b, t.delta[j] / s.classes[j].b + 1e-15);
    }
  }
}

TEST(CapacityExact, MonotoneInTargetsAndRates) {
  int prev = std::numeric_limits<int>::max();
  for (double delta = 0.001; delta <= 0.2; delta *= 1.3) {
    const int c = capacity_exact(kTwoClass, QosTargets{{delta, delta}}).capacity_exact;
    EXPECT_LE(c, prev);
    prev = c;
  }
  prev = 0;
  for (double lam = 1.0; lam <= 30.0; lam += 1.0) {
    const std::vector<CustomerClass> cls{{50, 3.0, lam}, {7, 0.42, 5.0}};
    const int c = capacity_exact(cls, QosTargets{{0.03, 0.03}}).capacity_exact;
    EXPECT_GE(c, prev);
    prev = c;
  }
}

TEST(CapacityExact, CeilingRaisesUnreachable) {
  EXPECT_THROW(capacity_exact({{1, 1.0, 1000.0}}, QosTargets{{1e-6}}, 1000), UnreachableTargets);
}

TEST(Savings, IdentityAndPositive) {
  EXPECT_DOUBLE_EQ(savings_vs_strict(kTwoClass, QosTargets{{1e-6, 1e-6}}, 1e-6), 0.0);
  const double s = savings_vs_strict(kTwoClass, QosTargets{{0.01, 0.01}}, 1e-6);
  const int loose = capacity_exact(kTwoClass, QosTargets{{0.01, 0.01}}).capacity_exact;
  const int strict = capacity_exact(kTwoClass, QosTargets{{1e-6, 1e-6}}).capacity_exact;
  EXPECT_GT(s, 0.0);
  EXPECT_DOUBLE_EQ(s, 100.0 * (1.0 - static_cast<double>(loose) / strict));
}
