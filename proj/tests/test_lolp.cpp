#include <gtest/gtest.h>

#include <random>

#include "evcap/lolp.hpp"
#include "oracles.hpp"

using namespace evcap;

namespace {

Scenario toy() {
  return Scenario{1000, {{50, 3.0, 14.0}, {7, 0.42, 14.0}, {5, 0.2, 14.0}}};
}

Scenario with_q(Scenario s, std::size_t k, double q) {
  s.classes[k].lambda = q * s.classes[k].mu;
  return s;
}

// Central differences of any beta(scenario) map with respect to q_k.
template <class F>
std::vector<double> fd_column(const Scenario& s, std::size_t k, F&& beta) {
  const double q = traffic_intensity(s.classes[k]);
  const double h = std::max(1e-5 * q, 1e-7);
  const auto up = beta(with_q(s, k, q + h));
  std::vector<double> out(s.classes.size());
  if (q - h <= 0.0) {
    const auto mid = beta(s);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = (up[j] - mid[j]) / h;
    return out;
  }
  const auto down = beta(with_q(s, k, q - h));
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = (up[j] - down[j]) / (2 * h);
  return out;
}

}  // namespace

TEST(Occupancy, HandRecursion) {
  const auto occ = occupancy(Scenario{2, {{1, 1.0, 1.0}}});
  ASSERT_EQ(occ.capacity(), 2);
  EXPECT_NEAR(occ.alpha[0], 0.4, 1e-15);
  EXPECT_NEAR(occ.alpha[1], 0.4, 1e-15);
  EXPECT_NEAR(occ.alpha[2], 0.2, 1e-15);
}

TEST(Occupancy, UnservableClassLeavesEmptySystem) {
  const auto occ = occupancy(Scenario{5, {{10, 1.0, 3.0}}});
  EXPECT_EQ(occ.alpha, (std::vector<double>{1, 0, 0, 0, 0, 0}));
  EXPECT_EQ(lolp(Scenario{5, {{10, 1.0, 3.0}}})[0], 1.0);
}

TEST(Occupancy, NormalizedAndNonnegative) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto s = oracle::random_scenario(rng, 4, 40, 2000, 60.0);
    const auto occ = occupancy(s);
    double sum = 0.0;
    for (double a : occ.alpha) {
      EXPECT_GE(a, 0.0);
      sum += a;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Occupancy, HugeSystemStaysFinite) {
  const Scenario s{1'000'000, {{3, 1.0, 200'000.0}, {1, 1.0, 400'000.0}}};
  const auto beta = lolp(s);
  for (double b : beta.beta) {
    EXPECT_TRUE(std::isfinite(b));
    EXPECT_GE(b, 0.0);
    EXPECT_LE(b, 1.0);
  }
  EXPECT_GT(beta[0], beta[1]);
}

TEST(Lolp, ToyScenarioMatchesEnumeration) {
  // Values from full product-form enumeration of the 3-class system.
  const auto beta = lolp(toy());
  EXPECT_NEAR(beta[0], 0.06997102797208021, 1e-12);
  EXPECT_NEAR(beta[1], 0.00782353039100947, 1e-12);
  EXPECT_NEAR(beta[2], 0.005528320868884218, 1e-12);
}

TEST(Lolp, SmallHandCases) {
  EXPECT_NEAR(lolp(Scenario{1, {{1, 1.0, 1.0}}})[0], 0.5, 1e-15);
  const auto idle = lolp(Scenario{40, {{3, 1.0, 0.0}, {5, 2.0, 0.0}}});
  EXPECT_EQ(idle[0], 0.0);
  EXPECT_EQ(idle[1], 0.0);
}

TEST(Lolp, ZeroLoadClassStillReported) {
  const Scenario s{10, {{2, 1.0, 3.0}, {4, 1.0, 0.0}}};
  const auto beta = lolp(s);
  ASSERT_EQ(beta.size(), 2u);
  const auto ref = oracle::brute_force_lolp(s);
  EXPECT_NEAR(beta[0], ref[0], 1e-13);
  EXPECT_NEAR(beta[1], ref[1], 1e-13);
}

TEST(Lolp, LargerDemandSeesMoreBlocking) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 100; ++i) {
    const auto s = oracle::random_scenario(rng, 4, 30, 300, 20.0);
    const auto beta = lolp(s);
    for (std::size_t a = 0; a < s.classes.size(); ++a) {
      for (std::size_t b = 0; b < s.classes.size(); ++b) {
        if (s.classes[a].b >= s.classes[b].b) EXPECT_GE(beta[a], beta[b]);
      }
    }
  }
}

TEST(Lolp, ErlangBReduction) {
  for (double q : {0.1, 1.0, 10.0, 40.0}) {
    for (int c = 1; c <= 50; ++c) {
      EXPECT_NEAR(lolp(Scenario{c, {{1, 1.0, q}}})[0], oracle::erlang_b(c, q), 1e-12)
          << "C=" << c << " q=" << q;
    }
  }
}

TEST(Lolp, SingleClassMonotone) {
  for (int b : {1, 3, 8}) {
    double prev = 1.0;
    for (int c = b; c <= 300; ++c) {
      const double beta = lolp(Scenario{c, {{b, 1.0, 12.0}}})[0];
      EXPECT_LE(beta, prev + 1e-15);
      prev = beta;
    }
    prev = 0.0;
    for (int i = 1; i <= 60; ++i) {
      const double beta = lolp(Scenario{60, {{b, 1.0, 0.5 * i}}})[0];
      EXPECT_GE(beta, prev - 1e-15);
      prev = beta;
    }
  }
}

// Multi-rate systems break monotonicity in general. Pinned so a change in
// behaviour is noticed.
TEST(Lolp, MultiRateNonMonotoneCounterexample) {
  const Scenario s{23, {{7, 1.0, 5.29012529}, {8, 1.0, 4.38010833}, {5, 1.0, 2.51677006}}};
  const auto before = lolp(s);
  const auto after = lolp(with_q(s, 2, 1.05 * 2.51677006));
  EXPECT_NEAR(after[0] - before[0], 0.00332107, 1e-7);
  EXPECT_NEAR(after[1] - before[1], 0.00243619, 1e-7);
  EXPECT_NEAR(after[2] - before[2], -0.00136378, 1e-7);
  EXPECT_LT(lolp_derivatives(s).d_beta_d_q(2, 2), 0.0);
}

TEST(OccupancyTable, AnswersEveryCapacity) {
  const auto cls = toy().classes;
  OccupancyTable table(cls);
  table.extend_to(1200);
  EXPECT_GE(table.max_capacity(), 1200);
  for (int c : {0, 4, 5, 49, 50, 333, 1000, 1200}) {
    const auto direct = lolp(Scenario{c, cls});
    const auto shared = table.lolp(c);
    for (std::size_t j = 0; j < cls.size(); ++j) {
      EXPECT_NEAR(shared[j], direct[j], 1e-13) << "C=" << c;
    }
  }
}

TEST(LolpExact, HandCases) {
  EXPECT_NEAR(lolp_exact(Scenario{1, {{1, 1.0, 1.0}}})[0], 0.5, 1e-15);
  const auto empty = lolp_exact(Scenario{0, {{2, 1.0, 1.0}, {3, 1.0, 1.0}}});
  EXPECT_EQ(empty[0], 1.0);
  EXPECT_EQ(empty[1], 1.0);

  const Scenario s{5, {{2, 1.0, 1.0}, {3, 1.0, 1.0}}};
  const auto exact = lolp_exact(s);
  const auto kr = lolp(s);
  const auto ref = oracle::brute_force_lolp(s);
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_NEAR(exact[j], kr[j], 1e-10);
    EXPECT_NEAR(exact[j], ref[j], 1e-14);
  }
}

TEST(LolpExact, ToyScenarioAgreesWithRecursion) {
  const auto exact = lolp_exact(toy());
  const auto kr = lolp(toy());
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(exact[j], kr[j], 1e-10);
}

TEST(LolpExact, RefusesHugeStateSpaces) {
  const Scenario s{5000, {{1, 1.0, 10.0}, {1, 1.0, 10.0}, {1, 1.0, 10.0}}};
  EXPECT_THROW(lolp_exact(s), StateSpaceTooLarge);
  EXPECT_THROW(lolp_exact(s), std::length_error);
}

TEST(LolpExact, RandomOracleEquivalence) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 200; ++i) {
    const auto s = oracle::random_scenario(rng, 3, 5, 30, 8.0);
    const auto kr = lolp(s);
    const auto exact = lolp_exact(s);
    const auto ref = oracle::brute_force_lolp(s);
    for (std::size_t j = 0; j < s.classes.size(); ++j) {
      EXPECT_NEAR(kr[j], exact[j], 1e-10);
      EXPECT_NEAR(kr[j], ref[j], 1e-10);
    }
  }
}

TEST(LolpDerivatives, ErlangClosedForm) {
  const auto jac = lolp_derivatives(Scenario{1, {{1, 1.0, 1.0}}});
  EXPECT_NEAR(jac.d_beta_d_q(0, 0), 0.25, 1e-15);
}

TEST(LolpDerivatives, MatchesExactFiniteDifferences) {
  const Scenario s{5, {{2, 1.0, 1.0}, {3, 1.0, 1.0}}};
  const auto jac = lolp_derivatives(s);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto fd = fd_column(s, k, [](const Scenario& x) { return lolp_exact(x).beta; });
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(jac.d_beta_d_q(j, k), fd[j], 1e-6);
  }
}

TEST(LolpDerivatives, RandomFiniteDifferencesAndSymmetry) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 40; ++i) {
    const auto s = oracle::random_scenario(rng, 4, 12, 200, 25.0);
    const auto jac = lolp_derivatives(s);
    const std::size_t n = s.classes.size();
    EXPECT_LT((jac.d_beta_d_q - jac.d_beta_d_q.transpose()).cwiseAbs().maxCoeff(), 1e-8);
    for (std::size_t k = 0; k < n; ++k) {
      const auto fd = fd_column(s, k, [](const Scenario& x) { return lolp(x).beta; });
      for (std::size_t j = 0; j < n; ++j) {
        const double a = jac.d_beta_d_q(j, k);
        if (std::abs(fd[j]) < 1e-9) {
          EXPECT_NEAR(a, fd[j], 1e-9);
        } else {
          EXPECT_LT(oracle::rel_err(a, fd[j]), 1e-4) << "scenario " << i << " (" << j << "," << k << ")";
        }
      }
    }
  }
}

TEST(LolpDerivatives, ZeroLoadClassOneSided) {
  const Scenario s{12, {{2, 1.0, 2.0}, {3, 1.0, 0.0}}};
  const auto jac = lolp_derivatives(s);
  const auto fd = fd_column(s, 1, [](const Scenario& x) { return lolp(x).beta; });
  for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(jac.d_beta_d_q(j, 1), fd[j], 1e-5);
}

TEST(LolpDerivatives, PositiveDiagonalForSingleClass) {
  for (int b : {1, 2, 5}) {
    for (int c : {5, 20, 60}) {
      const Scenario s{c, {{b, 1.0, 7.0}}};
      EXPECT_GT(lolp_derivatives(s).d_beta_d_q(0, 0), 0.0);
    }
  }
}

TEST(LolpHessian, MatchesFiniteDifferenceOfJacobian) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 25; ++i) {
    const auto s = oracle::random_scenario(rng, 3, 10, 120, 20.0);
    const auto hess = lolp_hessian(s);
    const std::size_t n = s.classes.size();
    for (std::size_t l = 0; l < n; ++l) {
      const double q = traffic_intensity(s.classes[l]);
      const double h = 1e-4 * q;
      const auto up = lolp_derivatives(with_q(s, l, q + h)).d_beta_d_q;
      const auto down = lolp_derivatives(with_q(s, l, q - h)).d_beta_d_q;
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
          const double fd = (up(j, k) - down(j, k)) / (2 * h);
          const double a = hess.second[j](k, l);
          EXPECT_NEAR(a, fd, 1e-6 + 1e-4 * std::abs(fd));
        }
      }
    }
  }
}

TEST(LolpAnalysis, ConsistentWithSeparateCalls) {
  const Scenario s{300, {{20, 1.5, 6.0}, {3, 0.5, 9.0}}};
  const auto all = analyze_lolp(s, true);
  const auto beta = lolp(s);
  const auto jac = lolp_derivatives(s);
  const auto hess = lolp_hessian(s);
  ASSERT_TRUE(all.hessian.has_value());
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_DOUBLE_EQ(all.beta[j], beta[j]);
    EXPECT_DOUBLE_EQ(all.hessian->second[j].sum(), hess.second[j].sum());
  }
  EXPECT_EQ(all.jacobian.d_beta_d_q, jac.d_beta_d_q);
  EXPECT_FALSE(analyze_lolp(s).hessian.has_value());
}
