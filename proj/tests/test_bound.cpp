#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "zfra/bound.hpp"
#include "zfra/powalloc.hpp"
#include "zfra/scheduler.hpp"

using namespace zfra;
using fixtures::channel_from_rows;
using C = std::complex<double>;

TEST(EnumerationGuard, CountsAndRejects) {
  EXPECT_EQ(enumeration_size(4, 2, 3), (4u + 6u) * 3u);
  EXPECT_EQ(enumeration_size(32, 3, 8), (32u + 496u + 4960u) * 8u);
  const auto cfg = make_config(200, 3, 16, 1.0);
  const auto chan = generate_channel(cfg, 1);
  EXPECT_THROW(SetCatalog{chan}, GuardError);
  EXPECT_THROW(upper_bound(chan, cfg), GuardError);
}

TEST(Dual, SingleLinkStrongDuality) {
  const auto chan = channel_from_rows(1, 1, 1, {{C(1.5, -0.5)}});
  const auto cfg = make_config(1, 1, 1, 7.0);
  const auto b = upper_bound(chan, cfg);
  EXPECT_FALSE(b.infeasible);
  EXPECT_NEAR(b.value, std::log2(1.0 + 7.0 * 2.5), 1e-6);
}

TEST(Dual, CoerciveInTheta) {
  const auto cfg = make_config(2, 2, 2, 5.0);
  const auto chan = generate_channel(cfg, 3);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  const auto it = dual_function(chan, cfg, 1e6, zero);
  EXPECT_NEAR(it.dual_value, 1e6 * 5.0, 1e-9 * 1e6 * 5.0);
  EXPECT_EQ(it.used_power, 0.0);
}

TEST(Dual, MatchesDirectLagrangianOnTinyCase) {
  // One subchannel, one antenna: the maximizing set is the single user with
  // the largest term w log2(L/beta) - w/ln2 + theta beta.
  const auto chan = channel_from_rows(1, 2, 1, {{C(1, 0)}, {C(2, 0)}});
  const auto cfg = make_config(2, 1, 1, 3.0);
  const double theta = 0.3;
  const auto it = dual_function(chan, cfg, theta, Eigen::VectorXd::Zero(2));
  auto term = [&](double beta) {
    const double water = 1.0 / (theta * fixtures::kLn2);
    return std::log2(water / beta) - 1.0 / fixtures::kLn2 + theta * beta;
  };
  EXPECT_NEAR(it.dual_value, std::max(term(1.0), term(0.25)) + theta * 3.0, 1e-12);
  EXPECT_EQ(it.best_sets.sets[0], std::vector<int>{1});
}

TEST(Bound, HandTraceWeakDuality) {
  const auto chan = channel_from_rows(2, 2, 1, {{C(2, 0)}, {C(1, 0)}, {C(2, 0)}, {C(1, 0)}});
  auto cfg = make_config(2, 1, 2, 3.0);
  cfg.min_rates = {0.0, 1.0};
  const auto b = upper_bound(chan, cfg);
  EXPECT_FALSE(b.infeasible);
  EXPECT_GE(b.value, 4.175 - 1e-6);
  const auto r = allocate(chan, cfg, Method::Alg1);
  EXPECT_GE(b.value, r.objective * (1.0 - 1e-6));
}

TEST(Bound, CloseToExhaustiveOptimumWithoutConstraints) {
  // Exhaustive search over all SDMA assignments (sets of size 1..M per
  // subchannel) with exact max-throughput PA on each.
  fixtures::Gen gen(123);
  for (int trial = 0; trial < 10; ++trial) {
    const int K = 3, M = 2, N = 4;
    auto cfg = make_config(K, M, N, gen.uniform(2.0, 20.0));
    const auto chan = generate_channel(cfg, 300 + static_cast<std::uint64_t>(trial));
    std::vector<std::vector<int>> sets = {{0}, {1}, {2}, {0, 1}, {0, 2}, {1, 2}};
    double best = 0.0;
    std::vector<int> pick(N, 0);
    while (true) {
      SdmaAssignment a(N);
      for (int n = 0; n < N; ++n) a.sets[static_cast<std::size_t>(n)] = sets[static_cast<std::size_t>(pick[static_cast<std::size_t>(n)])];
      best = std::max(best, max_throughput_pa(effective_gains(chan, a), cfg).objective(cfg));
      int i = 0;
      while (i < N && ++pick[static_cast<std::size_t>(i)] == static_cast<int>(sets.size())) pick[static_cast<std::size_t>(i++)] = 0;
      if (i == N) break;
    }
    const auto b = upper_bound(chan, cfg);
    EXPECT_GE(b.value, best * (1.0 - 1e-9));
    EXPECT_LE(b.value, best * 1.02) << "trial " << trial;
  }
}

TEST(Bound, BeyondCapacityIsInfeasible) {
  auto cfg = make_config(3, 2, 2, 10.0);
  const auto chan = generate_channel(cfg, 8);
  double ceiling = 0.0;
  for (int n = 0; n < 2; ++n) ceiling += std::log2(1.0 + 10.0 * chan.row(n, 1).squaredNorm());
  cfg.min_rates = {0.0, 1.5 * ceiling, 0.0};
  EXPECT_TRUE(upper_bound(chan, cfg).infeasible);
  cfg.min_rates = {0.5 * ceiling, 0.5 * ceiling, 0.0};
  EXPECT_TRUE(upper_bound(chan, cfg).infeasible);
}

TEST(Bound, MultipleRtUsersStillBoundHeuristics) {
  fixtures::Gen gen(5);
  for (int trial = 0; trial < 8; ++trial) {
    auto cfg = make_config(5, 2, 3, 10.0);
    cfg.max_dual_iters = 300;
    const auto chan = generate_channel(cfg, 60 + static_cast<std::uint64_t>(trial));
    const auto gains = effective_gains(chan, max_throughput_assignment(chan, cfg));
    const auto r0 = max_throughput_pa(gains, cfg).rates_k;
    cfg.min_rates = {r0(0) + 0.3, r0(1) + 0.3, 0.0, 0.0, 0.0};
    const auto b = upper_bound(chan, cfg);
    for (auto m : {Method::Alg1, Method::Alg2, Method::MaxThroughput}) {
      const auto r = allocate(chan, cfg, m);
      if (!r.feasible) continue;
      EXPECT_FALSE(b.infeasible);
      EXPECT_GE(b.value, r.objective * (1.0 - 1e-6));
    }
  }
}

TEST(Bound, HistoryIsRunningMinimum) {
  auto cfg = make_config(4, 2, 3, 10.0);
  const auto chan = generate_channel(cfg, 21);
  cfg.min_rates = {3.0, 0.0, 0.0, 0.0};
  const auto b = upper_bound(chan, cfg);
  ASSERT_FALSE(b.history.empty());
  for (std::size_t i = 1; i < b.history.size(); ++i) EXPECT_LE(b.history[i], b.history[i - 1]);
  EXPECT_EQ(b.history.back(), b.value);
}

TEST(Catalog, ReuseGivesSameBound) {
  auto cfg = make_config(5, 3, 2, 10.0);
  const auto chan = generate_channel(cfg, 31);
  cfg.min_rates = {0.0, 2.0, 0.0, 0.0, 0.0};
  const SetCatalog catalog(chan);
  EXPECT_EQ(upper_bound(catalog, cfg).value, upper_bound(chan, cfg).value);
  auto other = make_config(4, 3, 2, 10.0);
  EXPECT_THROW(catalog.evaluate(other, 1.0, Eigen::VectorXd::Zero(4), other.weights),
               std::invalid_argument);
}
