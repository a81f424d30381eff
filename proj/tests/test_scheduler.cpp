#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "zfra/powalloc.hpp"
#include "zfra/scheduler.hpp"

using namespace zfra;
using fixtures::channel_from_rows;
using C = std::complex<double>;

namespace {

// |h|^2 = 4 for user 0 and 1 for user 1 on both subchannels, M = 1.
ChannelRealization trace_channel() {
  return channel_from_rows(2, 2, 1, {{C(2, 0)}, {C(1, 0)}, {C(2, 0)}, {C(1, 0)}});
}

SystemConfig trace_config(double d1) {
  auto cfg = make_config(2, 1, 2, 3.0);
  cfg.min_rates = {0.0, d1};
  return cfg;
}

}  // namespace

TEST(Method, Names) {
  for (auto m : {Method::Alg1, Method::Alg2, Method::MaxThroughput})
    EXPECT_EQ(parse_method(method_name(m)), m);
  EXPECT_THROW(parse_method("swap"), std::invalid_argument);
}

TEST(Allocate, NoConstraintsStopsAfterMaxThroughput) {
  auto cfg = make_config(6, 2, 4, 10.0);
  const auto chan = generate_channel(cfg, 5);
  const auto gains = effective_gains(chan, max_throughput_assignment(chan, cfg));
  const double ref = max_throughput_pa(gains, cfg).objective(cfg);
  for (auto m : {Method::Alg1, Method::Alg2, Method::MaxThroughput}) {
    const auto r = allocate(chan, cfg, m);
    EXPECT_TRUE(r.feasible);
    EXPECT_EQ(r.iterations, 0);
    EXPECT_NEAR(r.objective, ref, 1e-12 * ref);
  }
}

TEST(Allocate, HandTraceAlg1) {
  const auto chan = trace_channel();
  const auto cfg = trace_config(1.0);
  EXPECT_EQ(max_throughput_assignment(chan, cfg).sets,
            (std::vector<std::vector<int>>{{0}, {0}}));
  const auto r = allocate(chan, cfg, Method::Alg1);
  EXPECT_TRUE(r.feasible);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(r.assignment.sets, (std::vector<std::vector<int>>{{1}, {0}}));
  EXPECT_NEAR(1.0 / (r.power.theta * fixtures::kLn2), 2.125, 1e-12);
  EXPECT_NEAR(r.power.rates_k(0), 3.0875, 5e-5);
  EXPECT_NEAR(r.power.rates_k(1), 1.0875, 5e-5);
  EXPECT_NEAR(r.objective, 4.175, 1e-4);
}

TEST(Allocate, HandTraceAlg2AgreesOnObjective) {
  const auto chan = trace_channel();
  const auto cfg = trace_config(1.0);
  const auto r = allocate(chan, cfg, Method::Alg2);
  EXPECT_TRUE(r.feasible);
  EXPECT_EQ(r.assignment.sets, (std::vector<std::vector<int>>{{1}, {0}}));
  EXPECT_NEAR(r.objective, 4.175, 1e-4);
}

TEST(Allocate, MaxThroughputOnlyCannotServeUnscheduledUser) {
  const auto chan = trace_channel();
  const auto r = allocate(chan, trace_config(1.0), Method::MaxThroughput);
  EXPECT_FALSE(r.feasible);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(r.power.rates_k(1), 0.0);
}

TEST(Allocate, CapacityCeilingIsInfeasible) {
  const auto chan = trace_channel();
  const auto cfg = trace_config(50.0);
  const auto r = allocate(chan, cfg, Method::Alg1);
  EXPECT_FALSE(r.feasible);
  EXPECT_EQ(r.iterations, 2);
  EXPECT_EQ(r.assignment.sets, (std::vector<std::vector<int>>{{1}, {1}}));
  EXPECT_NEAR(r.power.rates_k(1), 2.0 * std::log2(2.5), 1e-9);
}

TEST(Reassign, CriticalUserIsKept) {
  // Subchannel 0 is user 0's only source of rate; user 0 is critical there,
  // so reassignment must keep it and add user 2 alongside (M = 2).
  const auto chan = channel_from_rows(
      2, 3, 2,
      {{C(3, 0), C(0, 0)}, {C(0.1, 0), C(0, 0)}, {C(0, 0), C(1, 0)},
       {C(0, 0), C(0.01, 0)}, {C(4, 0), C(0, 0)}, {C(0, 0), C(0.5, 0)}});
  auto cfg = make_config(3, 2, 2, 10.0);
  cfg.min_rates = {1.0, 0.0, 0.5};
  AllocationResult current;
  current.assignment = SdmaAssignment(2);
  current.assignment.sets = {{0}, {1}};
  const auto gains = effective_gains(chan, current.assignment);
  current.power = max_throughput_pa(gains, cfg);
  ASSERT_LT(current.power.rates_k(2), 0.5);
  const auto r = reassign_alg1(chan, cfg, current);
  EXPECT_TRUE(r.feasible);
  EXPECT_TRUE(r.assignment.contains(0, 0));
  EXPECT_TRUE(r.assignment.contains(0, 2) || r.assignment.contains(1, 2));
  EXPECT_GE(r.power.rates_k(0), 1.0 - 1e-9);
  EXPECT_GE(r.power.rates_k(2), 0.5 - 1e-9);
}

TEST(Alg2, SingleSubchannelMatchesAlg1Assignment) {
  fixtures::Gen gen(77);
  int compared = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int K = gen.integer(3, 8);
    const int M = gen.integer(1, 3);
    auto cfg = make_config(K, M, 1, gen.uniform(1.0, 30.0));
    const auto chan = generate_channel(cfg, 900 + static_cast<std::uint64_t>(trial));
    const int d = gen.integer(0, K - 1);
    cfg.min_rates[static_cast<std::size_t>(d)] = gen.uniform(0.2, 3.0);
    const auto a = allocate(chan, cfg, Method::Alg1);
    const auto b = allocate(chan, cfg, Method::Alg2);
    EXPECT_EQ(a.assignment.sets, b.assignment.sets) << "trial " << trial;
    compared += a.iterations > 0;
  }
  EXPECT_GT(compared, 5);
}

TEST(Alg2, SymmetricOrthogonalUsers) {
  const auto chan = channel_from_rows(2, 2, 1, {{C(1, 0)}, {C(1, 0)}, {C(1, 0)}, {C(1, 0)}});
  auto cfg = make_config(2, 1, 2, 4.0);
  cfg.min_rates = {1.0, 1.0};
  const auto r = allocate(chan, cfg, Method::Alg2);
  EXPECT_TRUE(r.feasible);
  EXPECT_NEAR(r.power.rates_k(0), r.power.rates_k(1), 1e-12);
  EXPECT_NEAR(r.power.rates_k(0), std::log2(3.0), 1e-12);
}

TEST(Alg2, LoopWorkPerIterationIndependentOfN) {
  auto per_iter = [](int n_sub) {
    auto cfg = make_config(16, 3, n_sub, 20.0);
    double sum = 0.0;
    int iters = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto chan = generate_channel(cfg, 4000 + s);
      const auto gains = effective_gains(chan, max_throughput_assignment(chan, cfg));
      const auto r0 = max_throughput_pa(gains, cfg).rates_k;
      auto c = cfg;
      for (int k = 0; k < 4; ++k) c.min_rates[static_cast<std::size_t>(k)] = 1.5 * r0(k) + 0.5;
      const auto r = allocate(chan, c, Method::Alg2);
      sum += static_cast<double>(r.loop_work);
      iters += r.iterations;
    }
    return sum / iters;
  };
  const double a = per_iter(8), b = per_iter(32);
  EXPECT_NEAR(a / b, 1.0, 0.10);
}

TEST(Allocate, FeasibleResultsAreZeroForcing) {
  fixtures::Gen gen(41);
  for (int trial = 0; trial < 40; ++trial) {
    const int K = gen.integer(2, 8);
    const int M = gen.integer(1, 3);
    const int N = gen.integer(1, 4);
    auto cfg = make_config(K, M, N, gen.uniform(1.0, 30.0));
    const auto chan = generate_channel(cfg, 7000 + static_cast<std::uint64_t>(trial));
    cfg.min_rates[0] = gen.uniform(0.1, 2.0);
    for (auto m : {Method::Alg1, Method::Alg2, Method::MaxThroughput}) {
      const auto r = allocate(chan, cfg, m);
      EXPECT_NO_THROW(r.assignment.validate(K, M));
      if (!r.feasible) continue;
      const auto gains = effective_gains(chan, r.assignment);
      double total = 0.0;
      for (int n = 0; n < N; ++n) {
        const auto w = beamformers(gains, r.power, n);
        const auto& set = r.assignment.sets[static_cast<std::size_t>(n)];
        for (std::size_t i = 0; i < set.size(); ++i) {
          total += w[i].squaredNorm();
          for (std::size_t j = 0; j < set.size(); ++j) {
            const double g = std::norm(C(chan.row(n, set[i]) * w[j]));
            if (i != j) EXPECT_LE(g, 1e-8);
            else EXPECT_NEAR(g, r.power.power(n, set[i]), 1e-8 * (1.0 + g));
          }
        }
      }
      EXPECT_NEAR(total, cfg.max_power, 1e-6 * cfg.max_power);
      for (int k = 0; k < K; ++k)
        EXPECT_GE(r.power.rates_k(k), cfg.min_rates[static_cast<std::size_t>(k)] - kRateTolerance);
    }
  }
}
