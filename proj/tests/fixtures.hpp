#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "zfra/model.hpp"
#include "zfra/zfcore.hpp"

namespace fixtures {

inline constexpr double kLn2 = std::numbers::ln2;

// Hand-rolled generator for property tests.
struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
};

inline zfra::ChannelRealization channel_from_rows(
    int n_sub, int users, int antennas, const std::vector<std::vector<std::complex<double>>>& rows) {
  zfra::ChannelRealization chan(n_sub, users, antennas);
  for (int n = 0; n < n_sub; ++n)
    for (int k = 0; k < users; ++k) {
      const auto& r = rows[static_cast<std::size_t>(n * users + k)];
      for (int m = 0; m < antennas; ++m) chan.row(n, k)(m) = r[static_cast<std::size_t>(m)];
    }
  return chan;
}

// Effective gains straight from an N x K beta grid; zero entries are
// unassigned. Pseudo-inverses are left empty (PA never reads them).
inline zfra::EffectiveGains gains_from_beta(const Eigen::MatrixXd& beta) {
  zfra::EffectiveGains g;
  g.beta = beta;
  g.assignment = zfra::SdmaAssignment(static_cast<int>(beta.rows()));
  g.pinv.resize(static_cast<std::size_t>(beta.rows()));
  for (int n = 0; n < beta.rows(); ++n)
    for (int k = 0; k < beta.cols(); ++k)
      if (beta(n, k) > 0.0) g.assignment.sets[static_cast<std::size_t>(n)].push_back(k);
  return g;
}

// Random beta grid where every subchannel has 1..min(K, M) users.
inline Eigen::MatrixXd random_beta(Gen& gen, int n_sub, int users, int antennas) {
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(n_sub, users);
  for (int n = 0; n < n_sub; ++n) {
    std::vector<int> idx(static_cast<std::size_t>(users));
    for (int k = 0; k < users; ++k) idx[static_cast<std::size_t>(k)] = k;
    std::shuffle(idx.begin(), idx.end(), gen.rng);
    const int g = gen.integer(1, std::min(users, antennas));
    for (int j = 0; j < g; ++j) beta(n, idx[static_cast<std::size_t>(j)]) = std::exp(gen.uniform(-2.5, 1.5));
  }
  return beta;
}

struct OraclePa {
  Eigen::MatrixXd power;
  Eigen::VectorXd rates;
  double objective = 0.0;
};

// Water-filling with per-user levels, theta found by bisection on the total
// power equation sum beta p = P.
inline OraclePa waterfill_bisection(const Eigen::MatrixXd& beta, const std::vector<double>& level,
                                    double budget) {
  auto powers = [&](double theta) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(beta.rows(), beta.cols());
    for (int n = 0; n < beta.rows(); ++n)
      for (int k = 0; k < beta.cols(); ++k)
        if (beta(n, k) > 0.0)
          p(n, k) = std::max(0.0, level[static_cast<std::size_t>(k)] / (theta * kLn2 * beta(n, k)) - 1.0);
    return p;
  };
  auto used = [&](double theta) { return (beta.array() * powers(theta).array()).sum(); };
  double lo = 1e-12, hi = 1e12;
  for (int i = 0; i < 400; ++i) {
    const double mid = std::sqrt(lo * hi);
    (used(mid) > budget ? lo : hi) = mid;
    if (hi / lo < 1.0 + 1e-15) break;
  }
  OraclePa out;
  out.power = powers(hi);
  out.rates = Eigen::VectorXd::Zero(beta.cols());
  for (int n = 0; n < beta.rows(); ++n)
    for (int k = 0; k < beta.cols(); ++k) out.rates(k) += std::log2(1.0 + out.power(n, k));
  return out;
}

inline double weighted(const Eigen::VectorXd& rates, const std::vector<double>& w) {
  double s = 0.0;
  for (int k = 0; k < rates.size(); ++k) s += w[static_cast<std::size_t>(k)] * rates(k);
  return s;
}

// Optimal PA with one rate constraint on user j: bisection on its dual so
// that r_j meets the target, each step solved by water-filling.
inline OraclePa constrained_oracle(const Eigen::MatrixXd& beta, const std::vector<double>& weights,
                                   double budget, int j, double target) {
  auto solve = [&](double delta) {
    auto level = weights;
    level[static_cast<std::size_t>(j)] += delta;
    auto o = waterfill_bisection(beta, level, budget);
    o.objective = weighted(o.rates, weights);
    return o;
  };
  auto at0 = solve(0.0);
  if (at0.rates(j) >= target) return at0;
  double lo = 0.0, hi = 1.0;
  while (solve(hi).rates(j) < target) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (solve(mid).rates(j) < target ? lo : hi) = mid;
  }
  return solve(hi);
}

}  // namespace fixtures
