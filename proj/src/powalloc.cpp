#include "zfra/powalloc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace zfra {

namespace {

constexpr double kLn2 = std::numbers::ln2;

double user_level(const SystemConfig& cfg, const Eigen::VectorXd& delta, int k) {
  return cfg.weights[static_cast<std::size_t>(k)] + delta(k);
}

// Fills rates, totals, used power and the feasibility verdict from `power`.
void finish(PowerSolution& sol, const EffectiveGains& gains, const SystemConfig& cfg) {
  sol.rates_nk = sol.power.unaryExpr([](double p) { return rate(p); });
  sol.rates_k = sol.rates_nk.colwise().sum().transpose();
  sol.used_power = gains.beta.cwiseProduct(sol.power).sum();
  sol.feasible = true;
  for (int k = 0; k < gains.users(); ++k) {
    if (sol.rates_k(k) < cfg.min_rates[static_cast<std::size_t>(k)] - kRateTolerance) {
      sol.feasible = false;
      break;
    }
  }
}

double violation(const PowerSolution& sol, const SystemConfig& cfg) {
  double v = 0.0;
  for (int k = 0; k < static_cast<int>(cfg.min_rates.size()); ++k)
    v = std::max(v, cfg.min_rates[static_cast<std::size_t>(k)] - sol.rates_k(k));
  return v;
}

}  // namespace

double PowerSolution::objective(const SystemConfig& cfg) const {
  double total = 0.0;
  for (Eigen::Index k = 0; k < rates_k.size(); ++k)
    total += cfg.weights[static_cast<std::size_t>(k)] * rates_k(k);
  return total;
}

PowerSolution assemble_solution(const EffectiveGains& gains, const SystemConfig& cfg,
                                Eigen::MatrixXd power, double theta, Eigen::VectorXd delta) {
  PowerSolution sol;
  sol.power = std::move(power);
  sol.theta = theta;
  sol.delta = std::move(delta);
  finish(sol, gains, cfg);
  return sol;
}

WaterfillSets waterfill_sets(const EffectiveGains& gains, const SystemConfig& cfg, double theta,
                             const Eigen::VectorXd& delta) {
  WaterfillSets sets;
  sets.per_user.resize(static_cast<std::size_t>(gains.users()));
  for (int k = 0; k < gains.users(); ++k) {
    const double level = user_level(cfg, delta, k) / (theta * kLn2);
    for (int n = 0; n < gains.subchannels(); ++n) {
      const double b = gains.beta(n, k);
      if (b > 0.0 && b < level) sets.per_user[static_cast<std::size_t>(k)].push_back(n);
    }
  }
  return sets;
}

PowerSolution waterfill(const EffectiveGains& gains, double theta, const Eigen::VectorXd& delta,
                        const SystemConfig& cfg) {
  if (!(theta > 0.0)) throw std::invalid_argument("waterfill: theta must be > 0");
  PowerSolution sol;
  sol.theta = theta;
  sol.delta = delta;
  sol.power = Eigen::MatrixXd::Zero(gains.subchannels(), gains.users());
  for (int k = 0; k < gains.users(); ++k) {
    const double level = user_level(cfg, delta, k) / (theta * kLn2);
    for (int n = 0; n < gains.subchannels(); ++n) {
      const double b = gains.beta(n, k);
      if (b > 0.0) sol.power(n, k) = std::max(level / b - 1.0, 0.0);
    }
  }
  sol.work = static_cast<std::uint64_t>(gains.beta.size());
  finish(sol, gains, cfg);
  return sol;
}

PowerSolution max_throughput_pa(const EffectiveGains& gains, const SystemConfig& cfg,
                                const Eigen::VectorXd& delta) {
  const int n_sub = gains.subchannels();
  const int n_usr = gains.users();
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> active(n_sub, n_usr);
  for (int n = 0; n < n_sub; ++n)
    for (int k = 0; k < n_usr; ++k)
      active(n, k) = gains.beta(n, k) > 0.0 && user_level(cfg, delta, k) > 0.0;
  if (!active.any()) throw NoAllocatableError();

  std::uint64_t work = 0;
  double scaled_theta = 0.0;  // theta * ln2
  // Each pass either keeps the set (done) or strictly shrinks it.
  for (int pass = 0; pass <= n_sub * n_usr; ++pass) {
    double weight_sum = 0.0;
    double beta_sum = 0.0;
    for (int n = 0; n < n_sub; ++n) {
      for (int k = 0; k < n_usr; ++k) {
        if (!active(n, k)) continue;
        weight_sum += user_level(cfg, delta, k);
        beta_sum += gains.beta(n, k);
      }
    }
    scaled_theta = weight_sum / (cfg.max_power + beta_sum);
    bool changed = false;
    for (int n = 0; n < n_sub; ++n) {
      for (int k = 0; k < n_usr; ++k) {
        if (active(n, k) && !(gains.beta(n, k) < user_level(cfg, delta, k) / scaled_theta)) {
          active(n, k) = false;
          changed = true;
        }
      }
    }
    work += 2 * static_cast<std::uint64_t>(n_sub) * static_cast<std::uint64_t>(n_usr);
    if (!changed) break;
  }
  auto sol = waterfill(gains, scaled_theta / kLn2, delta, cfg);
  sol.work += work;
  return sol;
}

PowerSolution max_throughput_pa(const EffectiveGains& gains, const SystemConfig& cfg) {
  return max_throughput_pa(gains, cfg, Eigen::VectorXd::Zero(gains.users()));
}

double min_rate_dual(const EffectiveGains& gains, const SystemConfig& cfg, int k,
                     double theta_bar, double target_rate) {
  const double c = cfg.weights[static_cast<std::size_t>(k)];
  const double scaled = theta_bar * kLn2;
  std::vector<int> assigned;
  for (int n = 0; n < gains.subchannels(); ++n)
    if (gains.beta(n, k) > 0.0) assigned.push_back(n);
  if (assigned.empty()) return 0.0;

  auto active_at = [&](double delta) {
    std::vector<int> out;
    for (int n : assigned)
      if (gains.beta(n, k) < (c + delta) / scaled) out.push_back(n);
    return out;
  };
  std::vector<int> set = active_at(0.0);
  if (set.empty()) set = assigned;
  double delta = 0.0;
  for (std::size_t iter = 0; iter <= assigned.size(); ++iter) {
    double log_beta = 0.0;
    for (int n : set) log_beta += std::log2(gains.beta(n, k));
    const double water = std::exp2((target_rate + log_beta) / static_cast<double>(set.size()));
    delta = std::max(scaled * water - c, 0.0);
    auto next = active_at(delta);
    if (next.empty() || next == set) break;
    set = std::move(next);
  }
  return delta;
}

PowerSolution rate_constrained_pa(const EffectiveGains& gains, const SystemConfig& cfg,
                                  const PowerSolution& maxthr) {
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(gains.users());
  bool any_unsatisfied = false;
  for (int k = 0; k < gains.users(); ++k) {
    const double dmin = cfg.min_rates[static_cast<std::size_t>(k)];
    const double shortfall = dmin - maxthr.rates_k(k);
    if (!(shortfall > kRateTolerance)) continue;
    any_unsatisfied = true;
    // Per-user upper estimate of the power dual after the constrained users
    // are boosted.
    const double theta_bar = maxthr.theta * std::exp2(shortfall * cfg.epsilon);
    delta(k) = min_rate_dual(gains, cfg, k, theta_bar, dmin);
  }
  if (!any_unsatisfied) return maxthr;
  auto sol = max_throughput_pa(gains, cfg, delta);
  sol.work += static_cast<std::uint64_t>(gains.beta.size());
  return sol;
}

PowerSolution optimal_pa_subgradient(const EffectiveGains& gains, const SystemConfig& cfg,
                                     const SubgradientOptions& opts) {
  const auto rt = cfg.rt_users();
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(gains.users());
  PowerSolution sol = max_throughput_pa(gains, cfg, delta);
  std::uint64_t work = sol.work;

  auto residual = [&](const PowerSolution& s) {
    double r = 0.0;
    for (int k : rt) {
      const double g = cfg.min_rates[static_cast<std::size_t>(k)] - s.rates_k(k);
      r = std::max(r, s.delta(k) > 0.0 ? std::abs(g) : std::max(g, 0.0));
    }
    return r;
  };

  PowerSolution best = sol;
  auto better = [&](const PowerSolution& cand) {
    if (cand.feasible != best.feasible) return cand.feasible;
    if (cand.feasible) return cand.objective(cfg) > best.objective(cfg);
    return violation(cand, cfg) < violation(best, cfg);
  };

  bool converged = residual(sol) < opts.tolerance;
  for (int t = 1; t <= cfg.max_dual_iters && !converged; ++t) {
    const double step = opts.step_scale / std::sqrt(static_cast<double>(t));
    // Steps act on log2 of the user level c + delta, scaled by the local
    // slope of r_k in that coordinate (finite difference, theta re-solved).
    Eigen::VectorXd next = delta;
    for (int k : rt) {
      const double c = cfg.weights[static_cast<std::size_t>(k)];
      const double g = cfg.min_rates[static_cast<std::size_t>(k)] - sol.rates_k(k);
      const double level = c + delta(k);
      constexpr double h = 1e-3;
      Eigen::VectorXd probe = delta;
      probe(k) = level * std::exp2(h) - c;
      const auto ps = max_throughput_pa(gains, cfg, probe);
      work += ps.work;
      const double slope = (ps.rates_k(k) - sol.rates_k(k)) / h;
      double target = level * std::exp2(step * g / (slope > 1e-9 ? slope : 1.0));
      if (!(slope > 1e-9) && g > 0.0) {
        // Inactive user: jump to the level where its best subchannel switches on.
        double min_beta = std::numeric_limits<double>::infinity();
        for (int n = 0; n < gains.subchannels(); ++n)
          if (gains.beta(n, k) > 0.0) min_beta = std::min(min_beta, gains.beta(n, k));
        if (std::isfinite(min_beta))
          target = std::max(target, sol.theta * kLn2 * min_beta * (1.0 + 1e-6));
      }
      next(k) = std::max(target - c, 0.0);
    }
    delta = next;
    sol = max_throughput_pa(gains, cfg, delta);
    work += sol.work;
    if (better(sol)) best = sol;
    converged = residual(sol) < opts.tolerance;
  }
  PowerSolution out = converged ? sol : best;
  out.converged = converged;
  out.work = work;
  return out;
}

SubchannelPower subchannel_pa(const EffectiveGains& gains, const SystemConfig& cfg, int n,
                              double budget) {
  const int n_usr = gains.users();
  SubchannelPower out;
  out.power = Eigen::VectorXd::Zero(n_usr);
  out.rates = Eigen::VectorXd::Zero(n_usr);
  std::vector<int> active;
  for (int k = 0; k < n_usr; ++k)
    if (gains.beta(n, k) > 0.0 && cfg.weights[static_cast<std::size_t>(k)] > 0.0)
      active.push_back(k);
  out.work = static_cast<std::uint64_t>(n_usr);
  if (active.empty()) return out;

  double scaled_theta = 0.0;
  while (true) {
    double weight_sum = 0.0;
    double beta_sum = 0.0;
    for (int k : active) {
      weight_sum += cfg.weights[static_cast<std::size_t>(k)];
      beta_sum += gains.beta(n, k);
    }
    scaled_theta = weight_sum / (budget + beta_sum);
    std::vector<int> kept;
    for (int k : active)
      if (gains.beta(n, k) < cfg.weights[static_cast<std::size_t>(k)] / scaled_theta)
        kept.push_back(k);
    out.work += active.size();
    if (kept.size() == active.size()) break;
    active = std::move(kept);
  }
  out.theta = scaled_theta / kLn2;
  for (int k : active) {
    out.power(k) =
        std::max(cfg.weights[static_cast<std::size_t>(k)] / (scaled_theta * gains.beta(n, k)) - 1.0,
                 0.0);
    out.rates(k) = rate(out.power(k));
  }
  return out;
}

}  // namespace zfra
