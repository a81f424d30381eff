#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "zfra/model.hpp"
#include "zfra/zfcore.hpp"

namespace zfra {

struct PowerSolution {
  Eigen::MatrixXd power;     // N x K, p_{n,k}
  double theta = 0.0;        // power-constraint dual
  Eigen::VectorXd delta;     // per-user rate-constraint duals
  Eigen::MatrixXd rates_nk;  // bits/s/Hz
  Eigen::VectorXd rates_k;
  bool feasible = false;
  bool converged = true;  // false only for an iteration-capped dual solve
  double used_power = 0.0;
  std::uint64_t work = 0;  // entry evaluations, for complexity accounting

  double objective(const SystemConfig& cfg) const;
};

/// No (n,k) pair can receive power at the initial dual level.
class NoAllocatableError : public std::runtime_error {
 public:
  NoAllocatableError() : std::runtime_error("no allocatable subchannels") {}
};

/// Per-user water-filling sets B_k(theta, delta_k), as subchannel lists.
struct WaterfillSets {
  std::vector<std::vector<int>> per_user;
  bool operator==(const WaterfillSets&) const = default;
};

/// Completes a solution from explicit powers: rates, totals, used power and
/// feasibility.
PowerSolution assemble_solution(const EffectiveGains& gains, const SystemConfig& cfg,
                                Eigen::MatrixXd power, double theta, Eigen::VectorXd delta);

WaterfillSets waterfill_sets(const EffectiveGains& gains, const SystemConfig& cfg, double theta,
                             const Eigen::VectorXd& delta);

/// Closed-form maximizer of the Lagrangian at fixed duals:
/// p = [(c_k + delta_k) / (theta beta ln2) - 1]^+ on assigned pairs.
PowerSolution waterfill(const EffectiveGains& gains, double theta, const Eigen::VectorXd& delta,
                        const SystemConfig& cfg);

/// Exact total-power water-filling by the shrinking active-set fixed point.
/// With nonzero `delta` the user levels become (c_k + delta_k).
PowerSolution max_throughput_pa(const EffectiveGains& gains, const SystemConfig& cfg,
                                const Eigen::VectorXd& delta);
PowerSolution max_throughput_pa(const EffectiveGains& gains, const SystemConfig& cfg);

/// Non-iterative rate-constrained heuristic on top of a converged
/// max-throughput solution.
PowerSolution rate_constrained_pa(const EffectiveGains& gains, const SystemConfig& cfg,
                                  const PowerSolution& maxthr);

/// Minimum delta_k for one user so that its rate target is met at power dual
/// `theta_bar`, using the self-consistent active set. Returns 0 for users
/// with no assigned subchannels.
double min_rate_dual(const EffectiveGains& gains, const SystemConfig& cfg, int k,
                     double theta_bar, double target_rate);

struct SubgradientOptions {
  double step_scale = 1.0;   // a in a / sqrt(t), applied to log2 of the level
  double tolerance = 1e-6;   // stop once the projected violation drops below
};

/// Oracle-grade optimal power allocation by projected subgradient on the rate
/// duals; the power dual is re-solved exactly for every iterate.
PowerSolution optimal_pa_subgradient(const EffectiveGains& gains, const SystemConfig& cfg,
                                     const SubgradientOptions& opts = {});

/// Water-filling restricted to subchannel n with its own budget.
struct SubchannelPower {
  Eigen::VectorXd power;  // K
  Eigen::VectorXd rates;  // K
  double theta = 0.0;
  std::uint64_t work = 0;
};
SubchannelPower subchannel_pa(const EffectiveGains& gains, const SystemConfig& cfg, int n,
                              double budget);

}  // namespace zfra
