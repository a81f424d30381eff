#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "zfra/model.hpp"

namespace zfra {

// Enumeration guard: total number of candidate SDMA sets over all subchannels.
inline constexpr std::uint64_t kMaxEnumeratedSets = 1'000'000;

/// Number of SDMA sets of size 1..M over K users on N subchannels.
std::uint64_t enumeration_size(int users, int antennas, int subchannels);

struct DualIterate {
  double theta = 0.0;
  Eigen::VectorXd delta;
  double dual_value = 0.0;  // upper bound on the primal optimum
  SdmaAssignment best_sets;  // per-subchannel maximizer at these duals
  double used_power = 0.0;   // sum beta p at the maximizer
  Eigen::VectorXd rates_k;   // per-user rates at the maximizer
  // Sums of level and beta over pairs with p > 0; at fixed active pairs the
  // power equation solves to theta = level / (ln2 (P + beta)).
  double active_level = 0.0;
  double active_beta = 0.0;
};

/// Every SDMA set of size 1..M on every subchannel with its ZF betas,
/// precomputed once per channel. Semiorthogonality is not imposed; only
/// numerically degenerate sets are dropped.
class SetCatalog {
 public:
  /// Throws GuardError when enumeration_size exceeds kMaxEnumeratedSets.
  explicit SetCatalog(const ChannelRealization& chan);

  /// Lagrangian dual at (theta, delta) for objective weights `weights`; the
  /// budget and rate targets come from `cfg`.
  DualIterate evaluate(const SystemConfig& cfg, double theta, const Eigen::VectorXd& delta,
                       const std::vector<double>& weights) const;

  int users() const { return users_; }
  int subchannels() const { return static_cast<int>(subchannels_.size()); }
  std::uint64_t channel_seed() const { return channel_seed_; }
  double min_single_beta() const { return min_single_beta_; }
  std::uint64_t evaluations() const { return evaluations_; }

 private:
  struct Subchannel {
    std::vector<double> single_beta;           // K, beta of the user alone
    std::vector<std::vector<double>> betas;    // [g-1][rank * g + j]
    std::vector<std::vector<char>> valid;      // [g-1][rank]
  };

  const double* set_betas(const Subchannel& sc, const std::vector<int>& sorted_users) const;
  double set_value(const Subchannel& sc, const std::vector<int>& sorted_users,
                   const std::vector<double>& levels, double theta, bool& valid) const;

  int users_;
  int antennas_;
  std::uint64_t channel_seed_;
  double min_single_beta_ = 0.0;
  std::vector<Subchannel> subchannels_;
  std::vector<std::vector<std::uint64_t>> binom_;
  mutable std::uint64_t evaluations_ = 0;
};

/// dual_function: builds a catalog and evaluates it once.
DualIterate dual_function(const ChannelRealization& chan, const SystemConfig& cfg, double theta,
                          const Eigen::VectorXd& delta);

struct BoundResult {
  double value = 0.0;       // smallest dual value found
  bool infeasible = false;  // a certificate of primal infeasibility was found
  bool converged = true;
  DualIterate best;
  std::vector<double> history;  // running minimum after each outer iteration
};

/// Minimizes the dual over theta >= 0 and the RT users' delta >= 0.
BoundResult upper_bound(const ChannelRealization& chan, const SystemConfig& cfg);
/// Same, reusing a catalog of the channel (e.g. across a rate sweep).
BoundResult upper_bound(const SetCatalog& catalog, const SystemConfig& cfg);

}  // namespace zfra
