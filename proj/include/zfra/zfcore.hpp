#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "zfra/model.hpp"

namespace zfra {

struct PowerSolution;

/// The stacked channel matrix of an SDMA set is numerically rank deficient.
class DegenerateSetError : public std::runtime_error {
 public:
  explicit DegenerateSetError(int subchannel)
      : std::runtime_error("degenerate SDMA set on subchannel " + std::to_string(subchannel)),
        subchannel_(subchannel) {}
  int subchannel() const noexcept { return subchannel_; }

 private:
  int subchannel_;
};

// Sets whose smallest singular value falls below this fraction of the
// largest are rejected as degenerate.
inline constexpr double kSingularGuard = 1e-9;

/// Pseudo-inverse of one SDMA set and the induced power cost multipliers
/// beta_j = [(H^+)^H H^+]_{jj}, one per member in set order.
struct SetGains {
  Eigen::MatrixXcd pinv;  // M x g
  Eigen::VectorXd beta;   // g
};

/// ZF algebra for `users` on subchannel `n`. Returns nullopt for an empty set
/// or when the set is degenerate.
std::optional<SetGains> try_set_gains(const ChannelRealization& chan, int n,
                                      std::span<const int> users);
/// As try_set_gains but throws DegenerateSetError.
SetGains set_gains(const ChannelRealization& chan, int n, std::span<const int> users);

struct EffectiveGains {
  SdmaAssignment assignment;
  Eigen::MatrixXd beta;             // N x K, exact zeros off-set
  std::vector<Eigen::MatrixXcd> pinv;  // per subchannel, M x g_n

  int subchannels() const { return static_cast<int>(beta.rows()); }
  int users() const { return static_cast<int>(beta.cols()); }
};

EffectiveGains effective_gains(const ChannelRealization& chan, const SdmaAssignment& assign);

/// Replaces S_n and recomputes that subchannel's pseudo-inverse and betas.
void update_subchannel(EffectiveGains& gains, const ChannelRealization& chan, int n,
                       std::vector<int> users);

/// Columns W_n = H_n^+ diag(sqrt(q)), in S_n order.
std::vector<Eigen::VectorXcd> beamformers(const EffectiveGains& gains, const PowerSolution& pwr,
                                          int n);

/// log2(1 + p).
double rate(double power);

}  // namespace zfra
