#include "zfra/zfcore.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "zfra/powalloc.hpp"

namespace zfra {

std::optional<SetGains> try_set_gains(const ChannelRealization& chan, int n,
                                      std::span<const int> users) {
  const auto g = static_cast<Eigen::Index>(users.size());
  if (g == 0 || g > chan.antennas()) return std::nullopt;
  Eigen::MatrixXcd h(g, chan.antennas());
  for (Eigen::Index j = 0; j < g; ++j) h.row(j) = chan.row(n, users[static_cast<std::size_t>(j)]);

  // H = U S V^H, H^+ = V S^-1 U^H.
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (!(s(0) > 0.0) || s(g - 1) < kSingularGuard * s(0)) return std::nullopt;

  SetGains out;
  out.pinv = svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().adjoint();
  out.beta = out.pinv.colwise().squaredNorm().transpose();
  return out;
}

SetGains set_gains(const ChannelRealization& chan, int n, std::span<const int> users) {
  auto out = try_set_gains(chan, n, users);
  if (!out) throw DegenerateSetError(n);
  return std::move(*out);
}

EffectiveGains effective_gains(const ChannelRealization& chan, const SdmaAssignment& assign) {
  assign.validate(chan.users(), chan.antennas());
  if (assign.subchannels() != chan.subchannels())
    throw std::invalid_argument("assignment and channel disagree on subchannel count");
  EffectiveGains gains;
  gains.assignment = SdmaAssignment(chan.subchannels());
  gains.beta = Eigen::MatrixXd::Zero(chan.subchannels(), chan.users());
  gains.pinv.assign(static_cast<std::size_t>(chan.subchannels()), Eigen::MatrixXcd());
  for (int n = 0; n < chan.subchannels(); ++n) {
    update_subchannel(gains, chan, n, assign.sets[static_cast<std::size_t>(n)]);
  }
  return gains;
}

void update_subchannel(EffectiveGains& gains, const ChannelRealization& chan, int n,
                       std::vector<int> users) {
  const auto idx = static_cast<std::size_t>(n);
  gains.beta.row(n).setZero();
  if (users.empty()) {
    gains.pinv[idx] = Eigen::MatrixXcd(chan.antennas(), 0);
  } else {
    auto sg = set_gains(chan, n, users);
    for (std::size_t j = 0; j < users.size(); ++j)
      gains.beta(n, users[j]) = sg.beta(static_cast<Eigen::Index>(j));
    gains.pinv[idx] = std::move(sg.pinv);
  }
  gains.assignment.sets[idx] = std::move(users);
}

std::vector<Eigen::VectorXcd> beamformers(const EffectiveGains& gains, const PowerSolution& pwr,
                                          int n) {
  if (n < 0 || n >= gains.subchannels()) throw std::out_of_range("subchannel index out of range");
  const auto& set = gains.assignment.sets[static_cast<std::size_t>(n)];
  const auto& pinv = gains.pinv[static_cast<std::size_t>(n)];
  std::vector<Eigen::VectorXcd> out;
  out.reserve(set.size());
  for (std::size_t j = 0; j < set.size(); ++j) {
    const double p = pwr.power(n, set[j]);
    if (p < 0.0) throw std::invalid_argument("negative power");
    out.emplace_back(pinv.col(static_cast<Eigen::Index>(j)) * std::sqrt(p));
  }
  return out;
}

double rate(double power) { return std::log2(1.0 + power); }

}  // namespace zfra
