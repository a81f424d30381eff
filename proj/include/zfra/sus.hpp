#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "zfra/model.hpp"

namespace zfra {

/// Users selected so far on one subchannel and an orthonormal basis
/// (M x (M - |selected|)) of the null space of their channel rows.
struct SusState {
  std::vector<int> selected;
  Eigen::MatrixXcd basis;
  std::uint64_t work = 0;
};

/// Orthonormal basis of the null space of the rows h_{n,k}, k in `users`.
Eigen::MatrixXcd null_space_basis(const ChannelRealization& chan, int n,
                                  std::span<const int> users);

/// Starts a set with the largest-norm candidate (ties: lowest index).
SusState sus_init(const ChannelRealization& chan, int n, std::span<const int> candidates);

/// A state holding exactly `users`, in order.
SusState sus_from_users(const ChannelRealization& chan, int n, std::vector<int> users);

/// Greedily adds the candidate with the largest null-space projection among
/// those whose normalized correlation with every selected user is at most
/// `gamma`, until M users are selected or no candidate qualifies.
SusState sus_search(const ChannelRealization& chan, int n, std::span<const int> candidates,
                    SusState state, double gamma);

/// Plain SUS over all users of subchannel n.
std::vector<int> sus_select(const ChannelRealization& chan, int n, double gamma);

}  // namespace zfra
