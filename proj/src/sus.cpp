#include "zfra/sus.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <Eigen/QR>

namespace zfra {

namespace {

// Projections below this fraction of the channel norm count as zero.
constexpr double kMinProjection = 1e-6;

bool semiorthogonal(const ChannelRealization& chan, int n, int k, const std::vector<int>& selected,
                    double gamma) {
  const auto& hk = chan.row(n, k);
  const double nk = hk.norm();
  for (int j : selected) {
    const auto& hj = chan.row(n, j);
    const double corr = std::abs(hk.dot(hj)) / (nk * hj.norm());
    if (corr > gamma) return false;
  }
  return true;
}

}  // namespace

Eigen::MatrixXcd null_space_basis(const ChannelRealization& chan, int n,
                                  std::span<const int> users) {
  const int m = chan.antennas();
  const auto g = static_cast<int>(users.size());
  if (g == 0) return Eigen::MatrixXcd::Identity(m, m);
  if (g >= m) return Eigen::MatrixXcd(m, 0);
  // Columns g.. of the full Q factor of H^H are orthogonal to every h_k^H.
  Eigen::MatrixXcd ht(m, g);
  for (int j = 0; j < g; ++j) ht.col(j) = chan.row(n, users[static_cast<std::size_t>(j)]).adjoint();
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(ht);
  const Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(m, m);
  return q.rightCols(m - g);
}

SusState sus_init(const ChannelRealization& chan, int n, std::span<const int> candidates) {
  if (candidates.empty()) throw std::invalid_argument("sus_init: empty candidate set");
  int best = -1;
  double best_norm = -1.0;
  for (int k : candidates) {
    const double nk = chan.norm(n, k);
    if (nk > best_norm || (nk == best_norm && k < best)) {
      best = k;
      best_norm = nk;
    }
  }
  SusState state = sus_from_users(chan, n, {best});
  state.work += candidates.size() * static_cast<std::uint64_t>(chan.antennas());
  return state;
}

SusState sus_from_users(const ChannelRealization& chan, int n, std::vector<int> users) {
  SusState state;
  state.basis = null_space_basis(chan, n, users);
  state.selected = std::move(users);
  const auto m = static_cast<std::uint64_t>(chan.antennas());
  state.work = m * m * m;
  return state;
}

SusState sus_search(const ChannelRealization& chan, int n, std::span<const int> candidates,
                    SusState state, double gamma) {
  const int m = chan.antennas();
  std::vector<int> pool;
  for (int k : candidates) {
    if (std::find(state.selected.begin(), state.selected.end(), k) == state.selected.end() &&
        std::find(pool.begin(), pool.end(), k) == pool.end())
      pool.push_back(k);
  }
  const auto mm = static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(m);

  while (static_cast<int>(state.selected.size()) < m && !pool.empty()) {
    int best = -1;
    double best_proj = 0.0;
    std::vector<int> keep;
    for (int k : pool) {
      state.work += mm;
      // The filter only tightens as the set grows, so rejected users are dropped.
      if (!semiorthogonal(chan, n, k, state.selected, gamma)) continue;
      const double proj = (chan.row(n, k) * state.basis).norm();
      if (!(proj > kMinProjection * chan.norm(n, k))) continue;
      keep.push_back(k);
      if (proj > best_proj || (proj == best_proj && k < best)) {
        best = k;
        best_proj = proj;
      }
    }
    if (best < 0) break;
    state.selected.push_back(best);
    state.basis = null_space_basis(chan, n, state.selected);
    state.work += mm * static_cast<std::uint64_t>(m);
    std::erase(keep, best);
    pool = std::move(keep);
  }
  return state;
}

std::vector<int> sus_select(const ChannelRealization& chan, int n, double gamma) {
  std::vector<int> all(static_cast<std::size_t>(chan.users()));
  std::iota(all.begin(), all.end(), 0);
  auto state = sus_init(chan, n, all);
  return sus_search(chan, n, all, std::move(state), gamma).selected;
}

}  // namespace zfra
