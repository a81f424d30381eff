#include "zfra/bound.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "zfra/zfcore.hpp"

namespace zfra {

namespace {

constexpr double kLn2 = std::numbers::ln2;

std::uint64_t choose(int n, int r) {
  if (r < 0 || r > n) return 0;
  std::uint64_t out = 1;
  for (int i = 1; i <= r; ++i) out = out * static_cast<std::uint64_t>(n - r + i) / static_cast<std::uint64_t>(i);
  return out;
}

// Lagrangian contribution of one user at weight w and cost beta:
// max_p w log2(1+p) - theta beta p.
double lagrangian_term(double w, double theta, double beta, double& power) {
  const double water = w / (theta * kLn2);
  if (!(beta < water)) {
    power = 0.0;
    return 0.0;
  }
  power = water / beta - 1.0;
  return w * std::log2(water / beta) - w / kLn2 + theta * beta;
}

}  // namespace

std::uint64_t enumeration_size(int users, int antennas, int subchannels) {
  std::uint64_t per = 0;
  for (int g = 1; g <= std::min(users, antennas); ++g) per += choose(users, g);
  return per * static_cast<std::uint64_t>(subchannels);
}

SetCatalog::SetCatalog(const ChannelRealization& chan)
    : users_(chan.users()), antennas_(chan.antennas()), channel_seed_(chan.seed()) {
  if (enumeration_size(users_, antennas_, chan.subchannels()) > kMaxEnumeratedSets)
    throw GuardError("enumeration too large");
  const int gmax = std::min(users_, antennas_);
  binom_.assign(static_cast<std::size_t>(users_ + 1),
                std::vector<std::uint64_t>(static_cast<std::size_t>(gmax + 1), 0));
  for (int n = 0; n <= users_; ++n)
    for (int r = 0; r <= gmax; ++r) binom_[static_cast<std::size_t>(n)][static_cast<std::size_t>(r)] = choose(n, r);

  subchannels_.resize(static_cast<std::size_t>(chan.subchannels()));
  min_single_beta_ = std::numeric_limits<double>::infinity();
  for (int n = 0; n < chan.subchannels(); ++n) {
    auto& sc = subchannels_[static_cast<std::size_t>(n)];
    sc.single_beta.resize(static_cast<std::size_t>(users_));
    for (int k = 0; k < users_; ++k) {
      const double nrm = chan.norm(n, k);
      sc.single_beta[static_cast<std::size_t>(k)] =
          nrm > 0.0 ? 1.0 / (nrm * nrm) : std::numeric_limits<double>::infinity();
      min_single_beta_ = std::min(min_single_beta_, sc.single_beta[static_cast<std::size_t>(k)]);
    }
    sc.betas.resize(static_cast<std::size_t>(gmax));
    sc.valid.resize(static_cast<std::size_t>(gmax));
    for (int g = 1; g <= gmax; ++g) {
      const auto count = choose(users_, g);
      auto& betas = sc.betas[static_cast<std::size_t>(g - 1)];
      auto& valid = sc.valid[static_cast<std::size_t>(g - 1)];
      betas.assign(count * static_cast<std::uint64_t>(g), 0.0);
      valid.assign(count, 0);
      // Lexicographic walk over g-subsets; slot = combinadic rank.
      std::vector<int> combo(static_cast<std::size_t>(g));
      std::iota(combo.begin(), combo.end(), 0);
      while (true) {
        std::uint64_t rank = 0;
        for (int i = 0; i < g; ++i)
          rank += binom_[static_cast<std::size_t>(combo[static_cast<std::size_t>(i)])][static_cast<std::size_t>(i + 1)];
        if (auto sg = try_set_gains(chan, n, combo)) {
          valid[rank] = 1;
          for (int j = 0; j < g; ++j) betas[rank * static_cast<std::uint64_t>(g) + static_cast<std::uint64_t>(j)] = sg->beta(j);
        }
        int i = g - 1;
        while (i >= 0 && combo[static_cast<std::size_t>(i)] == users_ - g + i) --i;
        if (i < 0) break;
        ++combo[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < g; ++j) combo[static_cast<std::size_t>(j)] = combo[static_cast<std::size_t>(j - 1)] + 1;
      }
    }
  }
}

const double* SetCatalog::set_betas(const Subchannel& sc, const std::vector<int>& sorted_users) const {
  const auto g = static_cast<int>(sorted_users.size());
  std::uint64_t rank = 0;
  for (int i = 0; i < g; ++i)
    rank += binom_[static_cast<std::size_t>(sorted_users[static_cast<std::size_t>(i)])][static_cast<std::size_t>(i + 1)];
  return &sc.betas[static_cast<std::size_t>(g - 1)][rank * static_cast<std::uint64_t>(g)];
}

double SetCatalog::set_value(const Subchannel& sc, const std::vector<int>& sorted_users,
                             const std::vector<double>& levels, double theta, bool& valid) const {
  const auto g = static_cast<int>(sorted_users.size());
  std::uint64_t rank = 0;
  for (int i = 0; i < g; ++i)
    rank += binom_[static_cast<std::size_t>(sorted_users[static_cast<std::size_t>(i)])][static_cast<std::size_t>(i + 1)];
  valid = sc.valid[static_cast<std::size_t>(g - 1)][rank] != 0;
  if (!valid) return 0.0;
  const double* beta = set_betas(sc, sorted_users);
  double value = 0.0;
  double unused = 0.0;
  for (int j = 0; j < g; ++j)
    value += lagrangian_term(levels[static_cast<std::size_t>(sorted_users[static_cast<std::size_t>(j)])], theta, beta[j], unused);
  return value;
}

DualIterate SetCatalog::evaluate(const SystemConfig& cfg, double theta,
                                 const Eigen::VectorXd& delta,
                                 const std::vector<double>& weights) const {
  if (!(theta > 0.0)) throw std::invalid_argument("dual evaluation needs theta > 0");
  if (cfg.num_users != users_ || cfg.num_subchannels != subchannels())
    throw std::invalid_argument("config does not match the catalog's channel");
  ++evaluations_;
  const int n_sub = static_cast<int>(subchannels_.size());
  std::vector<double> levels(static_cast<std::size_t>(users_));
  for (int k = 0; k < users_; ++k) levels[static_cast<std::size_t>(k)] = weights[static_cast<std::size_t>(k)] + delta(k);

  DualIterate it;
  it.theta = theta;
  it.delta = delta;
  it.best_sets = SdmaAssignment(n_sub);
  it.rates_k = Eigen::VectorXd::Zero(users_);
  double total = 0.0;

  std::vector<int> order;
  std::vector<double> single;
  std::vector<int> chosen;
  std::vector<int> sorted;
  for (int n = 0; n < n_sub; ++n) {
    const auto& sc = subchannels_[static_cast<std::size_t>(n)];
    // A member's beta inside any set is at least its stand-alone beta, so the
    // stand-alone terms bound every set's value from above.
    single.assign(static_cast<std::size_t>(users_), 0.0);
    order.clear();
    for (int k = 0; k < users_; ++k) {
      double p = 0.0;
      single[static_cast<std::size_t>(k)] =
          lagrangian_term(levels[static_cast<std::size_t>(k)], theta, sc.single_beta[static_cast<std::size_t>(k)], p);
      if (single[static_cast<std::size_t>(k)] > 0.0) order.push_back(k);
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double va = single[static_cast<std::size_t>(a)], vb = single[static_cast<std::size_t>(b)];
      return va != vb ? va > vb : a < b;
    });
    const int cand = static_cast<int>(order.size());

    double best = 0.0;
    std::vector<int> best_set;
    chosen.clear();
    // Depth-first over subsets of `order` in index order.
    std::function<void(int, double)> visit = [&](int next, double optimistic_chosen) {
      for (int i = next; i < cand; ++i) {
        const int slots = antennas_ - static_cast<int>(chosen.size());
        if (slots <= 0) return;
        // Optimistic value of any set extending chosen with order[i..].
        double optimistic = optimistic_chosen;
        for (int j = i; j < std::min(cand, i + slots); ++j) optimistic += single[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])];
        if (optimistic <= best) return;
        chosen.push_back(order[static_cast<std::size_t>(i)]);
        sorted = chosen;
        std::sort(sorted.begin(), sorted.end());
        bool valid = false;
        const double value = set_value(sc, sorted, levels, theta, valid);
        if (valid) {
          if (value > best) {
            best = value;
            best_set = sorted;
          }
          visit(i + 1, optimistic_chosen + single[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
        }
        chosen.pop_back();
      }
    };
    visit(0, 0.0);

    total += best;
    if (!best_set.empty()) {
      const auto g = static_cast<int>(best_set.size());
      const double* beta = set_betas(sc, best_set);
      for (int j = 0; j < g; ++j) {
        const int k = best_set[static_cast<std::size_t>(j)];
        double p = 0.0;
        lagrangian_term(levels[static_cast<std::size_t>(k)], theta, beta[j], p);
        if (p > 0.0) {
          it.active_level += levels[static_cast<std::size_t>(k)];
          it.active_beta += beta[j];
        }
        it.used_power += beta[j] * p;
        it.rates_k(k) += std::log2(1.0 + p);
      }
    }
    it.best_sets.sets[static_cast<std::size_t>(n)] = std::move(best_set);
  }
  double rate_terms = 0.0;
  for (int k = 0; k < users_; ++k) rate_terms += delta(k) * cfg.min_rates[static_cast<std::size_t>(k)];
  it.dual_value = total + theta * cfg.max_power - rate_terms;
  return it;
}

DualIterate dual_function(const ChannelRealization& chan, const SystemConfig& cfg, double theta,
                          const Eigen::VectorXd& delta) {
  SetCatalog catalog(chan);
  return catalog.evaluate(cfg, theta, delta, cfg.weights);
}

namespace {

// Minimizes the convex map theta -> g(theta, delta) by bisection on the sign
// of its subgradient P - sum beta p, in log scale. Every evaluation is a valid
// dual value; the smallest is returned.
DualIterate minimize_theta(const SetCatalog& catalog, const SystemConfig& cfg,
                           const Eigen::VectorXd& delta, const std::vector<double>& weights,
                           double min_single_beta, double& hint) {
  double max_level = 0.0;
  for (int k = 0; k < cfg.num_users; ++k)
    max_level = std::max(max_level, weights[static_cast<std::size_t>(k)] + delta(k));
  DualIterate best;
  best.dual_value = std::numeric_limits<double>::infinity();
  auto eval = [&](double theta) {
    auto it = catalog.evaluate(cfg, theta, delta, weights);
    if (it.dual_value < best.dual_value) best = it;
    return it;
  };
  if (!(max_level > 0.0)) {
    // No user can be served; the dual decreases to its theta -> 0 limit.
    eval(1e-12);
    return best;
  }
  // Above cap no pair receives power.
  const double cap = max_level / (kLn2 * min_single_beta) * (1.0 + 1e-9);
  double hi = cap;
  double lo = cap;
  if (hint > 0.0 && hint < cap) {
    // Bracket outward from the previous minimizer.
    if (eval(hint).used_power > cfg.max_power) {
      lo = hint;
      hi = std::min(cap, 2.0 * hint);
      while (hi < cap && eval(hi).used_power > cfg.max_power) {
        lo = hi;
        hi = std::min(cap, 2.0 * hi);
      }
    } else {
      hi = hint;
      lo = 0.5 * hint;
      for (int i = 0; i < 400 && eval(lo).used_power <= cfg.max_power; ++i) {
        hi = lo;
        lo *= 0.5;
      }
    }
  } else {
    for (int i = 0; i < 400; ++i) {
      lo *= 0.25;
      if (eval(lo).used_power > cfg.max_power) break;
    }
  }
  // Safeguarded fixed-point steps: exact once the active pairs settle,
  // log-scale bisection whenever a step leaves the bracket or stalls.
  DualIterate last = best;
  bool bisect = true;
  for (int i = 0; i < 120 && hi / lo > 1.0 + 1e-10; ++i) {
    double next = std::sqrt(lo * hi);
    if (!bisect && last.active_beta + cfg.max_power > 0.0) {
      const double fp = last.active_level / (kLn2 * (cfg.max_power + last.active_beta));
      if (fp > lo && fp < hi) next = fp;
    }
    const double width = std::log(hi / lo);
    last = eval(next);
    const double used = last.used_power;
    if (std::abs(used - cfg.max_power) <= 1e-12 * std::max(1.0, cfg.max_power)) break;
    if (used > cfg.max_power)
      lo = next;
    else
      hi = next;
    bisect = !bisect && std::log(hi / lo) > 0.5 * width;
  }
  eval(hi);
  hint = best.theta;
  return best;
}

struct DeltaSearch {
  DualIterate best;
  bool unbounded = false;  // the minimizer escaped every bracket
  bool converged = true;
  std::vector<double> history;
};

// Minimizes a convex function of the RT users' duals. `evaluate` returns the
// dual iterate at delta (its rates give the subgradient r - d).
DeltaSearch minimize_delta(const SystemConfig& cfg, const std::vector<int>& rt,
                           const std::function<DualIterate(const Eigen::VectorXd&)>& evaluate,
                           double scale, std::uint64_t restart_seed) {
  DeltaSearch out;
  out.best.dual_value = std::numeric_limits<double>::infinity();
  auto consider = [&](const DualIterate& it) {
    if (it.dual_value < out.best.dual_value) out.best = it;
    out.history.push_back(out.best.dual_value);
  };
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(cfg.num_users);
  auto at0 = evaluate(delta);
  consider(at0);
  if (rt.empty()) return out;

  auto shortfall = [&](const DualIterate& it, int k) {
    return cfg.min_rates[static_cast<std::size_t>(k)] - it.rates_k(k);
  };

  if (rt.size() == 1) {
    // One dual: bracket the sign change of the subgradient, then golden section.
    const int k = rt.front();
    if (!(shortfall(at0, k) > 0.0)) return out;
    double lo = 0.0;
    double hi = scale;
    bool bracketed = false;
    for (int i = 0; i < 60; ++i) {
      delta(k) = hi;
      const auto it = evaluate(delta);
      consider(it);
      if (!(shortfall(it, k) > 0.0)) {
        bracketed = true;
        break;
      }
      lo = hi;
      hi *= 2.0;
    }
    if (!bracketed) {
      out.unbounded = true;
      out.converged = false;
      return out;
    }
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    delta(k) = x1;
    auto f1 = evaluate(delta);
    consider(f1);
    delta(k) = x2;
    auto f2 = evaluate(delta);
    consider(f2);
    for (int i = 0; i < 80 && (b - a) > 1e-9 * std::max(1.0, b); ++i) {
      if (f1.dual_value <= f2.dual_value) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - inv_phi * (b - a);
        delta(k) = x1;
        f1 = evaluate(delta);
        consider(f1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + inv_phi * (b - a);
        delta(k) = x2;
        f2 = evaluate(delta);
        consider(f2);
      }
    }
    return out;
  }

  // Several duals: projected subgradient with normalized a/sqrt(t) steps and
  // three starts (zero plus two random).
  std::mt19937_64 rng(restart_seed);
  std::uniform_real_distribution<double> start(0.0, 2.0 * scale);
  out.converged = false;
  for (int restart = 0; restart < 3; ++restart) {
    delta.setZero();
    if (restart > 0)
      for (int k : rt) delta(k) = start(rng);
    auto it = evaluate(delta);
    consider(it);
    for (int t = 1; t <= cfg.max_dual_iters; ++t) {
      double norm = 0.0;
      double projected = 0.0;
      for (int k : rt) {
        const double s = shortfall(it, k);
        norm += s * s;
        const double pg = delta(k) > 0.0 ? s : std::max(s, 0.0);
        projected = std::max(projected, std::abs(pg));
      }
      if (projected < 1e-9) {
        out.converged = true;
        break;
      }
      const double step = scale / std::sqrt(static_cast<double>(t)) / std::sqrt(norm);
      for (int k : rt) delta(k) = std::max(delta(k) + step * shortfall(it, k), 0.0);
      it = evaluate(delta);
      consider(it);
    }
  }
  return out;
}

}  // namespace

BoundResult upper_bound(const ChannelRealization& chan, const SystemConfig& cfg) {
  return upper_bound(SetCatalog(chan), cfg);
}

BoundResult upper_bound(const SetCatalog& catalog, const SystemConfig& cfg) {
  const auto rt = cfg.rt_users();
  const double min_single_beta = catalog.min_single_beta();
  const double max_weight = *std::max_element(cfg.weights.begin(), cfg.weights.end());
  const double scale = std::max(1.0, max_weight);
  const std::uint64_t seed = splitmix64(catalog.channel_seed() ^ cfg.seed);

  BoundResult out;
  double hint = 0.0;
  auto search = minimize_delta(
      cfg, rt,
      [&](const Eigen::VectorXd& delta) {
        return minimize_theta(catalog, cfg, delta, cfg.weights, min_single_beta, hint);
      },
      scale, seed);
  out.best = search.best;
  out.value = search.best.dual_value;
  out.converged = search.converged;
  out.history = std::move(search.history);

  if (!rt.empty()) {
    // Feasibility form: zero objective weights. The dual is positively
    // homogeneous in (theta, delta), so fixing theta = 1 loses nothing; a
    // negative value certifies that no assignment meets the rate targets.
    const std::vector<double> zero(static_cast<std::size_t>(cfg.num_users), 0.0);
    auto feas = minimize_delta(
        cfg, rt,
        [&](const Eigen::VectorXd& delta) { return catalog.evaluate(cfg, 1.0, delta, zero); }, 1.0,
        splitmix64(seed));
    out.infeasible = feas.best.dual_value < -1e-9 * std::max(1.0, cfg.max_power);
  }
  if (search.unbounded) out.infeasible = true;
  return out;
}

}  // namespace zfra
