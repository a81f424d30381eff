#include "zfra/scheduler.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "zfra/sus.hpp"

namespace zfra {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::Alg1: return "alg1";
    case Method::Alg2: return "alg2";
    case Method::MaxThroughput: return "maxthr";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "alg1") return Method::Alg1;
  if (name == "alg2") return Method::Alg2;
  if (name == "maxthr") return Method::MaxThroughput;
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

namespace {

std::uint64_t cube(int m) {
  const auto u = static_cast<std::uint64_t>(m);
  return u * u * u;
}

std::vector<int> users_in_need(const SystemConfig& cfg, const Eigen::VectorXd& rates_k) {
  std::vector<int> out;
  for (int k = 0; k < cfg.num_users; ++k)
    if (rates_k(k) < cfg.min_rates[static_cast<std::size_t>(k)] - kRateTolerance) out.push_back(k);
  return out;
}

// Subchannels by descending best channel norm among the users in need; ties
// keep the lower subchannel index first.
std::vector<int> reassignment_order(const ChannelRealization& chan, const std::vector<int>& need) {
  std::vector<double> key(static_cast<std::size_t>(chan.subchannels()), 0.0);
  for (int n = 0; n < chan.subchannels(); ++n)
    for (int k : need) key[static_cast<std::size_t>(n)] = std::max(key[static_cast<std::size_t>(n)], chan.norm(n, k));
  std::vector<int> order(static_cast<std::size_t>(chan.subchannels()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return key[static_cast<std::size_t>(a)] > key[static_cast<std::size_t>(b)];
  });
  return order;
}

// New SDMA set for subchannel n: critical users are kept, users in need get
// priority, then everyone else fills the remaining beams.
std::vector<int> reselect(const ChannelRealization& chan, const SystemConfig& cfg, int n,
                          const std::vector<int>& current_set, const Eigen::MatrixXd& rates_nk,
                          const Eigen::VectorXd& rates_k, const std::vector<int>& need,
                          std::uint64_t& work) {
  std::vector<int> critical;
  for (int k : current_set) {
    const double without_n = rates_k(k) - rates_nk(n, k);
    if (without_n < cfg.min_rates[static_cast<std::size_t>(k)] - kRateTolerance)
      critical.push_back(k);
  }
  const std::vector<int>& seed_users = critical.empty() ? need : critical;
  SusState state = sus_init(chan, n, seed_users);
  state = sus_search(chan, n, seed_users, std::move(state), cfg.sus_gamma);
  if (!critical.empty()) state = sus_search(chan, n, need, std::move(state), cfg.sus_gamma);
  std::vector<int> all(static_cast<std::size_t>(cfg.num_users));
  std::iota(all.begin(), all.end(), 0);
  state = sus_search(chan, n, all, std::move(state), cfg.sus_gamma);
  work += state.work;
  return state.selected;
}

AllocationResult make_result(Method method, const EffectiveGains& gains, PowerSolution power,
                             const SystemConfig& cfg) {
  AllocationResult r;
  r.method = method;
  r.assignment = gains.assignment;
  r.objective = power.objective(cfg);
  r.feasible = power.feasible;
  r.power = std::move(power);
  return r;
}

AllocationResult run_alg1(const ChannelRealization& chan, const SystemConfig& cfg,
                          EffectiveGains gains, PowerSolution power) {
  std::uint64_t work = 0;
  std::uint64_t loop_work = 0;
  auto need = users_in_need(cfg, power.rates_k);
  const auto order = reassignment_order(chan, need);
  work += static_cast<std::uint64_t>(chan.subchannels()) * (need.size() + 1);

  int iterations = 0;
  for (int n : order) {
    if (need.empty()) break;
    std::uint64_t step = 0;
    auto set = reselect(chan, cfg, n, gains.assignment.sets[static_cast<std::size_t>(n)],
                        power.rates_nk, power.rates_k, need, step);
    update_subchannel(gains, chan, n, std::move(set));
    step += cube(cfg.num_antennas);
    ++iterations;

    auto maxthr = max_throughput_pa(gains, cfg);
    step += maxthr.work;
    if (maxthr.feasible) {
      power = std::move(maxthr);
      loop_work += step;
      break;
    }
    power = rate_constrained_pa(gains, cfg, maxthr);
    step += power.work + static_cast<std::uint64_t>(cfg.num_users);
    loop_work += step;
    if (power.feasible) break;
    need = users_in_need(cfg, power.rates_k);
  }
  auto result = make_result(Method::Alg1, gains, std::move(power), cfg);
  result.iterations = iterations;
  result.loop_work = loop_work;
  result.work = work + loop_work;
  return result;
}

AllocationResult run_alg2(const ChannelRealization& chan, const SystemConfig& cfg,
                          EffectiveGains gains, const PowerSolution& start) {
  const int n_sub = cfg.num_subchannels;
  const double budget = cfg.max_power / n_sub;
  std::uint64_t work = 0;
  std::uint64_t loop_work = 0;

  Eigen::MatrixXd power = Eigen::MatrixXd::Zero(n_sub, cfg.num_users);
  Eigen::MatrixXd rates_nk = Eigen::MatrixXd::Zero(n_sub, cfg.num_users);
  Eigen::VectorXd thetas = Eigen::VectorXd::Zero(n_sub);
  for (int n = 0; n < n_sub; ++n) {
    auto sp = subchannel_pa(gains, cfg, n, budget);
    power.row(n) = sp.power.transpose();
    rates_nk.row(n) = sp.rates.transpose();
    thetas(n) = sp.theta;
    work += sp.work;
  }
  Eigen::VectorXd rates_k = rates_nk.colwise().sum().transpose();
  // The loop is entered from the block-3 state, so the first reselection sees
  // those rates; later ones see the per-subchannel totals.
  auto need = users_in_need(cfg, start.rates_k);
  const auto order = reassignment_order(chan, need);
  work += static_cast<std::uint64_t>(n_sub) * (need.size() + 1);

  int iterations = 0;
  for (int n : order) {
    if (need.empty()) break;
    std::uint64_t step = 0;
    const bool first = iterations == 0;
    auto set = reselect(chan, cfg, n, gains.assignment.sets[static_cast<std::size_t>(n)],
                        first ? start.rates_nk : rates_nk, first ? start.rates_k : rates_k, need,
                        step);
    update_subchannel(gains, chan, n, std::move(set));
    step += cube(cfg.num_antennas);
    ++iterations;

    auto sp = subchannel_pa(gains, cfg, n, budget);
    step += sp.work;
    for (int k = 0; k < cfg.num_users; ++k) {
      rates_k(k) += sp.rates(k) - rates_nk(n, k);
      rates_nk(n, k) = sp.rates(k);
      power(n, k) = sp.power(k);
    }
    thetas(n) = sp.theta;
    step += 2 * static_cast<std::uint64_t>(cfg.num_users);
    loop_work += step;
    need = users_in_need(cfg, rates_k);
  }

  // Global total-power pass over the final assignment.
  auto global = max_throughput_pa(gains, cfg);
  work += global.work;
  if (!global.feasible) {
    global = rate_constrained_pa(gains, cfg, global);
    work += global.work;
  }
  auto split = assemble_solution(gains, cfg, std::move(power), thetas.maxCoeff(),
                                 Eigen::VectorXd::Zero(cfg.num_users));
  const bool keep_split =
      split.feasible && (!global.feasible || split.objective(cfg) > global.objective(cfg));
  auto result = make_result(Method::Alg2, gains, keep_split ? std::move(split) : std::move(global),
                            cfg);
  result.iterations = iterations;
  result.loop_work = loop_work;
  result.work = work + loop_work;
  return result;
}

}  // namespace

SdmaAssignment max_throughput_assignment(const ChannelRealization& chan, const SystemConfig& cfg,
                                         std::uint64_t* work) {
  SdmaAssignment assign(cfg.num_subchannels);
  std::vector<int> all(static_cast<std::size_t>(cfg.num_users));
  std::iota(all.begin(), all.end(), 0);
  for (int n = 0; n < cfg.num_subchannels; ++n) {
    auto state = sus_init(chan, n, all);
    state = sus_search(chan, n, all, std::move(state), cfg.sus_gamma);
    if (work) *work += state.work;
    assign.sets[static_cast<std::size_t>(n)] = std::move(state.selected);
  }
  return assign;
}

AllocationResult reassign_alg1(const ChannelRealization& chan, const SystemConfig& cfg,
                               const AllocationResult& current) {
  return run_alg1(chan, cfg, effective_gains(chan, current.assignment), current.power);
}

AllocationResult reassign_alg2(const ChannelRealization& chan, const SystemConfig& cfg,
                               const AllocationResult& current) {
  return run_alg2(chan, cfg, effective_gains(chan, current.assignment), current.power);
}

AllocationResult allocate(const ChannelRealization& chan, const SystemConfig& cfg, Method method) {
  std::uint64_t work = 0;
  const auto assign = max_throughput_assignment(chan, cfg, &work);
  auto gains = effective_gains(chan, assign);
  work += static_cast<std::uint64_t>(cfg.num_subchannels) * cube(cfg.num_antennas);

  auto maxthr = max_throughput_pa(gains, cfg);
  work += maxthr.work;
  if (maxthr.feasible) {
    auto r = make_result(method, gains, std::move(maxthr), cfg);
    r.work = work;
    return r;
  }
  auto constrained = rate_constrained_pa(gains, cfg, maxthr);
  work += constrained.work;
  if (constrained.feasible || method == Method::MaxThroughput) {
    auto r = make_result(method, gains, std::move(constrained), cfg);
    r.work = work;
    return r;
  }

  AllocationResult r = method == Method::Alg1
                           ? run_alg1(chan, cfg, std::move(gains), std::move(constrained))
                           : run_alg2(chan, cfg, std::move(gains), constrained);
  r.method = method;
  r.work += work;
  return r;
}

}  // namespace zfra
