#include "zfra/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "zfra/bound.hpp"
#include "zfra/powalloc.hpp"
#include "zfra/scheduler.hpp"
#include "zfra/zfcore.hpp"

namespace zfra {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <class T>
T parse_field(std::string_view field, std::size_t line, const char* name) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw std::runtime_error("csv line " + std::to_string(line) + ": bad " + name + " '" +
                             std::string(field) + "'");
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

void validate_methods(const std::vector<std::string>& methods) {
  if (methods.empty()) throw ConfigError("methods", "no methods requested");
  for (const auto& m : methods)
    if (m != "bound" && m != "alg1" && m != "alg2" && m != "maxthr")
      throw ConfigError("methods", "unknown method '" + m + "'");
}

bool wants_bound(const RunOptions& opts) {
  return std::find(opts.methods.begin(), opts.methods.end(), "bound") != opts.methods.end();
}

void check_bound_guard(int users, int antennas, int subchannels) {
  if (enumeration_size(users, antennas, subchannels) > kMaxEnumeratedSets)
    throw GuardError("bound: " + std::to_string(enumeration_size(users, antennas, subchannels)) +
                     " SDMA sets exceed the enumeration guard of " +
                     std::to_string(kMaxEnumeratedSets));
}

double sum_min_rates(const SystemConfig& cfg) {
  double s = 0.0;
  for (double d : cfg.min_rates) s += d;
  return s;
}

// `catalog` may be null; the bound then builds its own.
RunRecord run_method(const ChannelRealization& chan, const SystemConfig& cfg,
                     const std::string& method, std::uint64_t seed, bool timing,
                     const SetCatalog* catalog = nullptr) {
  RunRecord rec;
  rec.seed = seed;
  rec.K = cfg.num_users;
  rec.M = cfg.num_antennas;
  rec.N = cfg.num_subchannels;
  rec.D = cfg.num_rt_users();
  rec.P = cfg.max_power;
  rec.sum_dmin = sum_min_rates(cfg);
  rec.method = method;

  const auto t0 = std::chrono::steady_clock::now();
  if (method == "bound") {
    const auto b = catalog ? upper_bound(*catalog, cfg) : upper_bound(chan, cfg);
    rec.feasible = !b.infeasible;
    rec.objective = b.infeasible ? 0.0 : std::max(0.0, b.value);
    rec.iterations = static_cast<int>(b.history.size());
  } else {
    const auto r = allocate(chan, cfg, parse_method(method));
    rec.feasible = r.feasible;
    rec.objective = std::max(0.0, r.objective);
    rec.iterations = r.iterations;
  }
  const auto t1 = std::chrono::steady_clock::now();
  rec.elapsed_us =
      timing ? std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count() : 0;
  return rec;
}

// Runs job(i) for i in [0, count) on `jobs` workers and concatenates the
// outputs in index order.
template <class Job>
std::vector<RunRecord> run_parallel(int count, int jobs, Job job) {
  std::vector<std::vector<RunRecord>> out(static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        out[static_cast<std::size_t>(i)] = job(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const int workers = std::clamp(jobs, 1, std::max(1, count));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<RunRecord> merged;
  for (auto& v : out) merged.insert(merged.end(), std::make_move_iterator(v.begin()),
                                    std::make_move_iterator(v.end()));
  return merged;
}

Eigen::VectorXd baseline_rates(const ChannelRealization& chan, const SystemConfig& cfg) {
  SystemConfig plain = cfg;
  std::fill(plain.min_rates.begin(), plain.min_rates.end(), 0.0);
  const auto gains = effective_gains(chan, max_throughput_assignment(chan, plain));
  return max_throughput_pa(gains, plain).rates_k;
}

std::vector<double> sweep_points(double start, double stop, double step) {
  if (!(step > 0.0)) throw ConfigError("step", "must be positive");
  if (stop < start) throw ConfigError("stop", "must not be below start");
  std::vector<double> pts;
  // Index-based so the grid does not drift with accumulated rounding.
  for (long i = 0;; ++i) {
    const double v = start + static_cast<double>(i) * step;
    if (v > stop + 1e-9 * std::max(1.0, std::abs(stop))) break;
    pts.push_back(v);
  }
  return pts;
}

// One trial's Dmin sweep: offsets added to r0 for the RT users in `rt`.
std::vector<RunRecord> dmin_sweep_trial(const SystemConfig& base, const std::vector<int>& rt,
                                        const std::vector<double>& offsets, std::uint64_t seed,
                                        const RunOptions& opts) {
  const auto chan = generate_channel(base, seed);
  const auto r0 = baseline_rates(chan, base);
  std::optional<SetCatalog> catalog;
  if (wants_bound(opts)) catalog.emplace(chan);
  std::vector<RunRecord> recs;
  for (double off : offsets) {
    SystemConfig cfg = base;
    std::fill(cfg.min_rates.begin(), cfg.min_rates.end(), 0.0);
    for (int k : rt) cfg.min_rates[static_cast<std::size_t>(k)] = r0(k) + off;
    bool any = false;
    bool certified = false;
    for (const auto& m : opts.methods) {
      recs.push_back(run_method(chan, cfg, m, seed, opts.timing, catalog ? &*catalog : nullptr));
      recs.back().D = static_cast<int>(rt.size());
      if (m == "bound") certified = !recs.back().feasible;
      else any = any || recs.back().feasible;
    }
    if (certified || !any) break;
  }
  return recs;
}

std::vector<int> rt_mask(const SystemConfig& cfg) {
  auto rt = cfg.rt_users();
  if (rt.empty()) rt.push_back(0);
  return rt;
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.seed << ',' << r.K << ',' << r.M << ',' << r.N << ',' << r.D << ','
        << fmt_double(r.P) << ',' << fmt_double(r.sum_dmin) << ',' << r.method << ','
        << (r.feasible ? 1 : 0) << ',' << fmt_double(r.objective) << ',' << r.elapsed_us << ','
        << r.iterations << '\n';
  }
}

std::string to_csv(const std::vector<RunRecord>& records) {
  std::ostringstream os;
  write_csv(os, records);
  return os.str();
}

std::vector<RunRecord> parse_csv(std::string_view text) {
  std::vector<RunRecord> out;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line != kCsvHeader) throw std::runtime_error("csv: unexpected header");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 12)
      throw std::runtime_error("csv line " + std::to_string(line_no) + ": expected 12 fields");
    RunRecord r;
    r.seed = parse_field<std::uint64_t>(f[0], line_no, "seed");
    r.K = parse_field<int>(f[1], line_no, "K");
    r.M = parse_field<int>(f[2], line_no, "M");
    r.N = parse_field<int>(f[3], line_no, "N");
    r.D = parse_field<int>(f[4], line_no, "D");
    r.P = parse_field<double>(f[5], line_no, "P");
    r.sum_dmin = parse_field<double>(f[6], line_no, "sum_dmin");
    r.method = std::string(f[7]);
    const int feas = parse_field<int>(f[8], line_no, "feasible");
    if (feas != 0 && feas != 1)
      throw std::runtime_error("csv line " + std::to_string(line_no) + ": feasible not 0/1");
    r.feasible = feas == 1;
    r.objective = parse_field<double>(f[9], line_no, "objective");
    r.elapsed_us = parse_field<std::int64_t>(f[10], line_no, "elapsed_us");
    r.iterations = parse_field<int>(f[11], line_no, "iterations");
    out.push_back(std::move(r));
  }
  if (!header_seen) throw std::runtime_error("csv: missing header");
  return out;
}

std::vector<RunRecord> read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

std::vector<RunRecord> run_trials(const SystemConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  validate_methods(opts.methods);
  if (wants_bound(opts)) check_bound_guard(cfg.num_users, cfg.num_antennas, cfg.num_subchannels);
  return run_parallel(opts.trials, opts.jobs, [&](int t) {
    const auto seed = trial_seed(opts.seed, static_cast<std::uint64_t>(t));
    const auto chan = generate_channel(cfg, seed);
    std::vector<RunRecord> recs;
    for (const auto& m : opts.methods) recs.push_back(run_method(chan, cfg, m, seed, opts.timing));
    return recs;
  });
}

SweepParam parse_sweep_param(std::string_view name) {
  if (name == "dmin") return SweepParam::Dmin;
  if (name == "D") return SweepParam::D;
  if (name == "K") return SweepParam::K;
  throw ConfigError("param", "unknown sweep parameter '" + std::string(name) + "'");
}

std::vector<RunRecord> run_sweep(const SystemConfig& cfg, const SweepSpec& spec,
                                 const RunOptions& opts) {
  cfg.validate();
  validate_methods(opts.methods);
  const bool bound = wants_bound(opts);

  switch (spec.param) {
    case SweepParam::Dmin: {
      if (bound) check_bound_guard(cfg.num_users, cfg.num_antennas, cfg.num_subchannels);
      const auto offsets = sweep_points(spec.start, spec.stop, spec.step);
      const auto rt = rt_mask(cfg);
      return run_parallel(opts.trials, opts.jobs, [&](int t) {
        return dmin_sweep_trial(cfg, rt, offsets,
                                trial_seed(opts.seed, static_cast<std::uint64_t>(t)), opts);
      });
    }
    case SweepParam::D: {
      if (bound) check_bound_guard(cfg.num_users, cfg.num_antennas, cfg.num_subchannels);
      std::vector<int> counts;
      for (double v : sweep_points(spec.start, spec.stop, spec.step)) {
        const int d = static_cast<int>(std::lround(v));
        if (d < 0 || d > cfg.num_users) throw ConfigError("stop", "D outside [0, K]");
        counts.push_back(d);
      }
      return run_parallel(opts.trials, opts.jobs, [&](int t) {
        const auto seed = trial_seed(opts.seed, static_cast<std::uint64_t>(t));
        const auto chan = generate_channel(cfg, seed);
        const auto r0 = baseline_rates(chan, cfg);
        std::optional<SetCatalog> catalog;
        if (bound) catalog.emplace(chan);
        std::vector<RunRecord> recs;
        for (int d : counts) {
          SystemConfig c = cfg;
          std::fill(c.min_rates.begin(), c.min_rates.end(), 0.0);
          for (int k = 0; k < d; ++k) c.min_rates[static_cast<std::size_t>(k)] = 1.1 * r0(k);
          for (const auto& m : opts.methods) {
            auto rec = run_method(chan, c, m, seed, opts.timing, catalog ? &*catalog : nullptr);
            rec.D = d;
            recs.push_back(std::move(rec));
          }
        }
        return recs;
      });
    }
    case SweepParam::K: {
      std::vector<int> users;
      for (double v : sweep_points(spec.start, spec.stop, spec.step)) {
        const int k = static_cast<int>(std::lround(v));
        if (k < 1) throw ConfigError("start", "K must be positive");
        if (bound) check_bound_guard(k, cfg.num_antennas, cfg.num_subchannels);
        users.push_back(k);
      }
      if (!(spec.delta_r > 0.0)) throw ConfigError("delta_r", "must be positive");
      if (spec.max_points < 1) throw ConfigError("max_points", "must be positive");
      const int d = std::max(1, cfg.num_rt_users());
      std::vector<double> offsets;
      for (int i = 0; i < spec.max_points; ++i) offsets.push_back(i * spec.delta_r);
      std::vector<RunRecord> all;
      for (int k : users) {
        SystemConfig c = cfg;
        c.num_users = k;
        c.weights.assign(static_cast<std::size_t>(k), 1.0);
        for (int j = 0; j < std::min(k, cfg.num_users); ++j)
          c.weights[static_cast<std::size_t>(j)] = cfg.weights[static_cast<std::size_t>(j)];
        c.min_rates.assign(static_cast<std::size_t>(k), 0.0);
        std::vector<int> rt;
        for (int j = 0; j < std::min(d, k); ++j) rt.push_back(j);
        auto recs = run_parallel(opts.trials, opts.jobs, [&](int t) {
          return dmin_sweep_trial(c, rt, offsets,
                                  trial_seed(opts.seed, static_cast<std::uint64_t>(t)), opts);
        });
        all.insert(all.end(), recs.begin(), recs.end());
      }
      return all;
    }
  }
  return {};
}

double percent_gap(double reference, double value) {
  return 100.0 * (reference - value) / reference;
}

std::vector<GapMetrics> compute_group_gaps(const std::vector<RunRecord>& records) {
  using Key = std::tuple<std::uint64_t, int, int, int, int, double>;
  std::map<Key, std::size_t> index;
  std::vector<std::vector<const RunRecord*>> groups;
  for (const auto& r : records) {
    const Key key{r.seed, r.K, r.M, r.N, r.D, r.P};
    auto [it, fresh] = index.emplace(key, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(&r);
  }

  std::vector<GapMetrics> out;
  for (const auto& g : groups) {
    GapMetrics m;
    m.groups = 1;
    // Sweep points keyed by sum_dmin, then per method.
    std::map<double, std::map<std::string, const RunRecord*>> points;
    for (const RunRecord* r : g) points[r->sum_dmin][r->method] = r;

    auto largest_feasible = [&](const std::string& method) -> std::optional<double> {
      std::optional<double> best;
      for (const auto& [s, by] : points) {
        auto it = by.find(method);
        if (it != by.end() && it->second->feasible) best = s;
      }
      return best;
    };
    m.r0 = points.begin()->first;
    m.r1 = largest_feasible("alg1");
    m.r2 = largest_feasible("alg2");  // alg2 stands in as method 2
    m.r3 = m.r2;
    if (m.r1 && m.r2 && *m.r1 != 0.0) {
      m.A = percent_gap(*m.r1, *m.r2);
      m.B = m.A;
    }

    // Bound versus `method`, averaged over window points where both exist.
    auto window_gap = [&](const std::string& method, std::optional<double>& u_bound,
                          std::optional<double>& u_method) -> std::optional<double> {
      if (!m.r2) return std::nullopt;
      double sb = 0.0, sm = 0.0;
      int count = 0;
      for (const auto& [s, by] : points) {
        if (s < *m.r0 || s > *m.r2) continue;
        auto b = by.find("bound");
        auto h = by.find(method);
        if (b == by.end() || h == by.end()) continue;
        if (!b->second->feasible || !h->second->feasible) continue;
        sb += b->second->objective;
        sm += h->second->objective;
        ++count;
      }
      if (count == 0 || sb <= 0.0) return std::nullopt;
      u_bound = sb / count;
      u_method = sm / count;
      return percent_gap(*u_bound, *u_method);
    };
    std::optional<double> ub1, um1;
    m.F = window_gap("alg1", ub1, um1);
    m.E = window_gap("alg2", m.u1, m.u2);
    m.G = m.E;
    out.push_back(m);
  }
  return out;
}

GapMetrics compute_gaps(const std::vector<RunRecord>& records) {
  const auto groups = compute_group_gaps(records);
  GapMetrics total;
  total.groups = static_cast<int>(groups.size());
  auto average = [&](std::optional<double> GapMetrics::*field) {
    double s = 0.0;
    int n = 0;
    for (const auto& g : groups)
      if (g.*field) {
        s += *(g.*field);
        ++n;
      }
    if (n > 0) total.*field = s / n;
  };
  for (auto f : {&GapMetrics::A, &GapMetrics::B, &GapMetrics::E, &GapMetrics::F, &GapMetrics::G,
                 &GapMetrics::r0, &GapMetrics::r1, &GapMetrics::r2, &GapMetrics::r3,
                 &GapMetrics::u1, &GapMetrics::u2})
    average(f);
  return total;
}

std::string format_gaps(const GapMetrics& g) {
  std::ostringstream os;
  auto put = [&](const char* name, const std::optional<double>& v, const char* note) {
    os << name << ',';
    if (v) os << fmt_double(*v);
    else os << "NA";
    os << ',' << note << '\n';
  };
  os << "metric,value,note\n";
  put("A", g.A, "% alg1 vs method 2 (alg2 substituted)");
  put("B", g.B, "% alg1 vs alg2");
  put("E", g.E, "% bound vs method 2 (alg2 substituted)");
  put("F", g.F, "% bound vs alg1");
  put("G", g.G, "% bound vs alg2");
  put("r0", g.r0, "sweep origin sum_dmin");
  put("r1", g.r1, "largest feasible sum_dmin alg1");
  put("r2", g.r2, "largest feasible sum_dmin method 2 (alg2)");
  put("r3", g.r3, "largest feasible sum_dmin alg2");
  put("u1", g.u1, "mean bound over [r0 r2]");
  put("u2", g.u2, "mean method 2 objective over [r0 r2]");
  os << "groups," << g.groups << ",sweeps averaged\n";
  return os.str();
}

}  // namespace zfra
