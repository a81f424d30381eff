#include "zfra/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace zfra {

std::vector<int> SystemConfig::rt_users() const {
  std::vector<int> out;
  for (int k = 0; k < num_users; ++k) {
    if (is_rt(k)) out.push_back(k);
  }
  return out;
}

int SystemConfig::num_rt_users() const {
  return static_cast<int>(std::count_if(min_rates.begin(), min_rates.end(),
                                        [](double d) { return d > 0.0; }));
}

void SystemConfig::validate() const {
  if (num_users < 1) throw ConfigError("K", "must be >= 1");
  if (num_antennas < 1) throw ConfigError("M", "must be >= 1");
  if (num_subchannels < 1) throw ConfigError("N", "must be >= 1");
  if (!(max_power > 0.0) || !std::isfinite(max_power)) throw ConfigError("P", "must be > 0");
  if (weights.size() != static_cast<std::size_t>(num_users))
    throw ConfigError("weights", "weights length != K");
  if (min_rates.size() != static_cast<std::size_t>(num_users))
    throw ConfigError("dmin", "dmin length != K");
  for (double c : weights) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("weights", "entries must be >= 0");
  }
  for (double d : min_rates) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw ConfigError("dmin", "entries must be >= 0");
  }
  if (!(epsilon > 0.0)) throw ConfigError("epsilon", "must be > 0");
  if (!(sus_gamma > 0.0 && sus_gamma <= 1.0)) throw ConfigError("sus_gamma", "must lie in (0,1]");
  if (max_dual_iters < 1) throw ConfigError("max_dual_iters", "must be >= 1");
}

SystemConfig make_config(int users, int antennas, int subchannels, double max_power) {
  SystemConfig cfg;
  cfg.num_users = users;
  cfg.num_antennas = antennas;
  cfg.num_subchannels = subchannels;
  cfg.max_power = max_power;
  cfg.weights.assign(static_cast<std::size_t>(std::max(users, 0)), 1.0);
  cfg.min_rates.assign(static_cast<std::size_t>(std::max(users, 0)), 0.0);
  return cfg;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, std::string_view v) {
  v = trim(v);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
    throw ConfigError(key, "not a number: '" + std::string(v) + "'");
  return out;
}

template <class Int>
Int parse_int(const std::string& key, std::string_view v) {
  v = trim(v);
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
    throw ConfigError(key, "not an integer: '" + std::string(v) + "'");
  return out;
}

std::vector<double> parse_list(const std::string& key, std::string_view v) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = v.find(',', pos);
    out.push_back(parse_double(key, v.substr(pos, comma == std::string_view::npos
                                                      ? std::string_view::npos
                                                      : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += format_double(xs[i]);
  }
  return out;
}

}  // namespace

SystemConfig parse_config(std::string_view text) {
  static const std::set<std::string> kKeys = {"K",        "M",    "N",       "P",
                                              "weights",  "dmin", "epsilon", "sus_gamma",
                                              "max_dual_iters", "seed"};
  std::map<std::string, std::string> values;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::string_view l = line;
    if (const auto hash = l.find('#'); hash != std::string_view::npos) l = l.substr(0, hash);
    l = trim(l);
    if (l.empty()) continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(std::string(l), "expected 'key = value'");
    std::string key(trim(l.substr(0, eq)));
    if (!kKeys.contains(key)) throw ConfigError(key, "unknown key");
    if (values.contains(key)) throw ConfigError(key, "duplicate key");
    values.emplace(key, std::string(trim(l.substr(eq + 1))));
  }
  for (const char* required : {"K", "M", "N", "P"}) {
    if (!values.contains(required)) throw ConfigError(required, "missing key");
  }

  SystemConfig cfg;
  cfg.num_users = parse_int<int>("K", values["K"]);
  cfg.num_antennas = parse_int<int>("M", values["M"]);
  cfg.num_subchannels = parse_int<int>("N", values["N"]);
  cfg.max_power = parse_double("P", values["P"]);
  if (cfg.num_users < 1) throw ConfigError("K", "must be >= 1");
  const auto k = static_cast<std::size_t>(cfg.num_users);
  cfg.weights = values.contains("weights") ? parse_list("weights", values["weights"])
                                           : std::vector<double>(k, 1.0);
  cfg.min_rates = values.contains("dmin") ? parse_list("dmin", values["dmin"])
                                          : std::vector<double>(k, 0.0);
  if (values.contains("epsilon")) cfg.epsilon = parse_double("epsilon", values["epsilon"]);
  if (values.contains("sus_gamma")) cfg.sus_gamma = parse_double("sus_gamma", values["sus_gamma"]);
  if (values.contains("max_dual_iters"))
    cfg.max_dual_iters = parse_int<int>("max_dual_iters", values["max_dual_iters"]);
  if (values.contains("seed")) cfg.seed = parse_int<std::uint64_t>("seed", values["seed"]);
  cfg.validate();
  return cfg;
}

SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const SystemConfig& cfg) {
  std::ostringstream out;
  out << "K = " << cfg.num_users << '\n'
      << "M = " << cfg.num_antennas << '\n'
      << "N = " << cfg.num_subchannels << '\n'
      << "P = " << format_double(cfg.max_power) << '\n'
      << "weights = " << join(cfg.weights) << '\n'
      << "dmin = " << join(cfg.min_rates) << '\n'
      << "epsilon = " << format_double(cfg.epsilon) << '\n'
      << "sus_gamma = " << format_double(cfg.sus_gamma) << '\n'
      << "max_dual_iters = " << cfg.max_dual_iters << '\n'
      << "seed = " << cfg.seed << '\n';
  return out.str();
}

ChannelRealization::ChannelRealization(int subchannels, int users, int antennas,
                                       std::uint64_t seed)
    : subchannels_(subchannels),
      users_(users),
      antennas_(antennas),
      seed_(seed),
      rows_(static_cast<std::size_t>(subchannels) * static_cast<std::size_t>(users),
            Eigen::RowVectorXcd::Zero(antennas)) {}

ChannelRealization generate_channel(const SystemConfig& cfg, std::uint64_t seed) {
  ChannelRealization chan(cfg.num_subchannels, cfg.num_users, cfg.num_antennas, seed);
  std::mt19937_64 rng(seed);
  // Open interval (0,1) so log() never sees zero.
  auto uniform = [&rng] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
  for (int n = 0; n < cfg.num_subchannels; ++n) {
    for (int k = 0; k < cfg.num_users; ++k) {
      auto& h = chan.row(n, k);
      for (int m = 0; m < cfg.num_antennas; ++m) {
        const double radius = std::sqrt(-std::log(uniform()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        h(m) = std::complex<double>(radius * std::cos(angle), radius * std::sin(angle));
      }
    }
  }
  return chan;
}

bool SdmaAssignment::contains(int n, int k) const {
  const auto& s = sets[static_cast<std::size_t>(n)];
  return std::find(s.begin(), s.end(), k) != s.end();
}

void SdmaAssignment::validate(int users, int antennas) const {
  for (std::size_t n = 0; n < sets.size(); ++n) {
    const auto& s = sets[n];
    if (static_cast<int>(s.size()) > antennas)
      throw std::invalid_argument("SDMA set of subchannel " + std::to_string(n) +
                                  " exceeds antenna count");
    std::set<int> seen;
    for (int k : s) {
      if (k < 0 || k >= users)
        throw std::invalid_argument("user index out of range on subchannel " + std::to_string(n));
      if (!seen.insert(k).second)
        throw std::invalid_argument("duplicate user on subchannel " + std::to_string(n));
    }
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
  return splitmix64(seed ^ splitmix64(trial));
}

}  // namespace zfra
