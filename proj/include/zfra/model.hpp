#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace zfra {

/// Raised for malformed or inconsistent configuration. `key()` names the
/// offending configuration key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Raised when a problem exceeds a documented size guard (e.g. the dual
/// bound enumeration).
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rate constraints count as met when r_k >= d_k - kRateTolerance.
inline constexpr double kRateTolerance = 1e-9;

struct SystemConfig {
  int num_users = 0;        // K
  int num_antennas = 0;     // M
  int num_subchannels = 0;  // N
  double max_power = 0.0;   // total power budget, linear scale
  std::vector<double> weights;    // c_k
  std::vector<double> min_rates;  // d_k in bits/s/Hz, 0 for best-effort users
  double epsilon = 0.2;
  double sus_gamma = 0.3;
  int max_dual_iters = 2000;
  std::uint64_t seed = 0;

  /// Indices of users with a positive minimum rate.
  std::vector<int> rt_users() const;
  int num_rt_users() const;
  bool is_rt(int k) const { return min_rates[static_cast<std::size_t>(k)] > 0.0; }

  /// Throws ConfigError naming the first violated field.
  void validate() const;
};

/// Config with unit weights and no rate constraints.
SystemConfig make_config(int users, int antennas, int subchannels, double max_power);

/// Parses the `key = value` configuration grammar. Unknown, duplicate or
/// missing keys are errors; `weights` defaults to all ones and `dmin` to all
/// zeros.
SystemConfig parse_config(std::string_view text);
SystemConfig load_config(const std::string& path);
std::string serialize_config(const SystemConfig& cfg);

/// Channel row vectors h_{n,k}, stored subchannel-major.
class ChannelRealization {
 public:
  ChannelRealization(int subchannels, int users, int antennas, std::uint64_t seed = 0);

  int subchannels() const { return subchannels_; }
  int users() const { return users_; }
  int antennas() const { return antennas_; }
  std::uint64_t seed() const { return seed_; }

  const Eigen::RowVectorXcd& row(int n, int k) const { return rows_[index(n, k)]; }
  Eigen::RowVectorXcd& row(int n, int k) { return rows_[index(n, k)]; }
  double norm(int n, int k) const { return rows_[index(n, k)].norm(); }

 private:
  std::size_t index(int n, int k) const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(users_) +
           static_cast<std::size_t>(k);
  }

  int subchannels_;
  int users_;
  int antennas_;
  std::uint64_t seed_;
  std::vector<Eigen::RowVectorXcd> rows_;
};

/// i.i.d. CN(0,1) entries drawn from std::mt19937_64 via Box-Muller on 53-bit
/// uniforms. Bit-identical on every conforming platform for a given seed.
ChannelRealization generate_channel(const SystemConfig& cfg, std::uint64_t seed);

/// Per-subchannel ordered SDMA sets S_n.
struct SdmaAssignment {
  std::vector<std::vector<int>> sets;

  SdmaAssignment() = default;
  explicit SdmaAssignment(int subchannels) : sets(static_cast<std::size_t>(subchannels)) {}

  int subchannels() const { return static_cast<int>(sets.size()); }
  bool contains(int n, int k) const;
  /// Throws std::invalid_argument on oversize sets, duplicates or bad indices.
  void validate(int users, int antennas) const;
};

/// SplitMix64 finalizer; used to derive per-trial seeds.
std::uint64_t splitmix64(std::uint64_t x);
/// Seed of trial `trial` in a run seeded with `seed`:
/// splitmix64(seed ^ splitmix64(trial)).
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial);

}  // namespace zfra
