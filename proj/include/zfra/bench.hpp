#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "zfra/model.hpp"

namespace zfra {

inline constexpr std::string_view kCsvHeader =
    "seed,K,M,N,D,P,sum_dmin,method,feasible,objective,elapsed_us,iterations";

struct RunRecord {
  std::uint64_t seed = 0;  // per-trial channel seed
  int K = 0;
  int M = 0;
  int N = 0;
  int D = 0;
  double P = 0.0;
  double sum_dmin = 0.0;
  std::string method;  // alg1 | alg2 | maxthr | bound
  bool feasible = false;
  double objective = 0.0;
  std::int64_t elapsed_us = 0;
  int iterations = 0;

  bool operator==(const RunRecord&) const = default;
};

void write_csv(std::ostream& out, const std::vector<RunRecord>& records);
std::string to_csv(const std::vector<RunRecord>& records);
/// Throws std::runtime_error on a malformed header or row.
std::vector<RunRecord> parse_csv(std::string_view text);
std::vector<RunRecord> read_csv_file(const std::string& path);

struct RunOptions {
  std::vector<std::string> methods;  // any of alg1, alg2, maxthr, bound
  int trials = 1;
  std::uint64_t seed = 0;
  int jobs = 1;          // worker threads; output does not depend on it
  bool timing = true;    // false writes elapsed_us = 0
};

/// One record per (trial, method) with the configured rate targets.
std::vector<RunRecord> run_trials(const SystemConfig& cfg, const RunOptions& opts);

enum class SweepParam { Dmin, D, K };
SweepParam parse_sweep_param(std::string_view name);

struct SweepSpec {
  SweepParam param = SweepParam::Dmin;
  double start = 0.0;
  double stop = 0.0;
  double step = 0.5;
  double delta_r = 0.5;   // rate increment of the inner sweep for param K
  int max_points = 40;    // cap on inner sweep points for param K
};

/// Rate-constraint sweeps. Every trial first computes the max-throughput
/// rates r0 (SUS + max-throughput PA), then:
///  - Dmin: d_k = r0_k + delta for the configured RT users, delta = start..stop
///    by step;
///  - D: the first D users are RT with d_k = 1.1 r0_k, D = start..stop by step;
///  - K: for each user count, a Dmin sweep from 0 by delta_r.
/// A Dmin sweep of one trial stops after the dual bound certifies
/// infeasibility (when "bound" is requested) or when no method is feasible.
std::vector<RunRecord> run_sweep(const SystemConfig& cfg, const SweepSpec& spec,
                                 const RunOptions& opts);

/// Percentage metrics over completed Dmin sweeps. The comparison baseline
/// ("method 2") is alg2, so A equals B and E equals G.
struct GapMetrics {
  std::optional<double> A, B, E, F, G;
  std::optional<double> r0, r1, r2, r3, u1, u2;
  int groups = 0;  // sweeps that contributed
};

/// 100 (reference - value) / reference.
double percent_gap(double reference, double value);

GapMetrics compute_gaps(const std::vector<RunRecord>& records);
/// Per-sweep metrics, one entry per (seed, K, M, N, D, P) group in input
/// order. Used for trend tests across K.
std::vector<GapMetrics> compute_group_gaps(const std::vector<RunRecord>& records);
std::string format_gaps(const GapMetrics& g);

}  // namespace zfra
