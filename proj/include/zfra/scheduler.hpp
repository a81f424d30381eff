#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "zfra/model.hpp"
#include "zfra/powalloc.hpp"
#include "zfra/zfcore.hpp"

namespace zfra {

enum class Method {
  Alg1,           // reassignment under the total power constraint
  Alg2,           // reassignment with per-subchannel budgets inside the loop
  MaxThroughput,  // SUS assignment and PA (blocks 1-3), no reassignment
};

std::string_view method_name(Method m);
/// Accepts "alg1", "alg2", "maxthr"; throws std::invalid_argument otherwise.
Method parse_method(std::string_view name);

struct AllocationResult {
  Method method = Method::Alg1;
  SdmaAssignment assignment;
  PowerSolution power;
  double objective = 0.0;
  bool feasible = false;
  int iterations = 0;  // subchannels reassigned

  // Instrumented operation counts. `loop_work` covers the reassignment loop
  // only, `work` everything.
  std::uint64_t work = 0;
  std::uint64_t loop_work = 0;
};

/// Block 1: plain SUS on every subchannel.
SdmaAssignment max_throughput_assignment(const ChannelRealization& chan, const SystemConfig& cfg,
                                         std::uint64_t* work = nullptr);

/// Blocks 1-2-3 of the heuristic, then the method's reassignment loop while
/// the rate constraints are unmet. Infeasibility is reported, not thrown.
AllocationResult allocate(const ChannelRealization& chan, const SystemConfig& cfg, Method method);

AllocationResult reassign_alg1(const ChannelRealization& chan, const SystemConfig& cfg,
                               const AllocationResult& current);
AllocationResult reassign_alg2(const ChannelRealization& chan, const SystemConfig& cfg,
                               const AllocationResult& current);

}  // namespace zfra
