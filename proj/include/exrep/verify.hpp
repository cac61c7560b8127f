// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Built-in acceptance suite. Each check compares a library entry point with
// an oracle from oracles.hpp or with pinned golden numbers. The entry points
// are reached through Hooks so tests can swap in a broken formula and make
// sure the matching check notices.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "exrep/commplan.hpp"
#include "exrep/costmodel.hpp"
#include "exrep/model.hpp"
#include "exrep/scheduler.hpp"
#include "exrep/simulator.hpp"
#include "exrep/tracegen.hpp"

namespace exrep::verify {

struct CheckResult {
  std::string id;     // "A1".."A8" for acceptance criteria, "P.*" otherwise
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double budget_seconds = 0.0;
};

struct Hooks {
  std::function<Bytes(const ClusterSpec&)> mem_footprint = exrep::mem_footprint;
  std::function<DataVolume(const ClusterSpec&)> data_volume = exrep::data_volume;
  std::function<PhaseCost(const ClusterSpec&, OptimizerVariant)> comm_time_static =
      [](const ClusterSpec& s, OptimizerVariant v) { return exrep::comm_time_static(s, v); };
  std::function<PhaseCost(const ClusterSpec&, OptimizerVariant)> comm_time_dynamic =
      [](const ClusterSpec& s, OptimizerVariant v) { return exrep::comm_time_dynamic(s, v); };
  std::function<double(const ClusterSpec&, OptimizerVariant)> overhead_ratio =
      exrep::overhead_ratio;
  std::function<Seconds(std::int64_t, const ClusterSpec&, MigrationPayload)>
      migration_cost = [](std::int64_t n, const ClusterSpec& s, MigrationPayload p) {
        return exrep::migration_cost(n, s, p);
      };
  std::function<PhaseCost(const ClusterSpec&, std::int64_t)> k_partition_bound =
      exrep::k_partition_bound;
  std::function<ExpertPlacement(const SchedulerInput&)> compute_placement =
      [](const SchedulerInput& in) { return exrep::compute_placement(in); };
  std::function<AllReducePlan(const ExpertPlacement&, const ClusterSpec&)>
      plan_allreduce = exrep::plan_allreduce;
  std::function<std::vector<std::vector<double>>(
      const AllReducePlan&, const std::vector<std::vector<double>>&)>
      simulate_allreduce = exrep::simulate_allreduce;
  std::function<std::vector<TransferTuple>(const ExpertPlacement&, const ClusterSpec&)>
      plan_grad_gather = exrep::plan_grad_gather;
  std::function<std::vector<TransferTuple>(const ExpertPlacement&, const ClusterSpec&,
                                           const std::vector<TransferTuple>&)>
      plan_grad_exchange = exrep::plan_grad_exchange;
  std::function<std::vector<TransferTuple>(const ExpertPlacement&, const ClusterSpec&)>
      plan_weight_scatter = exrep::plan_weight_scatter;
  std::function<SimReport(const Trace&, const ClusterSpec&, const PolicyConfig&)> run =
      [](const Trace& t, const ClusterSpec& s, const PolicyConfig& p) {
        return exrep::run(t, s, p);
      };
};

// Called once per finished check, in order.
using Reporter = std::function<void(const CheckResult&)>;

// Cluster of the drop and latency studies: E=16, N=16, s=4, cf=1.0.
ClusterSpec study_cluster();

// Seeds of the three spiky study traces (E=16, 2000 iterations, defaults
// otherwise). data/traces/ holds the same traces as CSV.
inline constexpr std::uint64_t kStudySeeds[] = {101, 202, 303};
TraceGenConfig study_trace_config(std::uint64_t seed);

// Criteria 1 through 8, each with its own runtime budget.
std::vector<CheckResult> run_acceptance(const Hooks& hooks = {},
                                        const Reporter& reporter = {});

// Additional properties that are not acceptance criteria.
std::vector<CheckResult> run_properties(const Hooks& hooks = {},
                                        const Reporter& reporter = {});

// Acceptance followed by properties.
std::vector<CheckResult> run_all(const Hooks& hooks = {},
                                 const Reporter& reporter = {});

std::string format_result(const CheckResult& result);

}  // namespace exrep::verify
