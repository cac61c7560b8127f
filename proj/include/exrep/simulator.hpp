// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "exrep/model.hpp"
#include "exrep/policies.hpp"

namespace exrep {

struct SimOptions {
  // Constant for dense compute, attention and token dispatch.
  Seconds compute_base_seconds = 0.0;
  // Constant for the popularity all-reduce and scheduler run, charged to the
  // adaptive policies.
  Seconds metadata_seconds = 0.0;
  // Also charge the popularity all-reduce bytes over the network.
  bool include_metadata_latency = false;

  friend bool operator==(const SimOptions&, const SimOptions&) = default;
};

struct IterationRecord {
  std::int64_t iteration = 0;
  PolicyKind policy = PolicyKind::kPerIteration;
  bool rebalanced = false;
  std::int64_t churn = 0;
  std::vector<std::int64_t> dropped_per_class;
  std::int64_t dropped = 0;
  std::int64_t assigned = 0;
  double survival = 1.0;
  Seconds compute_s = 0.0;
  Seconds comm_grad_s = 0.0;
  Seconds comm_weight_s = 0.0;
  Seconds migration_s = 0.0;
  Seconds metadata_s = 0.0;
  Seconds total_s = 0.0;
  std::vector<std::int64_t> replica_counts;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct SimAggregates {
  std::int64_t total_assigned = 0;
  std::int64_t total_dropped = 0;
  double survival_pct = 100.0;
  Seconds mean_latency_s = 0.0;
  std::int64_t rebalance_iterations = 0;
  Seconds mean_rebalance_latency_s = 0.0;  // 0 when nothing rebalanced
  Seconds time_to_process_s = 0.0;

  double drop_pct() const noexcept { return 100.0 - survival_pct; }

  friend bool operator==(const SimAggregates&, const SimAggregates&) = default;
};

struct SimReport {
  ClusterSpec cluster;
  PolicyConfig policy;
  SimOptions options;
  std::vector<IterationRecord> records;
  SimAggregates aggregates;

  friend bool operator==(const SimReport&, const SimReport&) = default;
};

SimAggregates aggregate_records(const std::vector<IterationRecord>& records);

SimReport run(const Trace& trace, const ClusterSpec& spec,
              const PolicyConfig& policy, const SimOptions& options = {});

struct Comparison {
  std::vector<SimReport> reports;  // same order as the requested policies
};

Comparison compare(const Trace& trace, const ClusterSpec& spec,
                   const std::vector<PolicyConfig>& policies,
                   const SimOptions& options = {});

// iter,churn,dropped,survival,comm_grad_s,comm_weight_s,migration_s,total_s
void write_records_csv(const SimReport& report, std::ostream& out);

// Fixed-column summary, one line per report.
std::string comparison_table(const Comparison& comparison);

}  // namespace exrep
