// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#include "exrep/simulator.hpp"

#include <cstdio>
#include <optional>
#include <ostream>
#include <string>

#include "exrep/costmodel.hpp"
#include "exrep/error.hpp"
#include "exrep/router.hpp"

namespace exrep {
namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

SimAggregates aggregate_records(const std::vector<IterationRecord>& records) {
  SimAggregates agg;
  Seconds rebalance_sum = 0.0;
  for (const auto& r : records) {
    agg.total_assigned += r.assigned;
    agg.total_dropped += r.dropped;
    agg.time_to_process_s += r.total_s;
    if (r.rebalanced) {
      ++agg.rebalance_iterations;
      rebalance_sum += r.total_s;
    }
  }
  agg.survival_pct =
      agg.total_assigned == 0
          ? 100.0
          : 100.0 * (1.0 - static_cast<double>(agg.total_dropped) /
                               static_cast<double>(agg.total_assigned));
  if (!records.empty()) {
    agg.mean_latency_s =
        agg.time_to_process_s / static_cast<double>(records.size());
  }
  if (agg.rebalance_iterations > 0) {
    agg.mean_rebalance_latency_s =
        rebalance_sum / static_cast<double>(agg.rebalance_iterations);
  }
  return agg;
}

SimReport run(const Trace& trace, const ClusterSpec& spec,
              const PolicyConfig& policy, const SimOptions& options) {
  validate_cluster(spec);
  validate_policy(policy, spec);
  validate_trace(trace);
  if (trace.expert_classes != spec.expert_classes) {
    throw Error(ErrorCode::kShapeMismatch,
                "trace has E=" + std::to_string(trace.expert_classes) +
                    " but cluster has E=" + std::to_string(spec.expert_classes));
  }

  SimReport report;
  report.cluster = spec;
  report.policy = policy;
  report.options = options;
  report.records.reserve(trace.rows.size());

  // Communication terms depend only on the cluster and on where the optimizer
  // lives, so they are fixed for the whole run.
  const PhaseCost comm = policy.kind == PolicyKind::kPerIteration
                             ? comm_time_dynamic(spec)
                             : comm_time_static(spec);
  const bool adaptive = policy.kind != PolicyKind::kStatic;

  std::optional<ExpertPlacement> placement;
  for (std::int64_t t = 0; t < trace.iterations(); ++t) {
    const auto& row = trace.rows[t];
    if (row.total() > spec.tokens_per_batch) {
      throw Error(ErrorCode::kInvalidInput,
                  "iteration " + std::to_string(t) + " routes " +
                      std::to_string(row.total()) +
                      " tokens, more than tokens_per_batch=" +
                      std::to_string(spec.tokens_per_batch));
    }
    const PopularityVector* prev_pop = t > 0 ? &trace.rows[t - 1] : nullptr;
    auto decision = next_placement(policy, t, prev_pop,
                                   placement ? &*placement : nullptr, spec);

    IterationRecord rec;
    rec.iteration = t;
    rec.policy = policy.kind;
    rec.rebalanced = decision.rebalanced;
    rec.churn = decision.migrated_slots;
    rec.migration_s =
        decision.rebalanced
            ? migration_time(policy, *placement, decision.placement, spec)
            : 0.0;
    placement = std::move(decision.placement);

    const auto outcome = route(row, *placement, spec);
    rec.dropped_per_class = outcome.dropped;
    rec.dropped = outcome.total_dropped();
    rec.assigned = outcome.total_assigned();
    rec.survival = outcome.survival_rate;
    rec.compute_s = options.compute_base_seconds;
    rec.comm_grad_s = comm.grad;
    rec.comm_weight_s = comm.weight;
    if (adaptive) {
      rec.metadata_s = options.metadata_seconds;
      if (options.include_metadata_latency) {
        rec.metadata_s +=
            static_cast<double>(outcome.popularity_allreduce_bytes) / spec.bw_net;
      }
    }
    rec.total_s = rec.compute_s + rec.comm_grad_s + rec.comm_weight_s +
                  rec.migration_s + rec.metadata_s;
    rec.replica_counts.assign(placement->replica_counts().begin(),
                              placement->replica_counts().end());
    report.records.push_back(std::move(rec));
  }
  report.aggregates = aggregate_records(report.records);
  return report;
}

Comparison compare(const Trace& trace, const ClusterSpec& spec,
                   const std::vector<PolicyConfig>& policies,
                   const SimOptions& options) {
  if (policies.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "at least one policy is required");
  }
  Comparison out;
  out.reports.reserve(policies.size());
  for (const auto& p : policies) out.reports.push_back(run(trace, spec, p, options));
  return out;
}

void write_records_csv(const SimReport& report, std::ostream& out) {
  out << "iter,churn,dropped,survival,comm_grad_s,comm_weight_s,migration_s,"
         "total_s\n";
  for (const auto& r : report.records) {
    out << r.iteration << ',' << r.churn << ',' << r.dropped << ','
        << format_double(r.survival) << ',' << format_double(r.comm_grad_s)
        << ',' << format_double(r.comm_weight_s) << ','
        << format_double(r.migration_s) << ',' << format_double(r.total_s)
        << '\n';
  }
}

std::string comparison_table(const Comparison& comparison) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-28s %14s %10s %14s %14s %10s\n",
                "policy", "dropped", "survival%", "mean_lat_s",
                "rebal_lat_s", "rebal_n");
  out += line;
  for (const auto& r : comparison.reports) {
    const auto& a = r.aggregates;
    std::snprintf(line, sizeof(line), "%-28s %14lld %10.3f %14.6f %14.6f %10lld\n",
                  r.policy.label().c_str(),
                  static_cast<long long>(a.total_dropped), a.survival_pct,
                  a.mean_latency_s, a.mean_rebalance_latency_s,
                  static_cast<long long>(a.rebalance_iterations));
    out += line;
  }
  return out;
}

}  // namespace exrep
