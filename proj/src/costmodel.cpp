// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#include "exrep/costmodel.hpp"

#include <limits>
#include <string>

#include "exrep/error.hpp"

namespace exrep {
namespace {

// Per-rank time for one phase moving `bytes` per instance:
// pci_instances * X/N over the host link plus net_instances * X/N over the
// network, with the host term dropped for the HBM-resident optimizer.
Seconds phase_time(double pci_instances, double net_instances, Bytes bytes,
                   const ClusterSpec& spec, OptimizerVariant variant) {
  const double shard = static_cast<double>(bytes) / static_cast<double>(spec.nodes);
  const double pci = variant == OptimizerVariant::kHbmOnly
                         ? 0.0
                         : pci_instances * shard / spec.bw_pci;
  return pci + net_instances * shard / spec.bw_net;
}

}  // namespace

const char* variant_name(OptimizerVariant variant) noexcept {
  return variant == OptimizerVariant::kOffloaded ? "offloaded" : "hbm-only";
}

Bytes mem_footprint(const ClusterSpec& spec) {
  return spec.expert_classes * spec.optimizer_bytes;
}

DataVolume data_volume(const ClusterSpec& spec) {
  return {spec.total_slots() * spec.grad_bytes,
          spec.total_slots() * spec.weight_bytes};
}

PhaseCost comm_time_static(const ClusterSpec& spec, OptimizerVariant variant) {
  const double experts = static_cast<double>(spec.expert_classes);
  const double remote = static_cast<double>(spec.total_slots() - spec.expert_classes);
  return {phase_time(experts, remote, spec.grad_bytes, spec, variant),
          phase_time(experts, remote, spec.weight_bytes, spec, variant)};
}

PhaseCost comm_time_dynamic(const ClusterSpec& spec, OptimizerVariant variant) {
  const double experts = static_cast<double>(spec.expert_classes);
  const double remote =
      static_cast<double>(spec.total_slots() - spec.slots_per_rank);
  return {phase_time(experts, remote, spec.grad_bytes, spec, variant),
          phase_time(experts, remote, spec.weight_bytes, spec, variant)};
}

double overhead_ratio(const ClusterSpec& spec, OptimizerVariant variant) {
  const double extra =
      static_cast<double>(spec.expert_classes - spec.slots_per_rank);
  const double experts = static_cast<double>(spec.expert_classes);
  const double slots = static_cast<double>(spec.total_slots());
  const double locality =
      variant == OptimizerVariant::kHbmOnly ? 1.0 : 1.0 - spec.bw_net / spec.bw_pci;
  const double denom = slots - experts * locality;
  if (denom == 0.0) {
    return extra == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return extra / denom;
}

PhaseCost k_partition_bound(const ClusterSpec& spec, std::int64_t k) {
  if (k < 1 || spec.nodes % k != 0 || spec.expert_classes % k != 0) {
    throw Error(ErrorCode::kInvalidK,
                "k=" + std::to_string(k) + " must be >= 1 and divide N=" +
                    std::to_string(spec.nodes) + " and E=" +
                    std::to_string(spec.expert_classes));
  }
  const double experts = static_cast<double>(spec.expert_classes);
  const double remote = static_cast<double>(k) *
                        static_cast<double>(spec.total_slots() - spec.slots_per_rank);
  return {phase_time(experts, remote, spec.grad_bytes, spec,
                     OptimizerVariant::kOffloaded),
          phase_time(experts, remote, spec.weight_bytes, spec,
                     OptimizerVariant::kOffloaded)};
}

Seconds migration_cost(std::int64_t experts_moved, const ClusterSpec& spec,
                       MigrationPayload payload) {
  if (experts_moved < 0) {
    throw Error(ErrorCode::kInvalidInput, "negative migration count");
  }
  Bytes per_expert = 0;
  switch (payload) {
    case MigrationPayload::kWeights: per_expert = spec.weight_bytes; break;
    case MigrationPayload::kOptimizer: per_expert = spec.optimizer_bytes; break;
    case MigrationPayload::kWeightsAndOptimizer:
      per_expert = spec.weight_bytes + spec.optimizer_bytes;
      break;
  }
  return static_cast<double>(experts_moved) * static_cast<double>(per_expert) /
         spec.bw_net;
}

Seconds migration_cost(std::int64_t experts_moved, const ClusterSpec& spec,
                       bool include_optimizer) {
  return migration_cost(experts_moved, spec,
                        include_optimizer ? MigrationPayload::kWeightsAndOptimizer
                                          : MigrationPayload::kWeights);
}

CostReport cost_report(const ClusterSpec& spec, OptimizerVariant variant) {
  CostReport report;
  report.variant = variant;
  report.mem_footprint_bytes = mem_footprint(spec);
  const auto volume = data_volume(spec);
  report.data_grad_bytes = volume.grad;
  report.data_weight_bytes = volume.weight;
  const auto stat = comm_time_static(spec, variant);
  const auto dyn = comm_time_dynamic(spec, variant);
  report.t_grad_static = stat.grad;
  report.t_weight_static = stat.weight;
  report.t_grad_dynamic = dyn.grad;
  report.t_weight_dynamic = dyn.weight;
  report.overhead_ratio = overhead_ratio(spec, variant);
  return report;
}

}  // namespace exrep
