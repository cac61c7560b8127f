// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#include "exrep/model.hpp"

#include <numeric>
#include <string>

#include "exrep/error.hpp"

namespace exrep {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kInvalidSpec, what);
}

}  // namespace

ClusterSpec validate_cluster(const ClusterSpec& spec) {
  require(spec.nodes >= 1, "nodes >= 1");
  require(spec.slots_per_rank >= 1, "slots_per_rank >= 1");
  require(spec.expert_classes >= 1, "expert_classes >= 1");
  require(spec.expert_classes <= spec.total_slots(),
          "expert_classes <= slots_per_rank * nodes (E=" +
              std::to_string(spec.expert_classes) +
              ", s*N=" + std::to_string(spec.total_slots()) + ")");
  // Negated comparisons so NaN is rejected as well.
  require(!(spec.bw_pci <= 0.0) && spec.bw_pci == spec.bw_pci, "bw_pci > 0");
  require(!(spec.bw_net <= 0.0) && spec.bw_net == spec.bw_net, "bw_net > 0");
  require(spec.grad_bytes > 0, "grad_bytes > 0");
  require(spec.weight_bytes > 0, "weight_bytes > 0");
  require(spec.optimizer_bytes > 0, "optimizer_bytes > 0");
  require(spec.tokens_per_batch >= 0, "tokens_per_batch >= 0");
  require(spec.capacity_factor > 0.0, "capacity_factor > 0");
  return spec;
}

ClusterSpec reference_example_cluster() {
  ClusterSpec spec;
  spec.nodes = 2048;
  spec.slots_per_rank = 2;
  spec.expert_classes = 64;
  spec.bw_pci = 64.0 * kGigabyte;
  spec.bw_net = 50.0 * kGigabyte;  // 400 Gbps
  spec.grad_bytes = 3'375'000'000;
  spec.weight_bytes = 3'375'000'000;
  spec.optimizer_bytes = 27 * kGigabyte;
  spec.tokens_per_batch = 32768;
  spec.capacity_factor = 1.0;
  return spec;
}

ExpertPlacement placement_from_slots(std::span<const ExpertId> slot_assignment,
                                     const ClusterSpec& spec) {
  return placement_from_slots(slot_assignment, spec.nodes, spec.slots_per_rank,
                              spec.expert_classes);
}

ExpertPlacement placement_from_slots(std::span<const ExpertId> slot_assignment,
                                     std::int64_t nodes,
                                     std::int64_t slots_per_rank,
                                     std::int64_t expert_classes) {
  if (nodes < 1 || slots_per_rank < 1 || expert_classes < 1) {
    throw Error(ErrorCode::kInvalidPlacement, "empty placement shape");
  }
  const auto total = nodes * slots_per_rank;
  if (static_cast<std::int64_t>(slot_assignment.size()) != total) {
    throw Error(ErrorCode::kInvalidPlacement,
                "slot assignment has " + std::to_string(slot_assignment.size()) +
                    " entries, expected s*N=" + std::to_string(total));
  }
  ExpertPlacement placement;
  placement.slots_.assign(slot_assignment.begin(), slot_assignment.end());
  placement.replicas_.assign(expert_classes, 0);
  placement.slots_per_rank_ = slots_per_rank;
  for (std::int64_t j = 0; j < total; ++j) {
    const ExpertId id = slot_assignment[j];
    if (id < 0 || id >= expert_classes) {
      throw Error(ErrorCode::kInvalidPlacement,
                  "slot " + std::to_string(j) + " holds out-of-range class " +
                      std::to_string(id));
    }
    ++placement.replicas_[id];
  }
  for (std::int64_t i = 0; i < expert_classes; ++i) {
    if (placement.replicas_[i] == 0) {
      throw Error(ErrorCode::kInvalidPlacement,
                  "class " + std::to_string(i) + " absent");
    }
  }
  return placement;
}

std::int64_t PopularityVector::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

void validate_trace(const Trace& trace) {
  if (trace.expert_classes < 1) {
    throw Error(ErrorCode::kShapeMismatch, "trace has no expert classes");
  }
  for (std::size_t t = 0; t < trace.rows.size(); ++t) {
    const auto& row = trace.rows[t];
    if (row.iteration != static_cast<std::int64_t>(t)) {
      throw Error(ErrorCode::kShapeMismatch,
                  "row " + std::to_string(t) + " has iteration index " +
                      std::to_string(row.iteration));
    }
    if (static_cast<std::int64_t>(row.counts.size()) != trace.expert_classes) {
      throw Error(ErrorCode::kShapeMismatch,
                  "row " + std::to_string(t) + " has " +
                      std::to_string(row.counts.size()) + " counts, expected " +
                      std::to_string(trace.expert_classes));
    }
    for (auto c : row.counts) {
      if (c < 0) {
        throw Error(ErrorCode::kShapeMismatch,
                    "row " + std::to_string(t) + " has a negative count");
      }
    }
  }
}

}  // namespace exrep
