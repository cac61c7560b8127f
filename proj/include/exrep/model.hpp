// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace exrep {

using Bytes = std::int64_t;
using Seconds = double;
using ExpertId = std::int32_t;

inline constexpr Bytes kGigabyte = 1'000'000'000;

// Static description of the cluster. One rank per node, each rank owning
// `slots_per_rank` expert slots. Bandwidths are bytes/second.
struct ClusterSpec {
  std::int64_t nodes = 1;
  std::int64_t slots_per_rank = 1;
  std::int64_t expert_classes = 1;
  double bw_pci = 1.0;
  double bw_net = 1.0;
  Bytes grad_bytes = 1;
  Bytes weight_bytes = 1;
  Bytes optimizer_bytes = 1;
  std::int64_t tokens_per_batch = 0;
  double capacity_factor = 1.0;

  std::int64_t total_slots() const noexcept { return nodes * slots_per_rank; }

  friend bool operator==(const ClusterSpec&, const ClusterSpec&) = default;
};

// Returns `spec` unchanged or throws Error(kInvalidSpec) naming the invariant.
ClusterSpec validate_cluster(const ClusterSpec& spec);

// The worked example cluster: N=2048, s=2, E=64, G=W=3.375 GB, O=27 GB,
// 64 GB/s host link, 400 Gbps (50 GB/s) network.
ClusterSpec reference_example_cluster();

// Class-to-slot assignment over the s*N global slots. Global slot j lives on
// rank j / s at local position j % s.
class ExpertPlacement {
 public:
  ExpertPlacement() = default;

  std::span<const ExpertId> slots() const noexcept { return slots_; }
  std::span<const std::int64_t> replica_counts() const noexcept {
    return replicas_;
  }
  std::int64_t slots_per_rank() const noexcept { return slots_per_rank_; }
  std::int64_t nodes() const noexcept {
    return slots_per_rank_ == 0
               ? 0
               : static_cast<std::int64_t>(slots_.size()) / slots_per_rank_;
  }
  std::int64_t expert_classes() const noexcept {
    return static_cast<std::int64_t>(replicas_.size());
  }
  std::int64_t rank_of_slot(std::int64_t slot) const noexcept {
    return slot / slots_per_rank_;
  }
  ExpertId at(std::int64_t slot) const { return slots_.at(slot); }

  friend bool operator==(const ExpertPlacement&,
                         const ExpertPlacement&) = default;

 private:
  friend ExpertPlacement placement_from_slots(std::span<const ExpertId>,
                                              std::int64_t, std::int64_t,
                                              std::int64_t);

  std::vector<ExpertId> slots_;
  std::vector<std::int64_t> replicas_;
  std::int64_t slots_per_rank_ = 0;
};

// Builds a placement and derives r_i. Throws kInvalidPlacement on a wrong
// length, an out-of-range id, or an unreachable class.
ExpertPlacement placement_from_slots(std::span<const ExpertId> slot_assignment,
                                     const ClusterSpec& spec);
ExpertPlacement placement_from_slots(std::span<const ExpertId> slot_assignment,
                                     std::int64_t nodes,
                                     std::int64_t slots_per_rank,
                                     std::int64_t expert_classes);

struct PopularityVector {
  std::int64_t iteration = 0;
  std::vector<std::int64_t> counts;

  std::int64_t total() const noexcept;

  friend bool operator==(const PopularityVector&,
                         const PopularityVector&) = default;
};

struct Trace {
  std::int64_t expert_classes = 0;
  std::int64_t tokens_per_batch = 0;
  std::vector<PopularityVector> rows;

  std::int64_t iterations() const noexcept {
    return static_cast<std::int64_t>(rows.size());
  }

  friend bool operator==(const Trace&, const Trace&) = default;
};

// Checks row shapes, non-negativity and consecutive iteration indices.
void validate_trace(const Trace& trace);

}  // namespace exrep
