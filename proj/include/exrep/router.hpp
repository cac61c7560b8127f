// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "exrep/model.hpp"

namespace exrep {

// Width of one popularity scalar in the per-iteration all-reduce.
inline constexpr Bytes kPopularityScalarBytes = 8;

struct RoutingOutcome {
  std::vector<std::int64_t> assigned;        // per class
  std::vector<std::int64_t> instance_loads;  // per global slot, after capping
  std::vector<std::int64_t> dropped;         // per class
  double survival_rate = 1.0;
  Bytes popularity_allreduce_bytes = 0;

  std::int64_t total_assigned() const noexcept;
  std::int64_t total_dropped() const noexcept;
};

// max(1, floor(capacity_factor * tokens_per_batch / (s*N)))
std::int64_t slot_capacity(const ClusterSpec& spec);

std::int64_t class_capacity(const ExpertPlacement& placement,
                            const ClusterSpec& spec, ExpertId class_id);

// Top-1 routing of the per-class counts onto the placement. Tokens of a class
// go round-robin over its instances in slot order, each instance keeps at
// most slot_capacity and the remainder is dropped.
RoutingOutcome route(const PopularityVector& popularity,
                     const ExpertPlacement& placement, const ClusterSpec& spec);

}  // namespace exrep
