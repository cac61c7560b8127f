// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#include "exrep/router.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "exrep/error.hpp"

namespace exrep {

std::int64_t RoutingOutcome::total_assigned() const noexcept {
  return std::accumulate(assigned.begin(), assigned.end(), std::int64_t{0});
}

std::int64_t RoutingOutcome::total_dropped() const noexcept {
  return std::accumulate(dropped.begin(), dropped.end(), std::int64_t{0});
}

std::int64_t slot_capacity(const ClusterSpec& spec) {
  const double raw = spec.capacity_factor *
                     static_cast<double>(spec.tokens_per_batch) /
                     static_cast<double>(spec.total_slots());
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(raw)));
}

std::int64_t class_capacity(const ExpertPlacement& placement,
                            const ClusterSpec& spec, ExpertId class_id) {
  if (class_id < 0 || class_id >= placement.expert_classes()) {
    throw Error(ErrorCode::kInvalidInput,
                "class id " + std::to_string(class_id) + " out of range");
  }
  return slot_capacity(spec) * placement.replica_counts()[class_id];
}

RoutingOutcome route(const PopularityVector& popularity,
                     const ExpertPlacement& placement,
                     const ClusterSpec& spec) {
  const auto experts = placement.expert_classes();
  if (static_cast<std::int64_t>(popularity.counts.size()) != experts ||
      experts != spec.expert_classes ||
      static_cast<std::int64_t>(placement.slots().size()) !=
          spec.total_slots()) {
    throw Error(ErrorCode::kShapeMismatch,
                "popularity, placement and cluster disagree on shape");
  }
  const std::int64_t capacity = slot_capacity(spec);
  const auto replicas = placement.replica_counts();

  RoutingOutcome out;
  out.assigned = popularity.counts;
  out.instance_loads.assign(placement.slots().size(), 0);
  out.dropped.assign(experts, 0);

  // k-th instance (in slot order) of class i receives
  // pop_i / r_i tokens, plus one if k < pop_i mod r_i.
  std::vector<std::int64_t> seen(experts, 0);
  const auto slots = placement.slots();
  for (std::size_t j = 0; j < slots.size(); ++j) {
    const ExpertId e = slots[j];
    const std::int64_t pop = out.assigned[e];
    if (pop < 0) throw Error(ErrorCode::kShapeMismatch, "negative popularity");
    const std::int64_t k = seen[e]++;
    const std::int64_t share = pop / replicas[e] + (k < pop % replicas[e] ? 1 : 0);
    const std::int64_t kept = std::min(share, capacity);
    out.instance_loads[j] = kept;
    out.dropped[e] += share - kept;
  }

  const std::int64_t total = out.total_assigned();
  out.survival_rate =
      total == 0 ? 1.0
                 : 1.0 - static_cast<double>(out.total_dropped()) /
                             static_cast<double>(total);
  out.popularity_allreduce_bytes =
      spec.nodes * experts * kPopularityScalarBytes;
  return out;
}

}  // namespace exrep
