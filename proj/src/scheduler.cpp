// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#include "exrep/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "exrep/error.hpp"

namespace exrep {
namespace {

// First index of the maximum (argmax semantics, lowest index on ties).
std::size_t first_max(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) -
                                  v.begin());
}

std::size_t first_min(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) -
                                  v.begin());
}

}  // namespace

ReplicaAllocation allocate_replicas(const SchedulerInput& input) {
  const std::int64_t experts = input.expert_classes;
  if (experts < 1 || input.world_size < 1 || input.slots_per_rank < 1) {
    throw Error(ErrorCode::kInvalidInput,
                "world_size, slots_per_rank and expert_classes must be >= 1");
  }
  const std::int64_t total_slots = input.world_size * input.slots_per_rank;
  if (experts > total_slots) {
    throw Error(ErrorCode::kInvalidInput,
                "E=" + std::to_string(experts) + " exceeds G*S=" +
                    std::to_string(total_slots));
  }
  if (static_cast<std::int64_t>(input.popularity.size()) != experts) {
    throw Error(ErrorCode::kInvalidInput,
                "popularity has " + std::to_string(input.popularity.size()) +
                    " entries, expected " + std::to_string(experts));
  }

  std::vector<double> popularity(experts);
  std::int64_t popularity_sum = 0;
  for (std::int64_t i = 0; i < experts; ++i) {
    if (input.popularity[i] < 0) {
      throw Error(ErrorCode::kInvalidInput, "negative popularity");
    }
    popularity_sum += input.popularity[i];
  }
  if (popularity_sum == 0) {
    std::fill(popularity.begin(), popularity.end(), 1.0);
    popularity_sum = experts;
  } else {
    for (std::int64_t i = 0; i < experts; ++i) {
      popularity[i] = static_cast<double>(input.popularity[i]);
    }
  }

  ReplicaAllocation out;
  out.goal.resize(experts);
  out.counts.resize(experts);
  out.residual.resize(experts);
  const double denom = static_cast<double>(popularity_sum);
  const double world = static_cast<double>(input.world_size);
  const double slots = static_cast<double>(input.slots_per_rank);
  std::int64_t assigned = 0;
  for (std::int64_t i = 0; i < experts; ++i) {
    out.goal[i] = (popularity[i] / denom) * world * slots;
    out.counts[i] =
        static_cast<std::int64_t>(std::floor(std::max(out.goal[i], 1.0)));
    out.residual[i] = static_cast<double>(out.counts[i]) - out.goal[i];
    assigned += out.counts[i];
  }

  // Over-allocation only comes from the minimum-one clamp. The residual is
  // lowered even when the count is pinned at 1, which is what makes the loop
  // move on to a class that can still shrink.
  while (assigned > total_slots) {
    const auto i = first_max(out.residual);
    if (out.counts[i] > 1) {
      --out.counts[i];
      --assigned;
    }
    out.residual[i] -= 1.0;
    ++out.correction_steps;
  }
  while (assigned < total_slots) {
    const auto i = first_min(out.residual);
    ++out.counts[i];
    ++assigned;
    out.residual[i] += 1.0;
    ++out.correction_steps;
  }
  return out;
}

std::vector<ExpertId> contiguous_layout(std::span<const std::int64_t> counts) {
  std::vector<ExpertId> layout;
  layout.reserve(static_cast<std::size_t>(
      std::accumulate(counts.begin(), counts.end(), std::int64_t{0})));
  for (std::size_t e = 0; e < counts.size(); ++e) {
    layout.insert(layout.end(), static_cast<std::size_t>(counts[e]),
                  static_cast<ExpertId>(e));
  }
  return layout;
}

ExpertPlacement compute_placement(const SchedulerInput& input) {
  const auto allocation = allocate_replicas(input);
  const auto layout = contiguous_layout(allocation.counts);
  return placement_from_slots(layout, input.world_size, input.slots_per_rank,
                              input.expert_classes);
}

ExpertPlacement compute_placement(std::span<const std::int64_t> popularity,
                                  const ClusterSpec& spec) {
  return compute_placement(SchedulerInput{popularity, spec.nodes,
                                          spec.slots_per_rank,
                                          spec.expert_classes});
}

ExpertPlacement uniform_placement(const ClusterSpec& spec) {
  const std::vector<std::int64_t> ones(spec.expert_classes, 1);
  return compute_placement(ones, spec);
}

std::int64_t placement_churn(const ExpertPlacement& prev,
                             const ExpertPlacement& next) {
  if (prev.slots().size() != next.slots().size() ||
      prev.expert_classes() != next.expert_classes() ||
      prev.slots_per_rank() != next.slots_per_rank()) {
    throw Error(ErrorCode::kShapeMismatch,
                "placements differ in slot count or class count");
  }
  std::int64_t changed = 0;
  const auto a = prev.slots();
  const auto b = next.slots();
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] != b[j]) ++changed;
  }
  return changed;
}

}  // namespace exrep
