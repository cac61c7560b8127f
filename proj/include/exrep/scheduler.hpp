// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "exrep/model.hpp"

namespace exrep {

struct SchedulerInput {
  std::span<const std::int64_t> popularity;
  std::int64_t world_size = 1;
  std::int64_t slots_per_rank = 1;
  std::int64_t expert_classes = 1;
};

// Replica counts together with the state the rounding correction leaves
// behind. `residual` is the listing's `diff` after both correction loops.
struct ReplicaAllocation {
  std::vector<std::int64_t> counts;
  std::vector<double> goal;
  std::vector<double> residual;
  std::int64_t correction_steps = 0;
};

// Proportional replica counts with at least one instance per class. An
// all-zero popularity vector is treated as uniform.
ReplicaAllocation allocate_replicas(const SchedulerInput& input);

// Class 0 repeated counts[0] times, then class 1, and so on.
std::vector<ExpertId> contiguous_layout(std::span<const std::int64_t> counts);

ExpertPlacement compute_placement(const SchedulerInput& input);

ExpertPlacement compute_placement(std::span<const std::int64_t> popularity,
                                  const ClusterSpec& spec);

// Placement the scheduler produces for uniform popularity.
ExpertPlacement uniform_placement(const ClusterSpec& spec);

// Number of global slots whose class differs. Throws kShapeMismatch.
std::int64_t placement_churn(const ExpertPlacement& prev,
                             const ExpertPlacement& next);

}  // namespace exrep
