// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "exrep/model.hpp"

namespace exrep {

enum class PolicyKind {
  kStatic,        // uniform replication, never rebalances
  kInterval,      // rebalance every `interval` iterations, migrating optimizer
  kPerIteration,  // rebalance every iteration, optimizer stays in place
};

const char* policy_kind_name(PolicyKind kind) noexcept;

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kPerIteration;
  std::int64_t interval = 1;  // only read for kInterval
  // No rank may host two instances of one class.
  bool inter_rank_only = false;

  // "static", "interval-10", "per-iteration"; suffix "-inter-rank" when set.
  std::string label() const;

  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

// Checks the policy against the cluster (interval >= 1, inter-rank layouts
// feasible). Throws kInvalidConfig.
void validate_policy(const PolicyConfig& policy, const ClusterSpec& spec);

// r = s*N/E, the static baseline's replication degree (real valued).
double static_replicas(const ClusterSpec& spec);

// Cold-start placement used at t = 0 and by the static policy.
ExpertPlacement initial_placement(const PolicyConfig& policy,
                                  const ClusterSpec& spec);

// Scheduler output for `popularity`, honouring inter_rank_only.
ExpertPlacement policy_placement(const PolicyConfig& policy,
                                 std::span<const std::int64_t> popularity,
                                 const ClusterSpec& spec);

struct PlacementDecision {
  ExpertPlacement placement;
  std::int64_t migrated_slots = 0;
  bool rebalanced = false;
};

// Placement for iteration t. `prev_popularity` is the popularity observed at
// t-1 and `prev_placement` the placement used at t-1; both are required for
// t >= 1 (kMissingPopularity otherwise).
PlacementDecision next_placement(const PolicyConfig& policy, std::int64_t t,
                                 const PopularityVector* prev_popularity,
                                 const ExpertPlacement* prev_placement,
                                 const ClusterSpec& spec);

// Scalar form: migrated_slots * (W + optimizer_share) / BW_net for interval
// policies, zero otherwise.
Seconds migration_time(const PolicyConfig& policy, std::int64_t migrated_slots,
                       const ClusterSpec& spec, Bytes optimizer_share);

// Placement-aware form. Each churned slot pays W plus O / r_new of its new
// class; costs are serialized per receiving rank and the slowest rank wins.
Seconds migration_time(const PolicyConfig& policy, const ExpertPlacement& prev,
                       const ExpertPlacement& next, const ClusterSpec& spec);

}  // namespace exrep
