// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#include "exrep/policies.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "exrep/error.hpp"
#include "exrep/scheduler.hpp"

namespace exrep {
namespace {

// Caps every count at the rank count and hands the surplus to the classes
// furthest below their goal, reusing the scheduler's residual ordering.
void cap_at_nodes(ReplicaAllocation& alloc, std::int64_t nodes) {
  std::int64_t surplus = 0;
  for (std::size_t i = 0; i < alloc.counts.size(); ++i) {
    if (alloc.counts[i] > nodes) {
      surplus += alloc.counts[i] - nodes;
      alloc.residual[i] -= static_cast<double>(alloc.counts[i] - nodes);
      alloc.counts[i] = nodes;
    }
  }
  while (surplus > 0) {
    std::size_t best = alloc.counts.size();
    for (std::size_t i = 0; i < alloc.counts.size(); ++i) {
      if (alloc.counts[i] >= nodes) continue;
      if (best == alloc.counts.size() || alloc.residual[i] < alloc.residual[best]) {
        best = i;
      }
    }
    if (best == alloc.counts.size()) {
      throw Error(ErrorCode::kInvalidConfig,
                  "inter-rank-only layout needs E >= slots_per_rank");
    }
    ++alloc.counts[best];
    alloc.residual[best] += 1.0;
    --surplus;
  }
}

// Instance k of the contiguous run goes to rank k mod N, local slot k div N.
// A run of at most N instances therefore never repeats a rank.
std::vector<ExpertId> striped_layout(std::span<const std::int64_t> counts,
                                     const ClusterSpec& spec) {
  std::vector<ExpertId> flat;
  for (std::size_t e = 0; e < counts.size(); ++e) {
    flat.insert(flat.end(), static_cast<std::size_t>(counts[e]),
                static_cast<ExpertId>(e));
  }
  std::vector<ExpertId> slots(flat.size());
  for (std::size_t k = 0; k < flat.size(); ++k) {
    const auto rank = static_cast<std::int64_t>(k) % spec.nodes;
    const auto local = static_cast<std::int64_t>(k) / spec.nodes;
    slots[rank * spec.slots_per_rank + local] = flat[k];
  }
  return slots;
}

}  // namespace

const char* policy_kind_name(PolicyKind kind) noexcept {
  switch (kind) {
    case PolicyKind::kStatic: return "static";
    case PolicyKind::kInterval: return "interval";
    case PolicyKind::kPerIteration: return "per-iteration";
  }
  return "unknown";
}

std::string PolicyConfig::label() const {
  std::string out = policy_kind_name(kind);
  if (kind == PolicyKind::kInterval) out += "-" + std::to_string(interval);
  if (inter_rank_only) out += "-inter-rank";
  return out;
}

void validate_policy(const PolicyConfig& policy, const ClusterSpec& spec) {
  if (policy.kind == PolicyKind::kInterval && policy.interval < 1) {
    throw Error(ErrorCode::kInvalidConfig, "interval must be >= 1");
  }
  if (policy.inter_rank_only) {
    if (spec.expert_classes < spec.slots_per_rank) {
      throw Error(ErrorCode::kInvalidConfig,
                  "inter_rank_only needs expert_classes >= slots_per_rank");
    }
    if (policy.kind == PolicyKind::kStatic &&
        spec.total_slots() % spec.expert_classes != 0) {
      throw Error(ErrorCode::kInvalidConfig,
                  "static inter_rank_only needs E to divide s*N");
    }
  }
}

double static_replicas(const ClusterSpec& spec) {
  return static_cast<double>(spec.total_slots()) /
         static_cast<double>(spec.expert_classes);
}

ExpertPlacement policy_placement(const PolicyConfig& policy,
                                 std::span<const std::int64_t> popularity,
                                 const ClusterSpec& spec) {
  if (!policy.inter_rank_only) return compute_placement(popularity, spec);
  auto alloc = allocate_replicas(SchedulerInput{
      popularity, spec.nodes, spec.slots_per_rank, spec.expert_classes});
  cap_at_nodes(alloc, spec.nodes);
  return placement_from_slots(striped_layout(alloc.counts, spec), spec);
}

ExpertPlacement initial_placement(const PolicyConfig& policy,
                                  const ClusterSpec& spec) {
  const std::vector<std::int64_t> ones(spec.expert_classes, 1);
  return policy_placement(policy, ones, spec);
}

PlacementDecision next_placement(const PolicyConfig& policy, std::int64_t t,
                                 const PopularityVector* prev_popularity,
                                 const ExpertPlacement* prev_placement,
                                 const ClusterSpec& spec) {
  if (t < 0) throw Error(ErrorCode::kInvalidInput, "negative iteration");
  if (t == 0) return {initial_placement(policy, spec), 0, false};
  if (prev_placement == nullptr) {
    throw Error(ErrorCode::kMissingPopularity,
                "previous placement required at t=" + std::to_string(t));
  }

  bool recompute = false;
  switch (policy.kind) {
    case PolicyKind::kStatic: recompute = false; break;
    case PolicyKind::kPerIteration: recompute = true; break;
    case PolicyKind::kInterval: recompute = t % policy.interval == 0; break;
  }
  if (!recompute) return {*prev_placement, 0, false};
  if (prev_popularity == nullptr) {
    throw Error(ErrorCode::kMissingPopularity,
                "popularity of iteration " + std::to_string(t - 1) +
                    " required at t=" + std::to_string(t));
  }
  auto placement = policy_placement(policy, prev_popularity->counts, spec);
  const auto churn = placement_churn(*prev_placement, placement);
  return {std::move(placement), churn, true};
}

Seconds migration_time(const PolicyConfig& policy, std::int64_t migrated_slots,
                       const ClusterSpec& spec, Bytes optimizer_share) {
  if (migrated_slots < 0) {
    throw Error(ErrorCode::kInvalidInput, "negative migrated slot count");
  }
  if (policy.kind != PolicyKind::kInterval) return 0.0;
  return static_cast<double>(migrated_slots) *
         static_cast<double>(spec.weight_bytes + optimizer_share) / spec.bw_net;
}

Seconds migration_time(const PolicyConfig& policy, const ExpertPlacement& prev,
                       const ExpertPlacement& next, const ClusterSpec& spec) {
  if (policy.kind != PolicyKind::kInterval) return 0.0;
  placement_churn(prev, next);  // shape check
  std::vector<double> per_rank(spec.nodes, 0.0);
  const auto before = prev.slots();
  const auto after = next.slots();
  const auto replicas = next.replica_counts();
  for (std::size_t j = 0; j < after.size(); ++j) {
    if (before[j] == after[j]) continue;
    const double share = static_cast<double>(spec.optimizer_bytes) /
                         static_cast<double>(replicas[after[j]]);
    per_rank[next.rank_of_slot(static_cast<std::int64_t>(j))] +=
        (static_cast<double>(spec.weight_bytes) + share) / spec.bw_net;
  }
  return *std::max_element(per_rank.begin(), per_rank.end());
}

}  // namespace exrep
