// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "exrep/model.hpp"

namespace exrep {

enum class LinkClass : std::uint8_t {
  kLocalPci,   // host <-> accelerator on one rank
  kNetwork,    // cross-rank
  kIntraRank,  // accelerator-local add or copy between slots of one rank
};

const char* link_class_name(LinkClass link) noexcept;

// One (aggregated) point-to-point transfer. `instances` counts how many
// expert instances' shards the tuple carries; bytes already include it.
struct TransferTuple {
  std::int32_t src_rank = 0;
  std::int32_t dst_rank = 0;
  ExpertId expert_class = 0;
  std::int32_t instances = 1;
  Bytes bytes = 0;
  LinkClass link = LinkClass::kLocalPci;

  friend bool operator==(const TransferTuple&, const TransferTuple&) = default;
};

// Size of optimizer partition `partition` when `total` bytes are split over
// `partitions` ranks. Remainder bytes go to the lowest partitions so the
// shards always sum to `total`.
Bytes shard_bytes(Bytes total, std::int64_t partitions, std::int64_t partition);

// Inclusive range of consecutive ranks.
struct RankInterval {
  std::int64_t first = 0;
  std::int64_t last = 0;

  std::int64_t length() const noexcept { return last - first + 1; }
  friend bool operator==(const RankInterval&, const RankInterval&) = default;
};

// All contiguous rank intervals of length >= 2, i.e. N(N-1)/2 groups. The set
// is implicit, so a 2048-rank registry costs nothing until materialized.
// Groups are ordered by length, then by first rank.
class GroupRegistry {
 public:
  explicit GroupRegistry(std::int64_t nodes);

  std::int64_t nodes() const noexcept { return nodes_; }
  std::int64_t size() const noexcept { return nodes_ * (nodes_ - 1) / 2; }
  bool contains(const RankInterval& group) const noexcept;
  std::int64_t index_of(const RankInterval& group) const;
  RankInterval at(std::int64_t index) const;
  std::vector<RankInterval> materialize() const;

 private:
  std::int64_t nodes_;
};

GroupRegistry build_group_registry(std::int64_t nodes);

struct SlotEdge {
  std::int64_t from_slot = 0;
  std::int64_t to_slot = 0;

  friend bool operator==(const SlotEdge&, const SlotEdge&) = default;
};

// Locality-aware all-reduce for one class: slots on a rank add into the
// rank's representative, representatives all-reduce across the hosting
// ranks, the result is divided by the instance count and copied back.
struct ClassAllReduce {
  ExpertId expert_class = 0;
  std::vector<std::int64_t> hosting_ranks;    // sorted, the inter-rank group
  std::vector<std::int64_t> representatives;  // slot per hosting rank
  std::vector<SlotEdge> intra_reduce;         // non-representative -> rep
  std::vector<SlotEdge> intra_broadcast;      // rep -> non-representative
  std::int64_t divisor = 1;

  // The group as an interval when it spans >= 2 consecutive ranks.
  std::optional<RankInterval> contiguous_group() const;
};

struct AllReducePlan {
  std::int64_t slots_per_rank = 1;
  std::int64_t total_slots = 0;
  std::vector<ClassAllReduce> per_class;
};

AllReducePlan plan_allreduce(const ExpertPlacement& placement,
                             const ClusterSpec& spec);

// Runs the plan on per-slot vectors. Every slot ends with the mean of its
// class's instance vectors. Throws kShapeMismatch.
std::vector<std::vector<double>> simulate_allreduce(
    const AllReducePlan& plan, const std::vector<std::vector<double>>& values);

// Source rank for `destination`'s shard of a class hosted on
// `hosting_ranks` (sorted): the destination itself when it hosts the class,
// otherwise hosting_ranks[k mod hosts] where k is the destination's position
// among the ranks that do not host the class.
std::int64_t grad_source_rank(const std::vector<std::int64_t>& hosting_ranks,
                              std::int64_t destination);

// E tuples per destination rank, one synchronized shard of G each.
std::vector<TransferTuple> plan_grad_gather(const ExpertPlacement& placement,
                                            const ClusterSpec& spec);

// Shard contributions of every instance other than the gather source,
// attributed to the partition owner. Same-rank contributions are intra-rank.
std::vector<TransferTuple> plan_grad_exchange(
    const ExpertPlacement& placement, const ClusterSpec& spec,
    const std::vector<TransferTuple>& grad_gather);

// Every slot of `next_placement` receives one weight shard from each
// optimizer partition rank.
std::vector<TransferTuple> plan_weight_scatter(
    const ExpertPlacement& next_placement, const ClusterSpec& spec);

struct CommPlan {
  std::int64_t nodes = 0;
  std::int64_t expert_classes = 0;
  AllReducePlan allreduce;
  std::vector<TransferTuple> grad_exchange;
  std::vector<TransferTuple> grad_gather;
  std::vector<TransferTuple> weight_scatter;
};

// Gradient phase follows `placement`, weight phase materializes `next`.
CommPlan build_comm_plan(const ExpertPlacement& placement,
                         const ExpertPlacement& next, const ClusterSpec& spec);
CommPlan build_comm_plan(const ExpertPlacement& placement,
                         const ClusterSpec& spec);

struct RankTraffic {
  Bytes grad_pci = 0;
  Bytes grad_net_rx = 0;
  Bytes grad_net_tx = 0;
  Bytes grad_intra = 0;
  Bytes weight_pci = 0;
  Bytes weight_net_rx = 0;
  Bytes weight_net_tx = 0;
  Bytes weight_local = 0;

  friend bool operator==(const RankTraffic&, const RankTraffic&) = default;
};

struct PlanTotals {
  std::vector<RankTraffic> per_rank;
  Bytes grad_total = 0;    // exchange + gather
  Bytes gather_total = 0;  // gather only
  Bytes weight_total = 0;
  Bytes grad_network = 0;
  Bytes weight_network = 0;
};

PlanTotals plan_byte_totals(const CommPlan& plan);

struct PhaseTimes {
  Seconds grad = 0.0;
  Seconds weight = 0.0;
};

// Slowest rank per phase: pci/BW_pci + max(rx, tx)/BW_net.
PhaseTimes plan_phase_times(const PlanTotals& totals, const ClusterSpec& spec);

}  // namespace exrep
