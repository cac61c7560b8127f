// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#include "exrep/commplan.hpp"

#include <algorithm>
#include <string>

#include "exrep/error.hpp"

namespace exrep {
namespace {

struct HostEntry {
  std::int64_t rank;
  std::int64_t instances;
};

// Per class, the ranks hosting it in ascending order with instance counts.
std::vector<std::vector<HostEntry>> hosts_by_class(
    const ExpertPlacement& placement) {
  std::vector<std::vector<HostEntry>> hosts(placement.expert_classes());
  const auto slots = placement.slots();
  for (std::size_t j = 0; j < slots.size(); ++j) {
    const auto rank = placement.rank_of_slot(static_cast<std::int64_t>(j));
    auto& list = hosts[slots[j]];
    if (list.empty() || list.back().rank != rank) {
      list.push_back({rank, 1});
    } else {
      ++list.back().instances;
    }
  }
  return hosts;
}

std::vector<std::int64_t> ranks_of(const std::vector<HostEntry>& hosts) {
  std::vector<std::int64_t> ranks;
  ranks.reserve(hosts.size());
  for (const auto& h : hosts) ranks.push_back(h.rank);
  return ranks;
}

void check_shape(const ExpertPlacement& placement, const ClusterSpec& spec) {
  if (placement.nodes() != spec.nodes ||
      placement.slots_per_rank() != spec.slots_per_rank ||
      placement.expert_classes() != spec.expert_classes) {
    throw Error(ErrorCode::kShapeMismatch,
                "placement shape does not match the cluster");
  }
}

}  // namespace

const char* link_class_name(LinkClass link) noexcept {
  switch (link) {
    case LinkClass::kLocalPci: return "local-pci";
    case LinkClass::kNetwork: return "network";
    case LinkClass::kIntraRank: return "intra-rank";
  }
  return "unknown";
}

Bytes shard_bytes(Bytes total, std::int64_t partitions,
                  std::int64_t partition) {
  return total / partitions + (partition < total % partitions ? 1 : 0);
}

GroupRegistry::GroupRegistry(std::int64_t nodes) : nodes_(nodes) {
  if (nodes < 1) throw Error(ErrorCode::kInvalidInput, "registry needs N >= 1");
}

bool GroupRegistry::contains(const RankInterval& group) const noexcept {
  return group.first >= 0 && group.last < nodes_ && group.first < group.last;
}

std::int64_t GroupRegistry::index_of(const RankInterval& group) const {
  if (!contains(group)) {
    throw Error(ErrorCode::kInvalidInput,
                "interval [" + std::to_string(group.first) + ".." +
                    std::to_string(group.last) + "] is not registered");
  }
  // Lengths 2..L-1 contribute (N-1) + (N-2) + ... + (N-L+2) groups.
  const std::int64_t len = group.length();
  const std::int64_t shorter = len - 2;
  const std::int64_t before = shorter * (nodes_ - 1) - shorter * (shorter - 1) / 2;
  return before + group.first;
}

RankInterval GroupRegistry::at(std::int64_t index) const {
  if (index < 0 || index >= size()) {
    throw Error(ErrorCode::kInvalidInput, "registry index out of range");
  }
  for (std::int64_t len = 2; len <= nodes_; ++len) {
    const std::int64_t count = nodes_ - len + 1;
    if (index < count) return {index, index + len - 1};
    index -= count;
  }
  throw Error(ErrorCode::kInternal, "registry index walk overran");
}

std::vector<RankInterval> GroupRegistry::materialize() const {
  std::vector<RankInterval> groups;
  groups.reserve(static_cast<std::size_t>(size()));
  for (std::int64_t len = 2; len <= nodes_; ++len) {
    for (std::int64_t first = 0; first + len <= nodes_; ++first) {
      groups.push_back({first, first + len - 1});
    }
  }
  return groups;
}

GroupRegistry build_group_registry(std::int64_t nodes) {
  return GroupRegistry(nodes);
}

std::optional<RankInterval> ClassAllReduce::contiguous_group() const {
  if (hosting_ranks.size() < 2) return std::nullopt;
  const auto first = hosting_ranks.front();
  const auto last = hosting_ranks.back();
  if (last - first + 1 != static_cast<std::int64_t>(hosting_ranks.size())) {
    return std::nullopt;
  }
  return RankInterval{first, last};
}

AllReducePlan plan_allreduce(const ExpertPlacement& placement,
                             const ClusterSpec& spec) {
  check_shape(placement, spec);
  AllReducePlan plan;
  plan.slots_per_rank = placement.slots_per_rank();
  plan.total_slots = static_cast<std::int64_t>(placement.slots().size());
  plan.per_class.resize(placement.expert_classes());
  for (std::int64_t e = 0; e < placement.expert_classes(); ++e) {
    plan.per_class[e].expert_class = static_cast<ExpertId>(e);
    plan.per_class[e].divisor = placement.replica_counts()[e];
  }
  // Slots are visited in ascending order, so the first slot seen on a rank
  // is its lowest local slot and becomes the representative.
  const auto slots = placement.slots();
  for (std::size_t j = 0; j < slots.size(); ++j) {
    const auto slot = static_cast<std::int64_t>(j);
    const auto rank = placement.rank_of_slot(slot);
    auto& cls = plan.per_class[slots[j]];
    if (cls.hosting_ranks.empty() || cls.hosting_ranks.back() != rank) {
      cls.hosting_ranks.push_back(rank);
      cls.representatives.push_back(slot);
    } else {
      const auto rep = cls.representatives.back();
      cls.intra_reduce.push_back({slot, rep});
      cls.intra_broadcast.push_back({rep, slot});
    }
  }
  return plan;
}

std::vector<std::vector<double>> simulate_allreduce(
    const AllReducePlan& plan, const std::vector<std::vector<double>>& values) {
  if (static_cast<std::int64_t>(values.size()) != plan.total_slots) {
    throw Error(ErrorCode::kShapeMismatch,
                "expected one value vector per slot (" +
                    std::to_string(plan.total_slots) + "), got " +
                    std::to_string(values.size()));
  }
  auto out = values;
  for (const auto& cls : plan.per_class) {
    if (cls.representatives.empty()) continue;
    const auto width = values[cls.representatives.front()].size();
    auto check = [&](std::int64_t slot) {
      if (values[slot].size() != width) {
        throw Error(ErrorCode::kShapeMismatch,
                    "class " + std::to_string(cls.expert_class) +
                        " has vectors of different lengths");
      }
    };
    for (auto rep : cls.representatives) check(rep);
    for (const auto& edge : cls.intra_reduce) check(edge.from_slot);

    // Step 1: intra-rank add into the representative.
    for (const auto& edge : cls.intra_reduce) {
      auto& dst = out[edge.to_slot];
      const auto& src = values[edge.from_slot];
      for (std::size_t k = 0; k < width; ++k) dst[k] += src[k];
    }
    // Step 2: inter-rank all-reduce across representatives.
    std::vector<double> sum(width, 0.0);
    for (auto rep : cls.representatives) {
      for (std::size_t k = 0; k < width; ++k) sum[k] += out[rep][k];
    }
    // Step 3: normalize by the global instance count and copy back.
    const double divisor = static_cast<double>(cls.divisor);
    for (auto& v : sum) v /= divisor;
    for (auto rep : cls.representatives) out[rep] = sum;
    for (const auto& edge : cls.intra_broadcast) out[edge.to_slot] = sum;
  }
  return out;
}

std::int64_t grad_source_rank(const std::vector<std::int64_t>& hosting_ranks,
                              std::int64_t destination) {
  if (hosting_ranks.empty()) {
    throw Error(ErrorCode::kInvalidPlacement, "class has no hosting rank");
  }
  const auto below = std::lower_bound(hosting_ranks.begin(),
                                      hosting_ranks.end(), destination);
  if (below != hosting_ranks.end() && *below == destination) return destination;
  // Round-robin over the destinations that need a remote source. For a
  // contiguous host range this equals destination mod hosts.
  const auto n = static_cast<std::int64_t>(hosting_ranks.size());
  const auto remote_position = destination - (below - hosting_ranks.begin());
  return hosting_ranks[remote_position % n];
}

std::vector<TransferTuple> plan_grad_gather(const ExpertPlacement& placement,
                                            const ClusterSpec& spec) {
  check_shape(placement, spec);
  const auto hosts = hosts_by_class(placement);
  std::vector<std::vector<std::int64_t>> ranks;
  ranks.reserve(hosts.size());
  for (const auto& h : hosts) ranks.push_back(ranks_of(h));

  std::vector<TransferTuple> tuples;
  tuples.reserve(static_cast<std::size_t>(spec.nodes * spec.expert_classes));
  for (std::int64_t dst = 0; dst < spec.nodes; ++dst) {
    const Bytes shard = shard_bytes(spec.grad_bytes, spec.nodes, dst);
    for (std::int64_t e = 0; e < spec.expert_classes; ++e) {
      const auto src = grad_source_rank(ranks[e], dst);
      tuples.push_back({static_cast<std::int32_t>(src),
                        static_cast<std::int32_t>(dst),
                        static_cast<ExpertId>(e), 1, shard,
                        src == dst ? LinkClass::kLocalPci : LinkClass::kNetwork});
    }
  }
  return tuples;
}

std::vector<TransferTuple> plan_grad_exchange(
    const ExpertPlacement& placement, const ClusterSpec& spec,
    const std::vector<TransferTuple>& grad_gather) {
  check_shape(placement, spec);
  const auto hosts = hosts_by_class(placement);
  std::vector<TransferTuple> tuples;
  for (const auto& gather : grad_gather) {
    const Bytes shard = shard_bytes(spec.grad_bytes, spec.nodes, gather.dst_rank);
    for (const auto& host : hosts.at(gather.expert_class)) {
      const std::int64_t contributors =
          host.instances - (host.rank == gather.src_rank ? 1 : 0);
      if (contributors == 0) continue;
      tuples.push_back({static_cast<std::int32_t>(host.rank), gather.dst_rank,
                        gather.expert_class,
                        static_cast<std::int32_t>(contributors),
                        contributors * shard,
                        host.rank == gather.dst_rank ? LinkClass::kIntraRank
                                                     : LinkClass::kNetwork});
    }
  }
  return tuples;
}

std::vector<TransferTuple> plan_weight_scatter(
    const ExpertPlacement& next_placement, const ClusterSpec& spec) {
  check_shape(next_placement, spec);
  // Classes hosted on each rank with their local instance counts.
  std::vector<std::vector<std::pair<ExpertId, std::int64_t>>> by_rank(spec.nodes);
  const auto slots = next_placement.slots();
  for (std::size_t j = 0; j < slots.size(); ++j) {
    auto& list = by_rank[next_placement.rank_of_slot(static_cast<std::int64_t>(j))];
    auto it = std::find_if(list.begin(), list.end(),
                           [&](const auto& p) { return p.first == slots[j]; });
    if (it == list.end()) {
      list.emplace_back(slots[j], 1);
    } else {
      ++it->second;
    }
  }
  std::vector<TransferTuple> tuples;
  for (std::int64_t src = 0; src < spec.nodes; ++src) {
    const Bytes shard = shard_bytes(spec.weight_bytes, spec.nodes, src);
    for (std::int64_t dst = 0; dst < spec.nodes; ++dst) {
      for (const auto& [cls, count] : by_rank[dst]) {
        tuples.push_back({static_cast<std::int32_t>(src),
                          static_cast<std::int32_t>(dst), cls,
                          static_cast<std::int32_t>(count), count * shard,
                          src == dst ? LinkClass::kLocalPci
                                     : LinkClass::kNetwork});
      }
    }
  }
  return tuples;
}

CommPlan build_comm_plan(const ExpertPlacement& placement,
                         const ExpertPlacement& next, const ClusterSpec& spec) {
  CommPlan plan;
  plan.nodes = spec.nodes;
  plan.expert_classes = spec.expert_classes;
  plan.allreduce = plan_allreduce(placement, spec);
  plan.grad_gather = plan_grad_gather(placement, spec);
  plan.grad_exchange = plan_grad_exchange(placement, spec, plan.grad_gather);
  plan.weight_scatter = plan_weight_scatter(next, spec);
  return plan;
}

CommPlan build_comm_plan(const ExpertPlacement& placement,
                         const ClusterSpec& spec) {
  return build_comm_plan(placement, placement, spec);
}

PlanTotals plan_byte_totals(const CommPlan& plan) {
  PlanTotals totals;
  totals.per_rank.resize(plan.nodes);
  auto& ranks = totals.per_rank;

  for (const auto& t : plan.grad_gather) {
    totals.grad_total += t.bytes;
    totals.gather_total += t.bytes;
    // Every gathered shard lands in host memory on the destination.
    ranks[t.dst_rank].grad_pci += t.bytes;
    if (t.link == LinkClass::kNetwork) {
      ranks[t.dst_rank].grad_net_rx += t.bytes;
      ranks[t.src_rank].grad_net_tx += t.bytes;
      totals.grad_network += t.bytes;
    }
  }
  for (const auto& t : plan.grad_exchange) {
    totals.grad_total += t.bytes;
    if (t.link == LinkClass::kNetwork) {
      ranks[t.dst_rank].grad_net_rx += t.bytes;
      ranks[t.src_rank].grad_net_tx += t.bytes;
      totals.grad_network += t.bytes;
    } else {
      ranks[t.dst_rank].grad_intra += t.bytes;
    }
  }

  // One host-to-accelerator landing per (partition, class); same-class slots
  // on the destination are fed by intra-rank copies.
  std::vector<std::vector<bool>> landed(
      plan.nodes, std::vector<bool>(plan.expert_classes, false));
  for (const auto& t : plan.weight_scatter) {
    totals.weight_total += t.bytes;
    if (!landed[t.src_rank][t.expert_class]) {
      landed[t.src_rank][t.expert_class] = true;
      ranks[t.src_rank].weight_pci += t.bytes / t.instances;
    }
    if (t.link == LinkClass::kNetwork) {
      ranks[t.dst_rank].weight_net_rx += t.bytes;
      ranks[t.src_rank].weight_net_tx += t.bytes;
      totals.weight_network += t.bytes;
    } else {
      ranks[t.dst_rank].weight_local += t.bytes;
    }
  }
  return totals;
}

PhaseTimes plan_phase_times(const PlanTotals& totals, const ClusterSpec& spec) {
  PhaseTimes times;
  for (const auto& r : totals.per_rank) {
    const double grad =
        static_cast<double>(r.grad_pci) / spec.bw_pci +
        static_cast<double>(std::max(r.grad_net_rx, r.grad_net_tx)) / spec.bw_net;
    const double weight =
        static_cast<double>(r.weight_pci) / spec.bw_pci +
        static_cast<double>(std::max(r.weight_net_rx, r.weight_net_tx)) /
            spec.bw_net;
    times.grad = std::max(times.grad, grad);
    times.weight = std::max(times.weight, weight);
  }
  return times;
}

}  // namespace exrep
