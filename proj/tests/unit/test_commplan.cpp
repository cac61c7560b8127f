// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <map>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "exrep/commplan.hpp"
#include "exrep/costmodel.hpp"
#include "exrep/error.hpp"
#include "exrep/oracles.hpp"
#include "exrep/scheduler.hpp"

namespace exrep {
namespace {

ClusterSpec small(std::int64_t n, std::int64_t s, std::int64_t e) {
  ClusterSpec spec;
  spec.nodes = n;
  spec.slots_per_rank = s;
  spec.expert_classes = e;
  spec.grad_bytes = 1000;
  spec.weight_bytes = 1000;
  spec.optimizer_bytes = 8000;
  spec.bw_pci = 32e9;
  spec.bw_net = 12.5e9;
  return spec;
}

ExpertPlacement from(const std::vector<ExpertId>& slots, const ClusterSpec& spec) {
  return placement_from_slots(slots, spec);
}

TEST(ShardBytes, RemainderGoesToLowPartitions) {
  EXPECT_EQ(shard_bytes(10, 4, 0), 3);
  EXPECT_EQ(shard_bytes(10, 4, 1), 3);
  EXPECT_EQ(shard_bytes(10, 4, 2), 2);
  EXPECT_EQ(shard_bytes(10, 4, 3), 2);
  Bytes sum = 0;
  for (int p = 0; p < 2048; ++p) sum += shard_bytes(3'375'000'000, 2048, p);
  EXPECT_EQ(sum, 3'375'000'000);
}

TEST(GroupRegistry, Examples) {
  EXPECT_EQ(build_group_registry(1).size(), 0);
  EXPECT_TRUE(build_group_registry(1).materialize().empty());
  const auto four = build_group_registry(4).materialize();
  const std::vector<RankInterval> want = {{0, 1}, {1, 2}, {2, 3}, {0, 2}, {1, 3}, {0, 3}};
  EXPECT_EQ(four, want);
  EXPECT_EQ(build_group_registry(2048).size(), 2'096'128);
}

TEST(GroupRegistry, IndexRoundTripAndMembership) {
  const auto reg = build_group_registry(9);
  for (std::int64_t i = 0; i < reg.size(); ++i) EXPECT_EQ(reg.index_of(reg.at(i)), i);
  EXPECT_EQ(reg.size(), oracle::count_contiguous_groups(9));
  EXPECT_FALSE(reg.contains({3, 3}));
  EXPECT_FALSE(reg.contains({4, 9}));
  EXPECT_TRUE(reg.contains({0, 8}));
  EXPECT_THROW(reg.at(reg.size()), Error);
  EXPECT_THROW(build_group_registry(0), Error);
  const auto big = build_group_registry(2048);
  EXPECT_TRUE(big.contains({2000, 2047}));
  EXPECT_EQ(big.at(big.index_of({17, 1900})), (RankInterval{17, 1900}));
}

TEST(PlanAllreduce, SingleInstance) {
  const auto spec = small(2, 1, 2);
  const auto plan = plan_allreduce(from({0, 1}, spec), spec);
  const auto& c = plan.per_class[0];
  EXPECT_TRUE(c.intra_reduce.empty());
  EXPECT_TRUE(c.intra_broadcast.empty());
  EXPECT_EQ(c.hosting_ranks, (std::vector<std::int64_t>{0}));
  EXPECT_EQ(c.divisor, 1);
  EXPECT_FALSE(c.contiguous_group().has_value());
}

TEST(PlanAllreduce, TwoRanksTwoSlots) {
  const auto spec = small(2, 2, 1);
  const auto plan = plan_allreduce(from({0, 0, 0, 0}, spec), spec);
  const auto& c = plan.per_class[0];
  EXPECT_EQ(c.representatives, (std::vector<std::int64_t>{0, 2}));
  EXPECT_EQ(c.intra_reduce, (std::vector<SlotEdge>{{1, 0}, {3, 2}}));
  EXPECT_EQ(c.hosting_ranks, (std::vector<std::int64_t>{0, 1}));
  EXPECT_EQ(c.divisor, 4);
}

TEST(PlanAllreduce, ContiguousGroupIsRegistered) {
  const auto spec = small(6, 1, 4);
  const auto plan = plan_allreduce(from({0, 1, 2, 2, 2, 3}, spec), spec);
  const auto group = plan.per_class[2].contiguous_group();
  ASSERT_TRUE(group.has_value());
  EXPECT_EQ(*group, (RankInterval{2, 4}));
  EXPECT_TRUE(build_group_registry(6).contains(*group));
}

TEST(PlanAllreduce, SchedulerGroupsAreAlwaysRegistered) {
  std::mt19937_64 rng(5);
  for (int c = 0; c < 300; ++c) {
    const std::int64_t n = 2 + rng() % 30, s = 1 + rng() % 4;
    const std::int64_t e = 1 + rng() % (n * s);
    auto spec = small(n, s, e);
    std::vector<std::int64_t> pop(e);
    for (auto& v : pop) v = static_cast<std::int64_t>(rng() % 1000);
    const auto plan = plan_allreduce(compute_placement(pop, spec), spec);
    const auto reg = build_group_registry(n);
    for (const auto& cls : plan.per_class) {
      const auto& h = cls.hosting_ranks;
      ASSERT_EQ(h.back() - h.front() + 1, static_cast<std::int64_t>(h.size()));
      if (h.size() >= 2) ASSERT_TRUE(reg.contains(*cls.contiguous_group()));
    }
  }
}

TEST(SimulateAllreduce, Examples) {
  const auto spec = small(2, 2, 1);
  const auto plan = plan_allreduce(from({0, 0, 0, 0}, spec), spec);
  const auto out = simulate_allreduce(plan, {{1.0}, {3.0}, {5.0}, {7.0}});
  for (const auto& v : out) EXPECT_DOUBLE_EQ(v[0], 4.0);

  const auto one = small(1, 1, 1);
  const auto single = simulate_allreduce(plan_allreduce(from({0}, one), one), {{2.5, -1.0}});
  EXPECT_EQ(single[0], (std::vector<double>{2.5, -1.0}));

  const auto same = simulate_allreduce(plan, {{9.0}, {9.0}, {9.0}, {9.0}});
  for (const auto& v : same) EXPECT_DOUBLE_EQ(v[0], 9.0);
}

TEST(SimulateAllreduce, ShapeErrors) {
  const auto spec = small(2, 2, 1);
  const auto plan = plan_allreduce(from({0, 0, 0, 0}, spec), spec);
  try {
    simulate_allreduce(plan, {{1.0}, {3.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
  EXPECT_THROW(simulate_allreduce(plan, {{1.0}, {3.0, 1.0}, {5.0}, {7.0}}), Error);
}

TEST(SimulateAllreduce, MatchesDirectMean) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> val(-100.0, 100.0);
  for (int c = 0; c < 200; ++c) {
    const std::int64_t n = 1 + rng() % 6, s = 1 + rng() % 4;
    const std::int64_t e = 1 + rng() % (n * s);
    const auto spec = small(n, s, e);
    std::vector<ExpertId> slots(n * s);
    for (std::int64_t j = 0; j < n * s; ++j) {
      slots[j] = static_cast<ExpertId>(j < e ? j : static_cast<std::int64_t>(rng() % e));
    }
    std::shuffle(slots.begin(), slots.end(), rng);
    const auto p = placement_from_slots(slots, spec);
    std::vector<std::vector<double>> values(n * s, std::vector<double>(3));
    for (auto& v : values)
      for (auto& x : v) x = val(rng);
    const auto out = simulate_allreduce(plan_allreduce(p, spec), values);
    const auto want = oracle::direct_mean(slots, values);
    for (std::size_t j = 0; j < out.size(); ++j) {
      for (std::size_t k = 0; k < 3; ++k) {
        ASSERT_NEAR(out[j][k], want[j][k], 1e-12 * std::max(1.0, std::abs(want[j][k])));
      }
    }
  }
}

TEST(GradSourceRank, ModularRoundRobin) {
  const std::vector<std::int64_t> hosts = {1, 3, 5};
  EXPECT_EQ(grad_source_rank(hosts, 7), 3);
  EXPECT_EQ(grad_source_rank(hosts, 3), 3);
  EXPECT_THROW(grad_source_rank({}, 0), Error);
  // Class 0 on ranks {1,3,5} of a 12-rank, one-slot cluster.
  std::vector<ExpertId> slots(12, 1);
  for (auto h : hosts) slots[h] = 0;
  for (std::int64_t d = 0; d < 12; ++d) {
    EXPECT_EQ(grad_source_rank(hosts, d), oracle::round_robin_source(slots, 1, 12, 0, d))
        << d;
  }
}

TEST(GradSourceRank, RemoteLoadIsBalanced) {
  const std::vector<std::int64_t> hosts = {4, 5, 6};
  std::map<std::int64_t, int> uses;
  for (std::int64_t d = 0; d < 16; ++d) {
    if (d < 4 || d > 6) ++uses[grad_source_rank(hosts, d)];
  }
  int lo = 1 << 30, hi = 0;
  for (auto [r, u] : uses) {
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  EXPECT_LE(hi - lo, 1);
  EXPECT_EQ(uses.size(), 3u);
}

TEST(PlanGradGather, FullReplicationIsLocal) {
  const auto spec = small(4, 1, 1);
  const auto tuples = plan_grad_gather(from({0, 0, 0, 0}, spec), spec);
  ASSERT_EQ(tuples.size(), 4u);
  for (const auto& t : tuples) {
    EXPECT_EQ(t.src_rank, t.dst_rank);
    EXPECT_EQ(t.link, LinkClass::kLocalPci);
    EXPECT_EQ(t.bytes, 250);
  }
}

TEST(PlanGradGather, ReferenceScale) {
  const auto spec = reference_example_cluster();
  const auto p = uniform_placement(spec);
  const auto tuples = plan_grad_gather(p, spec);
  ASSERT_EQ(tuples.size(), static_cast<std::size_t>(spec.nodes * spec.expert_classes));
  std::vector<Bytes> rx(spec.nodes, 0);
  std::vector<int> local(spec.nodes, 0);
  for (const auto& t : tuples) {
    rx[t.dst_rank] += t.bytes;
    if (t.src_rank == t.dst_rank) ++local[t.dst_rank];
  }
  for (std::int64_t d = 0; d < spec.nodes; ++d) {
    ASSERT_EQ(rx[d], spec.expert_classes * shard_bytes(spec.grad_bytes, spec.nodes, d));
    // Uniform placement with s=2 puts at most two classes on a rank.
    std::vector<ExpertId> hosted;
    for (std::int64_t j = 0; j < spec.slots_per_rank; ++j) {
      hosted.push_back(p.at(d * spec.slots_per_rank + j));
    }
    std::sort(hosted.begin(), hosted.end());
    hosted.erase(std::unique(hosted.begin(), hosted.end()), hosted.end());
    ASSERT_EQ(local[d], static_cast<int>(hosted.size()));
  }
}

TEST(PlanWeightScatter, Examples) {
  const auto one = small(1, 2, 2);
  for (const auto& t : plan_weight_scatter(from({0, 1}, one), one)) {
    EXPECT_EQ(t.link, LinkClass::kLocalPci);
  }
  const auto two = small(2, 1, 2);
  const auto tuples = plan_weight_scatter(from({0, 1}, two), two);
  ASSERT_EQ(tuples.size(), 4u);
  std::vector<Bytes> local(2, 0), remote(2, 0);
  for (const auto& t : tuples) {
    (t.link == LinkClass::kLocalPci ? local : remote)[t.dst_rank] += t.bytes;
  }
  EXPECT_EQ(local, (std::vector<Bytes>{500, 500}));
  EXPECT_EQ(remote, (std::vector<Bytes>{500, 500}));
}

TEST(PlanTotals, VolumeIsPlacementInvariant) {
  std::mt19937_64 rng(13);
  for (int c = 0; c < 200; ++c) {
    const std::int64_t n = 1 + rng() % 8, s = 1 + rng() % 3;
    const std::int64_t e = 1 + rng() % (n * s);
    auto spec = small(n, s, e);
    spec.grad_bytes = 1 + static_cast<Bytes>(rng() % 100000);
    spec.weight_bytes = 1 + static_cast<Bytes>(rng() % 100000);
    std::vector<ExpertId> slots(n * s);
    for (std::int64_t j = 0; j < n * s; ++j) {
      slots[j] = static_cast<ExpertId>(j < e ? j : static_cast<std::int64_t>(rng() % e));
    }
    std::shuffle(slots.begin(), slots.end(), rng);
    const auto plan = build_comm_plan(placement_from_slots(slots, spec), spec);
    const auto totals = plan_byte_totals(plan);
    const auto volume = data_volume(spec);
    ASSERT_EQ(totals.grad_total, volume.grad);
    ASSERT_EQ(totals.weight_total, volume.weight);
    ASSERT_EQ(totals.gather_total, e * spec.grad_bytes);
    Bytes summed = oracle::sum_bytes(plan.grad_gather) + oracle::sum_bytes(plan.grad_exchange);
    ASSERT_EQ(summed, totals.grad_total);
  }
}

TEST(PlanTotals, OneInstancePerClass) {
  const auto spec = small(2, 2, 4);
  const auto totals = plan_byte_totals(build_comm_plan(from({0, 1, 2, 3}, spec), spec));
  EXPECT_EQ(totals.grad_total, 4 * spec.grad_bytes);
  EXPECT_EQ(totals.weight_total, 4 * spec.weight_bytes);
}

TEST(PlanTotals, PlanTimesTrackModel) {
  auto spec = small(16, 4, 16);
  spec.grad_bytes = spec.weight_bytes = 9'437'184;
  std::vector<std::int64_t> pop(16);
  for (int i = 0; i < 16; ++i) pop[i] = 1 + i * i;
  const auto plan = build_comm_plan(compute_placement(pop, spec), spec);
  const auto times = plan_phase_times(plan_byte_totals(plan), spec);
  const auto model = comm_time_dynamic(spec);
  EXPECT_NEAR(times.grad, model.grad, 0.01 * model.grad);
  EXPECT_NEAR(times.weight, model.weight, 0.01 * model.weight);
}

TEST(CommPlan, ShapeMismatch) {
  const auto spec = small(2, 2, 2);
  const auto other = small(4, 1, 2);
  const auto p = from({0, 0, 1, 1}, spec);
  for (auto fn : {+[](const ExpertPlacement& q, const ClusterSpec& s) { plan_allreduce(q, s); },
                  +[](const ExpertPlacement& q, const ClusterSpec& s) { plan_grad_gather(q, s); },
                  +[](const ExpertPlacement& q, const ClusterSpec& s) {
                    plan_weight_scatter(q, s);
                  }}) {
    try {
      fn(p, other);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
    }
  }
}

}  // namespace
}  // namespace exrep
