// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#include <map>

#include <gtest/gtest.h>

#include "exrep/verify.hpp"

namespace exrep::verify {
namespace {

std::map<std::string, bool> outcome(const Hooks& hooks) {
  std::map<std::string, bool> out;
  for (const auto& r : run_acceptance(hooks)) out[r.id] = r.passed;
  return out;
}

TEST(Verify, EverythingPasses) {
  int seen = 0;
  const auto results = run_all({}, [&](const CheckResult&) { ++seen; });
  EXPECT_EQ(seen, static_cast<int>(results.size()));
  for (const auto& r : results) {
    EXPECT_TRUE(r.passed) << format_result(r);
    EXPECT_LE(r.seconds, r.budget_seconds) << r.id;
  }
  EXPECT_EQ(run_acceptance().size(), 8u);
}

TEST(Verify, FormatResult) {
  CheckResult r{"A9", "demo", false, "off by one", 0.5, 1.0};
  const auto line = format_result(r);
  EXPECT_EQ(line.rfind("[FAIL] A9", 0), 0u) << line;
  EXPECT_NE(line.find("off by one"), std::string::npos);
}

TEST(Verify, BrokenStaticTimeFailsGoldenCheck) {
  Hooks h;
  h.comm_time_static = [](const ClusterSpec& s, OptimizerVariant v) {
    auto t = exrep::comm_time_static(s, v);
    t.grad *= 1.01;
    return t;
  };
  const auto o = outcome(h);
  EXPECT_FALSE(o.at("A1"));
  EXPECT_TRUE(o.at("A2"));
}

TEST(Verify, BrokenSchedulerFailsOracleCheck) {
  Hooks h;
  h.compute_placement = [](const SchedulerInput& in) {
    // Swaps the first and last slots, which breaks the contiguous layout.
    auto p = exrep::compute_placement(in);
    if (in.expert_classes < 2) return p;
    std::vector<ExpertId> slots(p.slots().begin(), p.slots().end());
    std::swap(slots.front(), slots.back());
    return p.slots().front() == p.slots().back()
               ? p
               : placement_from_slots(slots, in.world_size, in.slots_per_rank,
                                      in.expert_classes);
  };
  EXPECT_FALSE(outcome(h).at("A2"));
}

TEST(Verify, BrokenAllreduceFails) {
  Hooks h;
  h.simulate_allreduce = [](const AllReducePlan& plan,
                            const std::vector<std::vector<double>>& values) {
    auto out = exrep::simulate_allreduce(plan, values);
    if (!out.empty() && !out[0].empty()) out[0][0] += 1e-6;
    return out;
  };
  EXPECT_FALSE(outcome(h).at("A4"));
}

TEST(Verify, BrokenGatherFails) {
  Hooks h;
  h.plan_grad_gather = [](const ExpertPlacement& p, const ClusterSpec& s) {
    auto tuples = exrep::plan_grad_gather(p, s);
    // Always pull from the lowest hosting rank: breaks round-robin balance.
    for (auto& t : tuples) {
      for (std::int64_t j = 0; j < static_cast<std::int64_t>(p.slots().size()); ++j) {
        if (p.at(j) == t.expert_class) {
          if (t.src_rank != t.dst_rank) t.src_rank = static_cast<std::int32_t>(p.rank_of_slot(j));
          break;
        }
      }
    }
    return tuples;
  };
  EXPECT_FALSE(outcome(h).at("A5"));
}

TEST(Verify, BrokenBoundFails) {
  Hooks decreasing;
  decreasing.k_partition_bound = [](const ClusterSpec& s, std::int64_t k) {
    auto b = exrep::k_partition_bound(s, k == 8 ? 4 : k);
    if (k == 8) b.grad *= 0.9;
    return b;
  };
  EXPECT_FALSE(outcome(decreasing).at("A8"));

  Hooks off_at_one;
  off_at_one.k_partition_bound = [](const ClusterSpec& s, std::int64_t k) {
    auto b = exrep::k_partition_bound(s, k);
    if (k == 1) b.weight *= 1.000001;
    return b;
  };
  EXPECT_FALSE(outcome(off_at_one).at("A8"));
}

TEST(Verify, BrokenWeightScatterFailsVolume) {
  Hooks h;
  h.plan_weight_scatter = [](const ExpertPlacement& p, const ClusterSpec& s) {
    auto tuples = exrep::plan_weight_scatter(p, s);
    if (!tuples.empty()) tuples.pop_back();
    return tuples;
  };
  EXPECT_FALSE(outcome(h).at("A3"));
}

TEST(Verify, MigratingPerIterationFailsLatencyCheck) {
  Hooks h;
  h.run = [](const Trace& t, const ClusterSpec& s, const PolicyConfig& p) {
    auto report = exrep::run(t, s, p);
    if (p.kind == PolicyKind::kPerIteration && report.records.size() > 5) {
      report.records[5].migration_s = 0.01;
      report.records[5].total_s += 0.01;
    }
    return report;
  };
  EXPECT_FALSE(outcome(h).at("A7"));
}

}  // namespace
}  // namespace exrep::verify
