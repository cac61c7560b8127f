// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "exrep/error.hpp"
#include "exrep/model.hpp"

namespace exrep {
namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return ErrorCode::kInternal;
}

ClusterSpec tiny() {
  ClusterSpec s;
  s.nodes = 1;
  s.slots_per_rank = 1;
  s.expert_classes = 1;
  return s;
}

TEST(ValidateCluster, ReferenceClusterIsValid) {
  const auto spec = reference_example_cluster();
  EXPECT_EQ(validate_cluster(spec), spec);
  EXPECT_EQ(spec.nodes, 2048);
  EXPECT_EQ(spec.slots_per_rank, 2);
  EXPECT_EQ(spec.expert_classes, 64);
}

TEST(ValidateCluster, MinimalCluster) { EXPECT_NO_THROW(validate_cluster(tiny())); }

TEST(ValidateCluster, TooManyClasses) {
  auto s = tiny();
  s.nodes = 2;
  s.slots_per_rank = 2;
  s.expert_classes = 5;
  try {
    validate_cluster(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidSpec);
    EXPECT_NE(std::string(e.what()).find("expert_classes <= slots_per_rank * nodes"),
              std::string::npos);
  }
}

TEST(ValidateCluster, RejectsEachBadField) {
  auto bad = [](auto mutate) {
    auto s = tiny();
    mutate(s);
    return code_of([&] { validate_cluster(s); });
  };
  EXPECT_EQ(bad([](ClusterSpec& s) { s.nodes = 0; }), ErrorCode::kInvalidSpec);
  EXPECT_EQ(bad([](ClusterSpec& s) { s.slots_per_rank = 0; }), ErrorCode::kInvalidSpec);
  EXPECT_EQ(bad([](ClusterSpec& s) { s.expert_classes = 0; }), ErrorCode::kInvalidSpec);
  EXPECT_EQ(bad([](ClusterSpec& s) { s.bw_pci = 0; }), ErrorCode::kInvalidSpec);
  EXPECT_EQ(bad([](ClusterSpec& s) { s.bw_net = -1; }), ErrorCode::kInvalidSpec);
  EXPECT_EQ(bad([](ClusterSpec& s) { s.bw_net = std::nan(""); }), ErrorCode::kInvalidSpec);
  EXPECT_EQ(bad([](ClusterSpec& s) { s.grad_bytes = 0; }), ErrorCode::kInvalidSpec);
  EXPECT_EQ(bad([](ClusterSpec& s) { s.weight_bytes = 0; }), ErrorCode::kInvalidSpec);
  EXPECT_EQ(bad([](ClusterSpec& s) { s.optimizer_bytes = 0; }), ErrorCode::kInvalidSpec);
  EXPECT_EQ(bad([](ClusterSpec& s) { s.tokens_per_batch = -1; }), ErrorCode::kInvalidSpec);
  EXPECT_EQ(bad([](ClusterSpec& s) { s.capacity_factor = 0; }), ErrorCode::kInvalidSpec);
}

TEST(ValidateCluster, InfiniteBandwidthAllowed) {
  auto s = tiny();
  s.bw_pci = std::numeric_limits<double>::infinity();
  EXPECT_NO_THROW(validate_cluster(s));
}

TEST(ValidateCluster, Idempotent) {
  const auto once = validate_cluster(reference_example_cluster());
  EXPECT_EQ(validate_cluster(once), once);
}

TEST(PlacementFromSlots, Uniform) {
  const std::vector<ExpertId> slots = {0, 0, 1, 1};
  const auto p = placement_from_slots(slots, 2, 2, 2);
  EXPECT_EQ(std::vector<std::int64_t>(p.replica_counts().begin(), p.replica_counts().end()),
            (std::vector<std::int64_t>{2, 2}));
  EXPECT_EQ(p.nodes(), 2);
  EXPECT_EQ(p.rank_of_slot(3), 1);
  EXPECT_EQ(p.at(2), 1);
}

TEST(PlacementFromSlots, Counting) {
  const std::vector<ExpertId> slots = {0, 0, 0, 1};
  const auto p = placement_from_slots(slots, 2, 2, 2);
  EXPECT_EQ(p.replica_counts()[0], 3);
  EXPECT_EQ(p.replica_counts()[1], 1);
}

TEST(PlacementFromSlots, AbsentClass) {
  const std::vector<ExpertId> slots = {0, 0, 0, 0};
  try {
    placement_from_slots(slots, 2, 2, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidPlacement);
    EXPECT_NE(std::string(e.what()).find("class 1 absent"), std::string::npos);
  }
}

TEST(PlacementFromSlots, OutOfRangeAndLength) {
  const std::vector<ExpertId> out_of_range = {0, 2, 1, 1};
  EXPECT_EQ(code_of([&] { placement_from_slots(out_of_range, 2, 2, 2); }),
            ErrorCode::kInvalidPlacement);
  const std::vector<ExpertId> negative = {0, -1, 1, 1};
  EXPECT_EQ(code_of([&] { placement_from_slots(negative, 2, 2, 2); }),
            ErrorCode::kInvalidPlacement);
  const std::vector<ExpertId> short_list = {0, 1, 1};
  EXPECT_EQ(code_of([&] { placement_from_slots(short_list, 2, 2, 2); }),
            ErrorCode::kInvalidPlacement);
}

TEST(PlacementFromSlots, RecountMatches) {
  // Every accepted placement sums to s*N with r_i >= 1.
  std::vector<ExpertId> slots;
  for (int j = 0; j < 24; ++j) slots.push_back(static_cast<ExpertId>((j * 7) % 5));
  const auto p = placement_from_slots(slots, 6, 4, 5);
  std::int64_t sum = 0;
  for (auto r : p.replica_counts()) {
    EXPECT_GE(r, 1);
    sum += r;
  }
  EXPECT_EQ(sum, 24);
}

TEST(Trace, ValidateShape) {
  Trace t;
  t.expert_classes = 2;
  t.rows = {{0, {1, 2}}, {1, {3, 4}}};
  EXPECT_NO_THROW(validate_trace(t));
  EXPECT_EQ(t.iterations(), 2);
  EXPECT_EQ(t.rows[1].total(), 7);

  auto wrong_len = t;
  wrong_len.rows[1].counts.push_back(1);
  EXPECT_EQ(code_of([&] { validate_trace(wrong_len); }), ErrorCode::kShapeMismatch);
  auto gap = t;
  gap.rows[1].iteration = 2;
  EXPECT_EQ(code_of([&] { validate_trace(gap); }), ErrorCode::kShapeMismatch);
  auto negative = t;
  negative.rows[0].counts[0] = -1;
  EXPECT_EQ(code_of([&] { validate_trace(negative); }), ErrorCode::kShapeMismatch);
}

TEST(Error, MessageStartsWithCodeName) {
  const Error e(ErrorCode::kInvalidK, "k=3");
  EXPECT_EQ(std::string(e.what()), std::string(error_code_name(ErrorCode::kInvalidK)) + ": k=3");
}

}  // namespace
}  // namespace exrep
