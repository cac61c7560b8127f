// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

// Exercises the shared library through its C header only.

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "exrep/exrep.h"

namespace {

std::string take(char* s) {
  std::string out = s == nullptr ? "" : s;
  exrep_free_string(s);
  return out;
}

TEST(CApi, VersionAndStatusNames) {
  EXPECT_GT(std::strlen(exrep_version()), 0u);
  EXPECT_STREQ(exrep_status_name(EXREP_OK), "ok");
  EXPECT_STRNE(exrep_status_name(EXREP_ERR_INVALID_K), exrep_status_name(EXREP_ERR_IO));
}

TEST(CApi, PresetCostSummary) {
  exrep_cluster* c = nullptr;
  ASSERT_EQ(exrep_cluster_preset("paper-example", &c), EXREP_OK);
  exrep_cost_summary s;
  ASSERT_EQ(exrep_cost_summary_get(c, &s), EXREP_OK);
  EXPECT_EQ(s.mem_footprint_bytes, 1728LL * 1000000000LL);
  EXPECT_EQ(s.data_grad_bytes, 13824LL * 1000000000LL);
  EXPECT_NEAR(s.t_grad_static + s.t_weight_static, 0.2691, 1e-4);
  EXPECT_NEAR(s.t_grad_dynamic + s.t_weight_dynamic, 0.2732, 1e-4);
  EXPECT_NEAR(s.overhead_offloaded, 62.0 / 4082.0, 1e-12);
  EXPECT_NEAR(s.overhead_hbm_only, 62.0 / 4032.0, 1e-12);
  EXPECT_NEAR(s.migration_weights_s, 0.0675, 1e-12);
  EXPECT_NEAR(s.migration_optimizer_s, 0.54, 1e-12);

  double g = 0, w = 0;
  ASSERT_EQ(exrep_k_partition_bound(c, 1, &g, &w), EXREP_OK);
  EXPECT_NEAR(g, s.t_grad_dynamic, 1e-15);
  EXPECT_EQ(exrep_k_partition_bound(c, 3, &g, &w), EXREP_ERR_INVALID_K);
  EXPECT_NE(std::string(exrep_last_error()).find("k"), std::string::npos);

  double m = 0;
  ASSERT_EQ(exrep_migration_cost(c, 1, EXREP_PAYLOAD_BOTH, &m), EXREP_OK);
  EXPECT_NEAR(m, 0.6075, 1e-12);
  exrep_cluster_destroy(c);
}

TEST(CApi, ClusterCreateAndJson) {
  exrep_cluster_params p;
  exrep_cluster_params_init(&p);
  EXPECT_EQ(p.nodes, 1);
  exrep_cluster* c = nullptr;
  ASSERT_EQ(exrep_cluster_create(&p, &c), EXREP_OK);
  char* json = nullptr;
  ASSERT_EQ(exrep_cluster_to_json(c, &json), EXREP_OK);
  const auto text = take(json);
  exrep_cluster* back = nullptr;
  ASSERT_EQ(exrep_cluster_from_json(text.c_str(), &back), EXREP_OK);
  exrep_cluster_params q;
  ASSERT_EQ(exrep_cluster_get_params(back, &q), EXREP_OK);
  EXPECT_EQ(std::memcmp(&p, &q, sizeof(p)), 0);
  exrep_cluster_destroy(c);
  exrep_cluster_destroy(back);

  p.nodes = 2;
  p.slots_per_rank = 2;
  p.expert_classes = 5;
  EXPECT_EQ(exrep_cluster_create(&p, &c), EXREP_ERR_INVALID_SPEC);
  EXPECT_NE(std::string(exrep_last_error()).find("expert_classes"), std::string::npos);
  EXPECT_EQ(exrep_cluster_from_json("{not json", &c), EXREP_ERR_INVALID_CONFIG);
  EXPECT_EQ(exrep_cluster_preset("nope", &c), EXREP_ERR_INVALID_CONFIG);
  EXPECT_EQ(exrep_cluster_create(nullptr, &c), EXREP_ERR_NULL_ARGUMENT);
}

TEST(CApi, ComputePlacement) {
  const int64_t pop[] = {60, 20, 15, 5};
  int64_t counts[4];
  int32_t slots[8];
  ASSERT_EQ(exrep_compute_placement(pop, 4, 4, 2, counts, slots, 8), EXREP_OK);
  EXPECT_EQ(std::vector<int64_t>(counts, counts + 4), (std::vector<int64_t>{5, 1, 1, 1}));
  EXPECT_EQ(slots[4], 0);
  EXPECT_EQ(slots[7], 3);
  EXPECT_EQ(exrep_compute_placement(pop, 4, 4, 2, counts, slots, 7), EXREP_ERR_BUFFER_TOO_SMALL);
  EXPECT_EQ(exrep_compute_placement(pop, 4, 1, 2, counts, nullptr, 0), EXREP_ERR_INVALID_INPUT);

  exrep_cluster_params p;
  exrep_cluster_params_init(&p);
  p.nodes = 4;
  p.slots_per_rank = 2;
  p.expert_classes = 4;
  exrep_cluster* c = nullptr;
  ASSERT_EQ(exrep_cluster_create(&p, &c), EXREP_OK);
  char* plan = nullptr;
  ASSERT_EQ(exrep_comm_plan_json(c, slots, 8, &plan), EXREP_OK);
  EXPECT_NE(take(plan).find("grad_gather"), std::string::npos);
  EXPECT_EQ(exrep_comm_plan_json(c, slots, 4, &plan), EXREP_ERR_INVALID_PLACEMENT);
  exrep_cluster_destroy(c);
}

TEST(CApi, Traces) {
  exrep_tracegen_params g;
  exrep_tracegen_params_init(&g);
  g.experts = 4;
  g.iterations = 10;
  g.tokens_per_batch = 400;
  ASSERT_EQ(exrep_trace_mode_parse("uniform", &g.mode), EXREP_OK);
  EXPECT_EQ(exrep_trace_mode_parse("bursty", &g.mode), EXREP_ERR_INVALID_CONFIG);
  exrep_trace* t = nullptr;
  ASSERT_EQ(exrep_trace_generate(&g, &t), EXREP_OK);
  EXPECT_EQ(exrep_trace_experts(t), 4);
  EXPECT_EQ(exrep_trace_iterations(t), 10);
  int64_t row[4];
  ASSERT_EQ(exrep_trace_row(t, 9, row, 4), EXREP_OK);
  EXPECT_EQ(row[0] + row[1] + row[2] + row[3], 400);
  EXPECT_EQ(exrep_trace_row(t, 10, row, 4), EXREP_ERR_INVALID_INPUT);
  EXPECT_EQ(exrep_trace_row(t, 0, row, 3), EXREP_ERR_BUFFER_TOO_SMALL);

  char* csv = nullptr;
  ASSERT_EQ(exrep_trace_to_csv(t, &csv), EXREP_OK);
  EXPECT_EQ(take(csv).rfind("iter,e0,e1,e2,e3\n0,", 0), 0u);

  EXPECT_EQ(exrep_trace_load("/nonexistent.csv", &t), EXREP_ERR_IO);
  EXPECT_NE(std::string(exrep_last_error()).find("/nonexistent.csv"), std::string::npos);
  exrep_trace_destroy(t);
}

TEST(CApi, SimulateAndReports) {
  exrep_cluster_params p;
  exrep_cluster_params_init(&p);
  p.nodes = 4;
  p.slots_per_rank = 2;
  p.expert_classes = 4;
  p.tokens_per_batch = 400;
  exrep_cluster* c = nullptr;
  ASSERT_EQ(exrep_cluster_create(&p, &c), EXREP_OK);
  exrep_tracegen_params g;
  exrep_tracegen_params_init(&g);
  g.experts = 4;
  g.iterations = 20;
  g.tokens_per_batch = 400;
  g.mode = EXREP_TRACE_SPIKY;
  exrep_trace* t = nullptr;
  ASSERT_EQ(exrep_trace_generate(&g, &t), EXREP_OK);

  exrep_simulation* sim = nullptr;
  ASSERT_EQ(exrep_simulate(c, t, R"([{"kind":"static"},{"kind":"per-iteration"}])", &sim),
            EXREP_OK);
  EXPECT_EQ(exrep_simulation_report_count(sim), 2u);
  char* json = nullptr;
  ASSERT_EQ(exrep_simulation_report_json(sim, 1, &json), EXREP_OK);
  EXPECT_NE(take(json).find("per-iteration"), std::string::npos);
  EXPECT_EQ(exrep_simulation_report_json(sim, 2, &json), EXREP_ERR_INVALID_INPUT);
  char* table = nullptr;
  ASSERT_EQ(exrep_simulation_summary(sim, &table), EXREP_OK);
  EXPECT_NE(take(table).find("static"), std::string::npos);
  exrep_simulation_destroy(sim);

  EXPECT_EQ(exrep_simulate(c, t, R"({"kind":"static"})", &sim), EXREP_ERR_INVALID_CONFIG);
  EXPECT_EQ(exrep_simulate(c, t, R"([{"kind":"sometimes"}])", &sim), EXREP_ERR_INVALID_CONFIG);

  g.experts = 3;
  exrep_trace* wrong = nullptr;
  ASSERT_EQ(exrep_trace_generate(&g, &wrong), EXREP_OK);
  EXPECT_EQ(exrep_simulate(c, wrong, R"([{"kind":"static"}])", &sim), EXREP_ERR_SHAPE_MISMATCH);
  exrep_trace_destroy(wrong);
  exrep_trace_destroy(t);
  exrep_cluster_destroy(c);
}

void count_checks(const exrep_check_result* r, void* user) {
  auto* n = static_cast<int*>(user);
  ++*n;
  EXPECT_EQ(r->passed, 1) << r->id << " " << r->detail;
}

TEST(CApi, VerifyCallback) {
  int seen = 0, failed = -1;
  ASSERT_EQ(exrep_verify(EXREP_VERIFY_ACCEPTANCE, count_checks, &seen, &failed), EXREP_OK);
  EXPECT_EQ(seen, 8);
  EXPECT_EQ(failed, 0);
}

}  // namespace
