// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "exrep/commplan.hpp"
#include "exrep/costmodel.hpp"
#include "exrep/model.hpp"
#include "exrep/policies.hpp"
#include "exrep/simulator.hpp"
#include "exrep/tracegen.hpp"

namespace exrep {

using Json = nlohmann::ordered_json;

Json cluster_to_json(const ClusterSpec& spec);
// Field-by-field parse; throws kInvalidConfig naming the offending field.
// The result is not validated.
ClusterSpec cluster_from_json(const Json& j);

Json policy_to_json(const PolicyConfig& policy);
PolicyConfig policy_from_json(const Json& j);

Json tracegen_to_json(const TraceGenConfig& config);
TraceGenConfig tracegen_from_json(const Json& j);

Json cost_report_to_json(const CostReport& report);
Json comm_plan_to_json(const CommPlan& plan);
Json sim_report_to_json(const SimReport& report);

// Inputs of a `simulate` run. Exactly one trace source.
struct RunConfig {
  ClusterSpec cluster;
  std::vector<PolicyConfig> policies;
  std::optional<std::filesystem::path> trace_path;
  std::optional<TraceGenConfig> trace_generator;
  std::optional<std::filesystem::path> output_dir;
  SimOptions options;
};

// Relative trace paths are resolved against `base_dir`.
RunConfig run_config_from_json(const Json& j,
                               const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

Trace load_run_trace(const RunConfig& config);

struct WrittenReport {
  std::filesystem::path json_path;
  std::filesystem::path csv_path;
};

// Writes <index>_<label>.json and .csv per report into `out_dir`.
std::vector<WrittenReport> write_reports(const Comparison& comparison,
                                         const std::filesystem::path& out_dir);

}  // namespace exrep
