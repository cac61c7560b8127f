// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#include "exrep/exrep.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "exrep/commplan.hpp"
#include "exrep/costmodel.hpp"
#include "exrep/error.hpp"
#include "exrep/json_io.hpp"
#include "exrep/scheduler.hpp"
#include "exrep/simulator.hpp"
#include "exrep/tracegen.hpp"
#include "exrep/verify.hpp"

struct exrep_cluster {
  exrep::ClusterSpec spec;
};

struct exrep_trace {
  exrep::Trace trace;
};

struct exrep_simulation {
  exrep::Comparison comparison;
  std::vector<exrep::WrittenReport> written;
};

namespace {

thread_local std::string g_last_error;

exrep_status to_status(exrep::ErrorCode code) {
  using exrep::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidSpec: return EXREP_ERR_INVALID_SPEC;
    case ErrorCode::kInvalidPlacement: return EXREP_ERR_INVALID_PLACEMENT;
    case ErrorCode::kInvalidInput: return EXREP_ERR_INVALID_INPUT;
    case ErrorCode::kShapeMismatch: return EXREP_ERR_SHAPE_MISMATCH;
    case ErrorCode::kParseError: return EXREP_ERR_PARSE;
    case ErrorCode::kSchemaError: return EXREP_ERR_SCHEMA;
    case ErrorCode::kInvalidConfig: return EXREP_ERR_INVALID_CONFIG;
    case ErrorCode::kMissingPopularity: return EXREP_ERR_MISSING_POPULARITY;
    case ErrorCode::kInvalidK: return EXREP_ERR_INVALID_K;
    case ErrorCode::kIo: return EXREP_ERR_IO;
    case ErrorCode::kInternal: return EXREP_ERR_INTERNAL;
  }
  return EXREP_ERR_INTERNAL;
}

exrep_status fail(exrep_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `body`, mapping exceptions to status codes. Every exported function
// that can throw goes through here so nothing escapes the C boundary.
template <typename Body>
exrep_status guarded(Body&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const exrep::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(EXREP_ERR_INVALID_CONFIG, e.what());
  } catch (const std::bad_alloc&) {
    return fail(EXREP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(EXREP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(EXREP_ERR_INTERNAL, "unknown exception");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

exrep::ClusterSpec from_params(const exrep_cluster_params& p) {
  exrep::ClusterSpec s;
  s.nodes = p.nodes;
  s.slots_per_rank = p.slots_per_rank;
  s.expert_classes = p.expert_classes;
  s.bw_pci = p.bw_pci;
  s.bw_net = p.bw_net;
  s.grad_bytes = p.grad_bytes;
  s.weight_bytes = p.weight_bytes;
  s.optimizer_bytes = p.optimizer_bytes;
  s.tokens_per_batch = p.tokens_per_batch;
  s.capacity_factor = p.capacity_factor;
  return s;
}

exrep_cluster_params to_params(const exrep::ClusterSpec& s) {
  return {s.nodes,        s.slots_per_rank, s.expert_classes,  s.bw_pci,
          s.bw_net,       s.grad_bytes,     s.weight_bytes,    s.optimizer_bytes,
          s.tokens_per_batch, s.capacity_factor};
}

exrep::TraceGenConfig from_params(const exrep_tracegen_params& p) {
  exrep::TraceGenConfig c;
  c.experts = p.experts;
  c.iterations = p.iterations;
  c.tokens_per_batch = p.tokens_per_batch;
  switch (p.mode) {
    case EXREP_TRACE_WALK: c.mode = exrep::TraceMode::kWalk; break;
    case EXREP_TRACE_SPIKY: c.mode = exrep::TraceMode::kSpiky; break;
    case EXREP_TRACE_UNIFORM: c.mode = exrep::TraceMode::kUniform; break;
    default: throw exrep::Error(exrep::ErrorCode::kInvalidConfig, "unknown trace mode");
  }
  c.volatility = p.volatility;
  c.spike_probability = p.spike_probability;
  c.skew = p.skew;
  c.seed = p.seed;
  return c;
}

#define EXREP_REQUIRE(ptr)                                               \
  do {                                                                   \
    if ((ptr) == nullptr) return fail(EXREP_ERR_NULL_ARGUMENT, #ptr " is NULL"); \
  } while (0)

}  // namespace

extern "C" {

const char* exrep_version(void) { return "0.1.0"; }

const char* exrep_status_name(exrep_status status) {
  switch (status) {
    case EXREP_OK: return "ok";
    case EXREP_ERR_INVALID_SPEC: return "InvalidSpec";
    case EXREP_ERR_INVALID_PLACEMENT: return "InvalidPlacement";
    case EXREP_ERR_INVALID_INPUT: return "InvalidInput";
    case EXREP_ERR_SHAPE_MISMATCH: return "ShapeMismatch";
    case EXREP_ERR_PARSE: return "ParseError";
    case EXREP_ERR_SCHEMA: return "SchemaError";
    case EXREP_ERR_INVALID_CONFIG: return "InvalidConfig";
    case EXREP_ERR_MISSING_POPULARITY: return "MissingPopularity";
    case EXREP_ERR_INVALID_K: return "InvalidK";
    case EXREP_ERR_IO: return "IoError";
    case EXREP_ERR_NULL_ARGUMENT: return "NullArgument";
    case EXREP_ERR_BUFFER_TOO_SMALL: return "BufferTooSmall";
    case EXREP_ERR_INTERNAL: return "Internal";
  }
  return "unknown";
}

const char* exrep_last_error(void) { return g_last_error.c_str(); }

void exrep_free_string(char* s) { std::free(s); }

void exrep_cluster_params_init(exrep_cluster_params* params) {
  if (params != nullptr) *params = to_params(exrep::ClusterSpec{});
}

exrep_status exrep_cluster_create(const exrep_cluster_params* params, exrep_cluster** out) {
  EXREP_REQUIRE(params);
  EXREP_REQUIRE(out);
  return guarded([&] {
    *out = new exrep_cluster{exrep::validate_cluster(from_params(*params))};
    return EXREP_OK;
  });
}

exrep_status exrep_cluster_preset(const char* name, exrep_cluster** out) {
  EXREP_REQUIRE(name);
  EXREP_REQUIRE(out);
  return guarded([&] {
    if (std::strcmp(name, "paper-example") != 0) {
      return fail(EXREP_ERR_INVALID_CONFIG, std::string("unknown preset '") + name + "'");
    }
    *out = new exrep_cluster{exrep::reference_example_cluster()};
    return EXREP_OK;
  });
}

exrep_status exrep_cluster_from_json(const char* json, exrep_cluster** out) {
  EXREP_REQUIRE(json);
  EXREP_REQUIRE(out);
  return guarded([&] {
    const auto spec = exrep::cluster_from_json(exrep::Json::parse(json));
    *out = new exrep_cluster{exrep::validate_cluster(spec)};
    return EXREP_OK;
  });
}

exrep_status exrep_cluster_to_json(const exrep_cluster* cluster, char** out_json) {
  EXREP_REQUIRE(cluster);
  EXREP_REQUIRE(out_json);
  return guarded([&] {
    *out_json = dup_string(exrep::cluster_to_json(cluster->spec).dump(2));
    return EXREP_OK;
  });
}

exrep_status exrep_cluster_get_params(const exrep_cluster* cluster,
                                      exrep_cluster_params* out) {
  EXREP_REQUIRE(cluster);
  EXREP_REQUIRE(out);
  *out = to_params(cluster->spec);
  return EXREP_OK;
}

void exrep_cluster_destroy(exrep_cluster* cluster) { delete cluster; }

exrep_status exrep_cost_summary_get(const exrep_cluster* cluster, exrep_cost_summary* out) {
  EXREP_REQUIRE(cluster);
  EXREP_REQUIRE(out);
  return guarded([&] {
    const auto& s = cluster->spec;
    const auto report = exrep::cost_report(s, exrep::OptimizerVariant::kOffloaded);
    exrep_cost_summary r{};
    r.mem_footprint_bytes = report.mem_footprint_bytes;
    r.data_grad_bytes = report.data_grad_bytes;
    r.data_weight_bytes = report.data_weight_bytes;
    r.t_grad_static = report.t_grad_static;
    r.t_weight_static = report.t_weight_static;
    r.t_grad_dynamic = report.t_grad_dynamic;
    r.t_weight_dynamic = report.t_weight_dynamic;
    r.overhead_offloaded = report.overhead_ratio;
    r.overhead_hbm_only = exrep::overhead_ratio(s, exrep::OptimizerVariant::kHbmOnly);
    r.migration_weights_s = exrep::migration_cost(1, s, exrep::MigrationPayload::kWeights);
    r.migration_optimizer_s =
        exrep::migration_cost(1, s, exrep::MigrationPayload::kOptimizer);
    *out = r;
    return EXREP_OK;
  });
}

exrep_status exrep_k_partition_bound(const exrep_cluster* cluster, int64_t k,
                                     double* grad_s, double* weight_s) {
  EXREP_REQUIRE(cluster);
  return guarded([&] {
    const auto bound = exrep::k_partition_bound(cluster->spec, k);
    if (grad_s != nullptr) *grad_s = bound.grad;
    if (weight_s != nullptr) *weight_s = bound.weight;
    return EXREP_OK;
  });
}

exrep_status exrep_migration_cost(const exrep_cluster* cluster, int64_t experts_moved,
                                  exrep_payload payload, double* out_s) {
  EXREP_REQUIRE(cluster);
  EXREP_REQUIRE(out_s);
  return guarded([&] {
    exrep::MigrationPayload p;
    switch (payload) {
      case EXREP_PAYLOAD_WEIGHTS: p = exrep::MigrationPayload::kWeights; break;
      case EXREP_PAYLOAD_OPTIMIZER: p = exrep::MigrationPayload::kOptimizer; break;
      case EXREP_PAYLOAD_BOTH: p = exrep::MigrationPayload::kWeightsAndOptimizer; break;
      default: return fail(EXREP_ERR_INVALID_INPUT, "unknown migration payload");
    }
    *out_s = exrep::migration_cost(experts_moved, cluster->spec, p);
    return EXREP_OK;
  });
}

exrep_status exrep_compute_placement(const int64_t* popularity, size_t experts,
                                     int64_t nodes, int64_t slots_per_rank,
                                     int64_t* counts_out, int32_t* slots_out,
                                     size_t slots_len) {
  EXREP_REQUIRE(popularity);
  return guarded([&] {
    const std::span<const std::int64_t> pop(popularity, experts);
    const auto placement = exrep::compute_placement(
        exrep::SchedulerInput{pop, nodes, slots_per_rank, static_cast<std::int64_t>(experts)});
    if (slots_out != nullptr && slots_len < placement.slots().size()) {
      return fail(EXREP_ERR_BUFFER_TOO_SMALL,
                  "slot buffer holds " + std::to_string(slots_len) + ", need " +
                      std::to_string(placement.slots().size()));
    }
    if (counts_out != nullptr) {
      std::copy(placement.replica_counts().begin(), placement.replica_counts().end(),
                counts_out);
    }
    if (slots_out != nullptr) {
      std::copy(placement.slots().begin(), placement.slots().end(), slots_out);
    }
    return EXREP_OK;
  });
}

exrep_status exrep_comm_plan_json(const exrep_cluster* cluster, const int32_t* slots,
                                  size_t slots_len, char** out_json) {
  EXREP_REQUIRE(cluster);
  EXREP_REQUIRE(slots);
  EXREP_REQUIRE(out_json);
  return guarded([&] {
    const auto placement = exrep::placement_from_slots(
        std::span<const exrep::ExpertId>(slots, slots_len), cluster->spec);
    const auto plan = exrep::build_comm_plan(placement, cluster->spec);
    *out_json = dup_string(exrep::comm_plan_to_json(plan).dump());
    return EXREP_OK;
  });
}

void exrep_tracegen_params_init(exrep_tracegen_params* params) {
  if (params == nullptr) return;
  const exrep::TraceGenConfig c;
  *params = {c.experts, c.iterations, c.tokens_per_batch, EXREP_TRACE_WALK,
             c.volatility, c.spike_probability, c.skew, c.seed};
}

exrep_status exrep_trace_mode_parse(const char* name, exrep_trace_mode* out) {
  EXREP_REQUIRE(name);
  EXREP_REQUIRE(out);
  return guarded([&] {
    switch (exrep::parse_trace_mode(name)) {
      case exrep::TraceMode::kWalk: *out = EXREP_TRACE_WALK; break;
      case exrep::TraceMode::kSpiky: *out = EXREP_TRACE_SPIKY; break;
      case exrep::TraceMode::kUniform: *out = EXREP_TRACE_UNIFORM; break;
    }
    return EXREP_OK;
  });
}

exrep_status exrep_trace_generate(const exrep_tracegen_params* params, exrep_trace** out) {
  EXREP_REQUIRE(params);
  EXREP_REQUIRE(out);
  return guarded([&] {
    *out = new exrep_trace{exrep::generate(from_params(*params))};
    return EXREP_OK;
  });
}

exrep_status exrep_trace_load(const char* path, exrep_trace** out) {
  EXREP_REQUIRE(path);
  EXREP_REQUIRE(out);
  return guarded([&] {
    *out = new exrep_trace{exrep::load_trace(path)};
    return EXREP_OK;
  });
}

exrep_status exrep_trace_save(const exrep_trace* trace, const char* path) {
  EXREP_REQUIRE(trace);
  EXREP_REQUIRE(path);
  return guarded([&] {
    exrep::save_trace(trace->trace, path);
    return EXREP_OK;
  });
}

exrep_status exrep_trace_to_csv(const exrep_trace* trace, char** out_csv) {
  EXREP_REQUIRE(trace);
  EXREP_REQUIRE(out_csv);
  return guarded([&] {
    std::ostringstream out;
    exrep::write_trace_csv(trace->trace, out);
    *out_csv = dup_string(out.str());
    return EXREP_OK;
  });
}

int64_t exrep_trace_experts(const exrep_trace* trace) {
  return trace == nullptr ? 0 : trace->trace.expert_classes;
}

int64_t exrep_trace_iterations(const exrep_trace* trace) {
  return trace == nullptr ? 0 : trace->trace.iterations();
}

exrep_status exrep_trace_row(const exrep_trace* trace, int64_t iteration,
                             int64_t* counts_out, size_t len) {
  EXREP_REQUIRE(trace);
  EXREP_REQUIRE(counts_out);
  const auto& t = trace->trace;
  if (iteration < 0 || iteration >= t.iterations()) {
    return fail(EXREP_ERR_INVALID_INPUT, "iteration out of range");
  }
  const auto& row = t.rows[iteration].counts;
  if (len < row.size()) return fail(EXREP_ERR_BUFFER_TOO_SMALL, "row buffer too small");
  std::copy(row.begin(), row.end(), counts_out);
  return EXREP_OK;
}

void exrep_trace_destroy(exrep_trace* trace) { delete trace; }

exrep_status exrep_simulate_config(const char* config_path, const char* out_dir,
                                   exrep_simulation** out) {
  EXREP_REQUIRE(config_path);
  EXREP_REQUIRE(out);
  return guarded([&] {
    const auto config = exrep::load_run_config(config_path);
    const auto trace = exrep::load_run_trace(config);
    auto sim = std::make_unique<exrep_simulation>();
    sim->comparison = exrep::compare(trace, config.cluster, config.policies, config.options);
    std::optional<std::filesystem::path> dir = config.output_dir;
    if (out_dir != nullptr) dir = out_dir;
    if (dir) sim->written = exrep::write_reports(sim->comparison, *dir);
    *out = sim.release();
    return EXREP_OK;
  });
}

exrep_status exrep_simulate(const exrep_cluster* cluster, const exrep_trace* trace,
                            const char* policies_json, exrep_simulation** out) {
  EXREP_REQUIRE(cluster);
  EXREP_REQUIRE(trace);
  EXREP_REQUIRE(policies_json);
  EXREP_REQUIRE(out);
  return guarded([&] {
    const auto j = exrep::Json::parse(policies_json);
    if (!j.is_array()) return fail(EXREP_ERR_INVALID_CONFIG, "policies: expected an array");
    std::vector<exrep::PolicyConfig> policies;
    for (const auto& p : j) policies.push_back(exrep::policy_from_json(p));
    auto sim = std::make_unique<exrep_simulation>();
    sim->comparison = exrep::compare(trace->trace, cluster->spec, policies);
    *out = sim.release();
    return EXREP_OK;
  });
}

size_t exrep_simulation_report_count(const exrep_simulation* sim) {
  return sim == nullptr ? 0 : sim->comparison.reports.size();
}

exrep_status exrep_simulation_report_json(const exrep_simulation* sim, size_t index,
                                          char** out_json) {
  EXREP_REQUIRE(sim);
  EXREP_REQUIRE(out_json);
  if (index >= sim->comparison.reports.size()) {
    return fail(EXREP_ERR_INVALID_INPUT, "report index out of range");
  }
  return guarded([&] {
    *out_json = dup_string(exrep::sim_report_to_json(sim->comparison.reports[index]).dump(2));
    return EXREP_OK;
  });
}

exrep_status exrep_simulation_summary(const exrep_simulation* sim, char** out_table) {
  EXREP_REQUIRE(sim);
  EXREP_REQUIRE(out_table);
  return guarded([&] {
    *out_table = dup_string(exrep::comparison_table(sim->comparison));
    return EXREP_OK;
  });
}

exrep_status exrep_simulation_written(const exrep_simulation* sim, size_t index,
                                      char** json_path, char** csv_path) {
  EXREP_REQUIRE(sim);
  return guarded([&] {
    std::string j;
    std::string c;
    if (index < sim->written.size()) {
      j = sim->written[index].json_path.string();
      c = sim->written[index].csv_path.string();
    }
    if (json_path != nullptr) *json_path = dup_string(j);
    if (csv_path != nullptr) *csv_path = dup_string(c);
    return EXREP_OK;
  });
}

exrep_status exrep_simulation_write(const exrep_simulation* sim, const char* out_dir) {
  EXREP_REQUIRE(sim);
  EXREP_REQUIRE(out_dir);
  return guarded([&] {
    exrep::write_reports(sim->comparison, out_dir);
    return EXREP_OK;
  });
}

void exrep_simulation_destroy(exrep_simulation* sim) { delete sim; }

exrep_status exrep_verify(exrep_verify_scope scope, exrep_check_callback callback,
                          void* user, int* failed) {
  return guarded([&] {
    int failures = 0;
    auto reporter = [&](const exrep::verify::CheckResult& r) {
      if (!r.passed) ++failures;
      if (callback == nullptr) return;
      const exrep_check_result c{r.id.c_str(), r.title.c_str(), r.passed ? 1 : 0,
                                 r.detail.c_str(), r.seconds, r.budget_seconds};
      callback(&c, user);
    };
    if (scope == EXREP_VERIFY_ALL) {
      exrep::verify::run_all({}, reporter);
    } else {
      exrep::verify::run_acceptance({}, reporter);
    }
    if (failed != nullptr) *failed = failures;
    return EXREP_OK;
  });
}

}  // extern "C"
