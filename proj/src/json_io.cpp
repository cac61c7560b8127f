// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#include "exrep/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "exrep/error.hpp"

namespace exrep {
namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::kInvalidConfig, "field '" + field + "': " + why);
}

const Json& require_field(const Json& j, const std::string& field) {
  if (!j.is_object()) bad_field(field, "enclosing value is not an object");
  auto it = j.find(field);
  if (it == j.end()) bad_field(field, "missing");
  return *it;
}

template <typename T>
T read_number(const Json& j, const std::string& field) {
  const auto& v = require_field(j, field);
  if constexpr (std::is_integral_v<T>) {
    if (v.is_number_integer()) return v.get<T>();
    // 3.375e9 style literals are accepted when integral.
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d == static_cast<double>(static_cast<T>(d))) return static_cast<T>(d);
    }
    bad_field(field, "expected an integer");
  } else {
    if (!v.is_number()) bad_field(field, "expected a number");
    return v.get<T>();
  }
}

template <typename T>
T read_or(const Json& j, const std::string& field, T fallback) {
  if (!j.contains(field)) return fallback;
  return read_number<T>(j, field);
}

bool read_bool_or(const Json& j, const std::string& field, bool fallback) {
  if (!j.contains(field)) return fallback;
  const auto& v = j.at(field);
  if (!v.is_boolean()) bad_field(field, "expected true/false");
  return v.get<bool>();
}

Json ints(const std::vector<std::int64_t>& v) { return Json(v); }

Json tuples_to_json(const std::vector<TransferTuple>& tuples) {
  Json out = Json::array();
  for (const auto& t : tuples) {
    out.push_back({{"src_rank", t.src_rank},
                   {"dst_rank", t.dst_rank},
                   {"expert_class", t.expert_class},
                   {"instances", t.instances},
                   {"bytes", t.bytes},
                   {"link", link_class_name(t.link)}});
  }
  return out;
}

}  // namespace

Json cluster_to_json(const ClusterSpec& s) {
  return {{"nodes", s.nodes},
          {"slots_per_rank", s.slots_per_rank},
          {"expert_classes", s.expert_classes},
          {"bw_pci", s.bw_pci},
          {"bw_net", s.bw_net},
          {"grad_bytes", s.grad_bytes},
          {"weight_bytes", s.weight_bytes},
          {"optimizer_bytes", s.optimizer_bytes},
          {"tokens_per_batch", s.tokens_per_batch},
          {"capacity_factor", s.capacity_factor}};
}

ClusterSpec cluster_from_json(const Json& j) {
  if (!j.is_object()) bad_field("cluster", "expected an object");
  ClusterSpec s;
  s.nodes = read_number<std::int64_t>(j, "nodes");
  s.slots_per_rank = read_number<std::int64_t>(j, "slots_per_rank");
  s.expert_classes = read_number<std::int64_t>(j, "expert_classes");
  s.bw_pci = read_number<double>(j, "bw_pci");
  s.bw_net = read_number<double>(j, "bw_net");
  s.grad_bytes = read_number<Bytes>(j, "grad_bytes");
  s.weight_bytes = read_number<Bytes>(j, "weight_bytes");
  s.optimizer_bytes = read_number<Bytes>(j, "optimizer_bytes");
  s.tokens_per_batch = read_number<std::int64_t>(j, "tokens_per_batch");
  s.capacity_factor = read_or<double>(j, "capacity_factor", 1.0);
  for (const auto& [key, _] : j.items()) {
    static const char* known[] = {"nodes", "slots_per_rank", "expert_classes",
                                  "bw_pci", "bw_net", "grad_bytes",
                                  "weight_bytes", "optimizer_bytes",
                                  "tokens_per_batch", "capacity_factor"};
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) bad_field(key, "unknown cluster field");
  }
  return s;
}

Json policy_to_json(const PolicyConfig& p) {
  Json j = {{"kind", policy_kind_name(p.kind)}};
  if (p.kind == PolicyKind::kInterval) j["interval"] = p.interval;
  j["inter_rank_only"] = p.inter_rank_only;
  return j;
}

PolicyConfig policy_from_json(const Json& j) {
  const auto& kind = require_field(j, "kind");
  if (!kind.is_string()) bad_field("kind", "expected a string");
  const auto name = kind.get<std::string>();
  PolicyConfig p;
  if (name == "static") {
    p.kind = PolicyKind::kStatic;
  } else if (name == "interval") {
    p.kind = PolicyKind::kInterval;
    p.interval = read_number<std::int64_t>(j, "interval");
    if (p.interval < 1) bad_field("interval", "must be >= 1");
  } else if (name == "per-iteration") {
    p.kind = PolicyKind::kPerIteration;
  } else {
    bad_field("kind", "unknown policy '" + name + "'");
  }
  p.inter_rank_only = read_bool_or(j, "inter_rank_only", false);
  return p;
}

Json tracegen_to_json(const TraceGenConfig& c) {
  return {{"experts", c.experts},
          {"iterations", c.iterations},
          {"tokens_per_batch", c.tokens_per_batch},
          {"mode", trace_mode_name(c.mode)},
          {"volatility", c.volatility},
          {"spike_probability", c.spike_probability},
          {"skew", c.skew},
          {"seed", c.seed}};
}

TraceGenConfig tracegen_from_json(const Json& j) {
  if (!j.is_object()) bad_field("generate", "expected an object");
  TraceGenConfig c;
  c.experts = read_or<std::int64_t>(j, "experts", c.experts);
  c.iterations = read_or<std::int64_t>(j, "iterations", c.iterations);
  c.tokens_per_batch = read_or<std::int64_t>(j, "tokens_per_batch", c.tokens_per_batch);
  if (j.contains("mode")) {
    if (!j["mode"].is_string()) bad_field("mode", "expected a string");
    try {
      c.mode = parse_trace_mode(j["mode"].get<std::string>());
    } catch (const Error& e) {
      bad_field("mode", e.what());
    }
  }
  c.volatility = read_or<double>(j, "volatility", c.volatility);
  c.spike_probability = read_or<double>(j, "spike_probability", c.spike_probability);
  c.skew = read_or<double>(j, "skew", c.skew);
  c.seed = read_or<std::uint64_t>(j, "seed", c.seed);
  return c;
}

Json cost_report_to_json(const CostReport& r) {
  return {{"variant", variant_name(r.variant)},
          {"mem_footprint_bytes", r.mem_footprint_bytes},
          {"data_grad_bytes", r.data_grad_bytes},
          {"data_weight_bytes", r.data_weight_bytes},
          {"t_grad_static", r.t_grad_static},
          {"t_weight_static", r.t_weight_static},
          {"t_grad_dynamic", r.t_grad_dynamic},
          {"t_weight_dynamic", r.t_weight_dynamic},
          {"overhead_ratio", r.overhead_ratio}};
}

Json comm_plan_to_json(const CommPlan& plan) {
  Json allreduce = Json::array();
  for (const auto& c : plan.allreduce.per_class) {
    Json intra = Json::array();
    for (const auto& e : c.intra_reduce) intra.push_back({e.from_slot, e.to_slot});
    Json bcast = Json::array();
    for (const auto& e : c.intra_broadcast) bcast.push_back({e.from_slot, e.to_slot});
    allreduce.push_back({{"expert_class", c.expert_class},
                         {"group", ints(c.hosting_ranks)},
                         {"representatives", ints(c.representatives)},
                         {"intra_reduce", intra},
                         {"intra_broadcast", bcast},
                         {"divisor", c.divisor}});
  }
  const auto totals = plan_byte_totals(plan);
  Json per_rank = Json::array();
  for (std::size_t r = 0; r < totals.per_rank.size(); ++r) {
    const auto& t = totals.per_rank[r];
    per_rank.push_back({{"rank", r},
                        {"grad_pci", t.grad_pci},
                        {"grad_net_rx", t.grad_net_rx},
                        {"grad_net_tx", t.grad_net_tx},
                        {"grad_intra", t.grad_intra},
                        {"weight_pci", t.weight_pci},
                        {"weight_net_rx", t.weight_net_rx},
                        {"weight_net_tx", t.weight_net_tx},
                        {"weight_local", t.weight_local}});
  }
  return {{"nodes", plan.nodes},
          {"expert_classes", plan.expert_classes},
          {"allreduce", allreduce},
          {"grad_exchange", tuples_to_json(plan.grad_exchange)},
          {"grad_gather", tuples_to_json(plan.grad_gather)},
          {"weight_scatter", tuples_to_json(plan.weight_scatter)},
          {"totals",
           {{"grad_total", totals.grad_total},
            {"gather_total", totals.gather_total},
            {"weight_total", totals.weight_total},
            {"grad_network", totals.grad_network},
            {"weight_network", totals.weight_network},
            {"per_rank", per_rank}}}};
}

Json sim_report_to_json(const SimReport& report) {
  Json records = Json::array();
  for (const auto& r : report.records) {
    records.push_back({{"iteration", r.iteration},
                       {"policy", policy_kind_name(r.policy)},
                       {"rebalanced", r.rebalanced},
                       {"churn", r.churn},
                       {"dropped", r.dropped},
                       {"dropped_per_class", ints(r.dropped_per_class)},
                       {"assigned", r.assigned},
                       {"survival", r.survival},
                       {"latency",
                        {{"compute_s", r.compute_s},
                         {"comm_grad_s", r.comm_grad_s},
                         {"comm_weight_s", r.comm_weight_s},
                         {"migration_s", r.migration_s},
                         {"metadata_s", r.metadata_s}}},
                       {"total_s", r.total_s},
                       {"replica_counts", ints(r.replica_counts)}});
  }
  const auto& a = report.aggregates;
  return {{"cluster", cluster_to_json(report.cluster)},
          {"policy", policy_to_json(report.policy)},
          {"options",
           {{"compute_base_seconds", report.options.compute_base_seconds},
            {"metadata_seconds", report.options.metadata_seconds},
            {"include_metadata_latency", report.options.include_metadata_latency}}},
          {"aggregates",
           {{"total_assigned", a.total_assigned},
            {"total_dropped", a.total_dropped},
            {"survival_pct", a.survival_pct},
            {"mean_latency_s", a.mean_latency_s},
            {"rebalance_iterations", a.rebalance_iterations},
            {"mean_rebalance_latency_s", a.mean_rebalance_latency_s},
            {"time_to_process_s", a.time_to_process_s}}},
          {"records", records}};
}

RunConfig run_config_from_json(const Json& j,
                               const std::filesystem::path& base_dir) {
  if (!j.is_object()) bad_field("<root>", "expected an object");
  RunConfig cfg;
  cfg.cluster = cluster_from_json(require_field(j, "cluster"));

  const auto& policies = require_field(j, "policies");
  if (!policies.is_array() || policies.empty()) {
    bad_field("policies", "expected a non-empty array");
  }
  for (const auto& p : policies) cfg.policies.push_back(policy_from_json(p));

  const auto& trace = require_field(j, "trace");
  const bool has_path = trace.contains("path");
  const bool has_gen = trace.contains("generate");
  if (has_path == has_gen) {
    bad_field("trace", "exactly one of 'path' or 'generate' is required");
  }
  if (has_path) {
    if (!trace["path"].is_string()) bad_field("trace.path", "expected a string");
    std::filesystem::path p = trace["path"].get<std::string>();
    cfg.trace_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  } else {
    cfg.trace_generator = tracegen_from_json(trace["generate"]);
  }
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) bad_field("output_dir", "expected a string");
    cfg.output_dir = j["output_dir"].get<std::string>();
  }
  cfg.options.include_metadata_latency =
      read_bool_or(j, "include_metadata_latency", false);
  cfg.options.metadata_seconds = read_or<double>(j, "metadata_seconds", 0.0);
  cfg.options.compute_base_seconds =
      read_or<double>(j, "compute_base_seconds", 0.0);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, path.string() + ": " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

Trace load_run_trace(const RunConfig& config) {
  if (config.trace_path) return load_trace(*config.trace_path);
  return generate(*config.trace_generator);
}

std::vector<WrittenReport> write_reports(const Comparison& comparison,
                                         const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + out_dir.string());
  std::vector<WrittenReport> written;
  for (std::size_t i = 0; i < comparison.reports.size(); ++i) {
    const auto& report = comparison.reports[i];
    char prefix[16];
    std::snprintf(prefix, sizeof(prefix), "%02zu_", i);
    const auto stem = std::string(prefix) + report.policy.label();
    WrittenReport w{out_dir / (stem + ".json"), out_dir / (stem + ".csv")};
    {
      std::ofstream out(w.json_path, std::ios::binary);
      if (!out) throw Error(ErrorCode::kIo, "cannot write " + w.json_path.string());
      out << sim_report_to_json(report).dump(2) << '\n';
    }
    {
      std::ofstream out(w.csv_path, std::ios::binary);
      if (!out) throw Error(ErrorCode::kIo, "cannot write " + w.csv_path.string());
      write_records_csv(report, out);
    }
    written.push_back(std::move(w));
  }
  return written;
}

}  // namespace exrep
