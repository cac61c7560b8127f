// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

// exrep command-line tool. Talks to the library through exrep.h only.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 internal error
// or failed verification.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "exrep/exrep.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInternal = 2;

struct ClusterDeleter {
  void operator()(exrep_cluster* c) const { exrep_cluster_destroy(c); }
};
struct TraceDeleter {
  void operator()(exrep_trace* t) const { exrep_trace_destroy(t); }
};
struct SimulationDeleter {
  void operator()(exrep_simulation* s) const { exrep_simulation_destroy(s); }
};
using ClusterPtr = std::unique_ptr<exrep_cluster, ClusterDeleter>;
using TracePtr = std::unique_ptr<exrep_trace, TraceDeleter>;
using SimulationPtr = std::unique_ptr<exrep_simulation, SimulationDeleter>;

// Owns a string handed out by the library.
class LibString {
 public:
  LibString() = default;
  LibString(const LibString&) = delete;
  LibString& operator=(const LibString&) = delete;
  ~LibString() { exrep_free_string(s_); }
  char** out() { return &s_; }
  const char* c_str() const { return s_ == nullptr ? "" : s_; }

 private:
  char* s_ = nullptr;
};

int report_failure(exrep_status status) {
  std::fprintf(stderr, "exrep: %s\n", exrep_last_error());
  return status == EXREP_ERR_INTERNAL ? kExitInternal : kExitUsage;
}

// 1728 stays as is, 27648 becomes 27,648.
std::string group_digits(std::int64_t v) {
  std::string digits = std::to_string(v < 0 ? -v : v);
  if (digits.size() > 4) {
    for (int i = static_cast<int>(digits.size()) - 3; i > 0; i -= 3) digits.insert(i, ",");
  }
  return v < 0 ? "-" + digits : digits;
}

std::string gigabytes(std::int64_t bytes) {
  if (bytes % 1'000'000'000 == 0) return group_digits(bytes / 1'000'000'000) + " GB";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g GB", static_cast<double>(bytes) / 1e9);
  return buf;
}

std::vector<std::int64_t> parse_csv_row(const std::string& text) {
  std::vector<std::int64_t> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(cell, &used);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--popularity", "not an integer: '" + cell + "'");
    }
    if (cell.find_first_not_of(" \t", used) != std::string::npos) {
      throw CLI::ValidationError("--popularity", "not an integer: '" + cell + "'");
    }
    out.push_back(v);
  }
  return out;
}

// ---- costmodel --------------------------------------------------------

struct CostArgs {
  std::string preset;
  std::optional<std::int64_t> nodes, slots, experts, grad, weight, optimizer, tokens;
  std::optional<double> bw_pci, bw_net, capacity_factor;
  bool k_sweep = false;
  bool json = false;
};

int cmd_costmodel(const CostArgs& a) {
  exrep_cluster* raw = nullptr;
  exrep_status st = exrep_cluster_preset("paper-example", &raw);
  if (st != EXREP_OK) return report_failure(st);
  ClusterPtr base(raw);
  if (!a.preset.empty() && a.preset != "paper-example") {
    std::fprintf(stderr, "exrep: unknown preset '%s'\n", a.preset.c_str());
    return kExitUsage;
  }

  // Flags override the preset field by field.
  exrep_cluster_params p;
  exrep_cluster_get_params(base.get(), &p);
  if (a.nodes) p.nodes = *a.nodes;
  if (a.slots) p.slots_per_rank = *a.slots;
  if (a.experts) p.expert_classes = *a.experts;
  if (a.bw_pci) p.bw_pci = *a.bw_pci;
  if (a.bw_net) p.bw_net = *a.bw_net;
  if (a.grad) p.grad_bytes = *a.grad;
  if (a.weight) p.weight_bytes = *a.weight;
  if (a.optimizer) p.optimizer_bytes = *a.optimizer;
  if (a.tokens) p.tokens_per_batch = *a.tokens;
  if (a.capacity_factor) p.capacity_factor = *a.capacity_factor;
  st = exrep_cluster_create(&p, &raw);
  if (st != EXREP_OK) return report_failure(st);
  ClusterPtr cluster(raw);

  exrep_cost_summary c;
  st = exrep_cost_summary_get(cluster.get(), &c);
  if (st != EXREP_OK) return report_failure(st);

  struct KRow {
    std::int64_t k;
    double grad, weight;
  };
  std::vector<KRow> sweep;
  if (a.k_sweep) {
    for (std::int64_t k = 1; k <= p.nodes && k <= p.expert_classes; ++k) {
      if (p.nodes % k != 0 || p.expert_classes % k != 0) continue;
      KRow row{k, 0.0, 0.0};
      st = exrep_k_partition_bound(cluster.get(), k, &row.grad, &row.weight);
      if (st != EXREP_OK) return report_failure(st);
      sweep.push_back(row);
    }
  }

  const double t_static = c.t_grad_static + c.t_weight_static;
  const double t_dynamic = c.t_grad_dynamic + c.t_weight_dynamic;
  if (a.json) {
    LibString spec;
    st = exrep_cluster_to_json(cluster.get(), spec.out());
    if (st != EXREP_OK) return report_failure(st);
    std::printf("{\n  \"cluster\": %s,\n", spec.c_str());
    std::printf("  \"mem_footprint_bytes\": %" PRId64 ",\n", c.mem_footprint_bytes);
    std::printf("  \"data_grad_bytes\": %" PRId64 ",\n", c.data_grad_bytes);
    std::printf("  \"data_weight_bytes\": %" PRId64 ",\n", c.data_weight_bytes);
    std::printf("  \"t_grad_static\": %.17g,\n  \"t_weight_static\": %.17g,\n",
                c.t_grad_static, c.t_weight_static);
    std::printf("  \"t_grad_dynamic\": %.17g,\n  \"t_weight_dynamic\": %.17g,\n",
                c.t_grad_dynamic, c.t_weight_dynamic);
    std::printf("  \"overhead_offloaded\": %.17g,\n  \"overhead_hbm_only\": %.17g,\n",
                c.overhead_offloaded, c.overhead_hbm_only);
    std::printf("  \"migration_weights_s\": %.17g,\n  \"migration_optimizer_s\": %.17g",
                c.migration_weights_s, c.migration_optimizer_s);
    if (a.k_sweep) {
      std::printf(",\n  \"k_sweep\": [");
      for (std::size_t i = 0; i < sweep.size(); ++i) {
        std::printf("%s{\"k\": %" PRId64 ", \"grad\": %.17g, \"weight\": %.17g}",
                    i ? ", " : "", sweep[i].k, sweep[i].grad, sweep[i].weight);
      }
      std::printf("]");
    }
    std::printf("\n}\n");
    return kExitOk;
  }

  std::printf("cluster: N=%" PRId64 " s=%" PRId64 " E=%" PRId64
              " G=%s W=%s O=%s BW_pci=%.4g B/s BW_net=%.4g B/s\n\n",
              p.nodes, p.slots_per_rank, p.expert_classes, gigabytes(p.grad_bytes).c_str(),
              gigabytes(p.weight_bytes).c_str(), gigabytes(p.optimizer_bytes).c_str(),
              p.bw_pci, p.bw_net);
  std::printf("%-34s %s\n", "memory footprint (M)", gigabytes(c.mem_footprint_bytes).c_str());
  std::printf("%-34s %s\n", "gradient volume (D_G)", gigabytes(c.data_grad_bytes).c_str());
  std::printf("%-34s %s\n", "weight volume (D_W)", gigabytes(c.data_weight_bytes).c_str());
  std::printf("%-34s %s\n", "total volume",
              gigabytes(c.data_grad_bytes + c.data_weight_bytes).c_str());
  std::printf("%-34s %.4g s (grad %.4g s, weight %.4g s)\n", "T static", t_static,
              c.t_grad_static, c.t_weight_static);
  std::printf("%-34s %.4g s (grad %.4g s, weight %.4g s)\n", "T dynamic", t_dynamic,
              c.t_grad_dynamic, c.t_weight_dynamic);
  std::printf("%-34s %.2f %%\n", "overhead, offloaded optimizer", 100.0 * c.overhead_offloaded);
  std::printf("%-34s %.2f %%\n", "overhead, HBM-resident optimizer",
              100.0 * c.overhead_hbm_only);
  std::printf("%-34s %.4g s\n", "migrate one expert, weights", c.migration_weights_s);
  std::printf("%-34s %.4g s\n", "migrate one expert, optimizer", c.migration_optimizer_s);
  if (a.k_sweep) {
    std::printf("\n%6s %14s %14s %14s\n", "k", "grad_s", "weight_s", "bound_s");
    for (const auto& r : sweep) {
      std::printf("%6" PRId64 " %14.6g %14.6g %14.6g\n", r.k, r.grad, r.weight,
                  r.grad + r.weight);
    }
  }
  return kExitOk;
}

// ---- placement --------------------------------------------------------

int cmd_placement(const std::string& popularity, std::int64_t nodes, std::int64_t slots,
                  std::optional<std::int64_t> experts) {
  const auto pop = parse_csv_row(popularity);
  if (experts && *experts != static_cast<std::int64_t>(pop.size())) {
    std::fprintf(stderr, "exrep: --popularity has %zu values but --experts is %" PRId64 "\n",
                 pop.size(), *experts);
    return kExitUsage;
  }
  if (nodes < 1 || slots < 1) {
    std::fprintf(stderr, "exrep: --nodes and --slots must be >= 1\n");
    return kExitUsage;
  }
  std::vector<std::int64_t> counts(pop.size());
  std::vector<std::int32_t> assignment(static_cast<std::size_t>(nodes * slots));
  const auto st = exrep_compute_placement(pop.data(), pop.size(), nodes, slots, counts.data(),
                                          assignment.data(), assignment.size());
  if (st != EXREP_OK) return report_failure(st);

  std::string line;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    line += (i ? "," : "") + std::to_string(counts[i]);
  }
  std::printf("replicas: %s\n", line.c_str());
  for (std::int64_t r = 0; r < nodes; ++r) {
    std::printf("rank %" PRId64 ":", r);
    for (std::int64_t j = 0; j < slots; ++j) std::printf(" %d", assignment[r * slots + j]);
    std::printf("\n");
  }
  return kExitOk;
}

// ---- tracegen ---------------------------------------------------------

int cmd_tracegen(exrep_tracegen_params params, const std::string& mode, const std::string& out) {
  auto st = exrep_trace_mode_parse(mode.c_str(), &params.mode);
  if (st != EXREP_OK) return report_failure(st);
  exrep_trace* raw = nullptr;
  st = exrep_trace_generate(&params, &raw);
  if (st != EXREP_OK) return report_failure(st);
  TracePtr trace(raw);
  if (out.empty() || out == "-") {
    LibString csv;
    st = exrep_trace_to_csv(trace.get(), csv.out());
    if (st != EXREP_OK) return report_failure(st);
    std::fputs(csv.c_str(), stdout);
    return kExitOk;
  }
  st = exrep_trace_save(trace.get(), out.c_str());
  if (st != EXREP_OK) return report_failure(st);
  std::printf("wrote %" PRId64 " iterations x %" PRId64 " experts to %s\n",
              exrep_trace_iterations(trace.get()), exrep_trace_experts(trace.get()),
              out.c_str());
  return kExitOk;
}

// ---- simulate ---------------------------------------------------------

int cmd_simulate(const std::string& config, const std::string& out) {
  exrep_simulation* raw = nullptr;
  const auto st =
      exrep_simulate_config(config.c_str(), out.empty() ? nullptr : out.c_str(), &raw);
  if (st != EXREP_OK) return report_failure(st);
  SimulationPtr sim(raw);
  LibString table;
  exrep_simulation_summary(sim.get(), table.out());
  std::fputs(table.c_str(), stdout);
  for (std::size_t i = 0; i < exrep_simulation_report_count(sim.get()); ++i) {
    LibString json, csv;
    exrep_simulation_written(sim.get(), i, json.out(), csv.out());
    if (*json.c_str() != '\0') std::printf("wrote %s, %s\n", json.c_str(), csv.c_str());
  }
  return kExitOk;
}

// ---- verify -----------------------------------------------------------

int cmd_verify(bool acceptance_only) {
  int failed = 0;
  auto print = [](const exrep_check_result* r, void*) {
    std::printf("[%s] %-10s %-54s %7.3fs  %s\n", r->passed ? "PASS" : "FAIL", r->id,
                r->title, r->seconds, r->detail);
    std::fflush(stdout);
  };
  const auto st = exrep_verify(acceptance_only ? EXREP_VERIFY_ACCEPTANCE : EXREP_VERIFY_ALL,
                               print, nullptr, &failed);
  if (st != EXREP_OK) {
    std::fprintf(stderr, "exrep: %s\n", exrep_last_error());
    return kExitInternal;
  }
  std::printf("%s: %d check(s) failed\n", failed == 0 ? "ok" : "FAILED", failed);
  return failed == 0 ? kExitOk : kExitInternal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Expert replication and placement simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(exrep_version()));

  auto* sim = app.add_subcommand("simulate", "Run the policies of a JSON config over a trace");
  std::string config_path, out_dir;
  sim->add_option("--config", config_path, "Run config (JSON)")->required();
  sim->add_option("--out", out_dir, "Report directory (overrides output_dir)");

  auto* cost = app.add_subcommand("costmodel", "Closed-form communication and memory costs");
  CostArgs ca;
  cost->add_option("--preset", ca.preset, "Start from a named cluster (paper-example)");
  cost->add_option("--nodes", ca.nodes, "Ranks N");
  cost->add_option("--slots", ca.slots, "Expert slots per rank s");
  cost->add_option("--experts", ca.experts, "Expert classes E");
  cost->add_option("--bw-pci", ca.bw_pci, "Host link bandwidth, bytes/s");
  cost->add_option("--bw-net", ca.bw_net, "Network bandwidth, bytes/s");
  cost->add_option("--grad-bytes", ca.grad, "Gradient bytes per expert G");
  cost->add_option("--weight-bytes", ca.weight, "Weight bytes per expert W");
  cost->add_option("--optimizer-bytes", ca.optimizer, "Optimizer bytes per expert O");
  cost->add_option("--tokens", ca.tokens, "Tokens per batch");
  cost->add_option("--capacity-factor", ca.capacity_factor, "Capacity factor");
  cost->add_flag("--k-sweep", ca.k_sweep, "Tabulate the k-partition bound");
  cost->add_flag("--json", ca.json, "Print JSON instead of a table");

  auto* place = app.add_subcommand("placement", "One scheduler invocation");
  std::string popularity;
  std::int64_t nodes = 1, slots = 1;
  std::optional<std::int64_t> experts;
  place->add_option("--popularity", popularity, "Comma-separated token counts")->required();
  place->add_option("--nodes", nodes, "Ranks N")->required();
  place->add_option("--slots", slots, "Expert slots per rank s")->required();
  place->add_option("--experts", experts, "Expert classes E (checked against --popularity)");

  auto* gen = app.add_subcommand("tracegen", "Generate a synthetic popularity trace");
  exrep_tracegen_params tp;
  exrep_tracegen_params_init(&tp);
  std::string mode = "walk", trace_out;
  gen->add_option("--experts", tp.experts, "Expert classes E")->capture_default_str();
  gen->add_option("--iterations", tp.iterations, "Iterations T")->capture_default_str();
  gen->add_option("--tokens", tp.tokens_per_batch, "Tokens per iteration")->capture_default_str();
  gen->add_option("--mode", mode, "walk | spiky | uniform")->capture_default_str();
  gen->add_option("--volatility", tp.volatility, "Random-walk step")->capture_default_str();
  gen->add_option("--spike-probability", tp.spike_probability, "Per-iteration swap chance")
      ->capture_default_str();
  gen->add_option("--skew", tp.skew, "Spread of the initial log-weights")->capture_default_str();
  gen->add_option("--seed", tp.seed, "RNG seed")->capture_default_str();
  gen->add_option("--out", trace_out, "CSV path, '-' or omitted for stdout");

  auto* ver = app.add_subcommand("verify", "Run the built-in oracle suite");
  bool acceptance_only = false;
  ver->add_flag("--acceptance-only", acceptance_only, "Skip the extra properties");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sim) return cmd_simulate(config_path, out_dir);
    if (*cost) return cmd_costmodel(ca);
    if (*place) return cmd_placement(popularity, nodes, slots, experts);
    if (*gen) return cmd_tracegen(tp, mode, trace_out);
    if (*ver) return cmd_verify(acceptance_only);
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "exrep: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
