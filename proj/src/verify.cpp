// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#include "exrep/verify.hpp"

#include <algorithm>
#include <chrono>
#include <climits>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "exrep/error.hpp"
#include "exrep/oracles.hpp"
#include "exrep/policies.hpp"

namespace exrep::verify {
namespace {

using Rng = boost::random::mt19937_64;

// Tolerances and fuzz budgets. Changing any of these changes what "pass"
// means, so they live here and nowhere else.
constexpr double kTimeTolerance = 1e-4;           // seconds, A1
constexpr double kRatioTolerancePp = 0.01;        // percentage points, A1
constexpr double kMigrationTolerance = 1e-6;      // seconds, A1
constexpr double kMeanRelTolerance = 1e-12;       // A4
constexpr double kBoundRelTolerance = 1e-12;      // A8
constexpr double kOrderingSlackPp = 1.0;          // A6, the two <= steps
constexpr double kStaticMarginPp = 10.0;          // A6, per-iteration vs static
constexpr double kPlanModelTolerance = 0.01;      // plan vs closed form
constexpr double kAutocorrelationFloor = 0.5;
constexpr double kSpikeRatio = 16.0;
constexpr int kSchedulerCases = 10000;
constexpr int kVolumeSpecs = 20;
constexpr int kVolumePlacementsPerSpec = 1000;
constexpr int kAllReduceCases = 1000;
constexpr int kGatherCases = 500;

std::int64_t uniform(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return boost::random::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

double uniform_real(Rng& rng, double lo, double hi) {
  return boost::random::uniform_real_distribution<double>(lo, hi)(rng);
}

// Failure notes collected by a check; the first few end up in `detail`.
class Notes {
 public:
  void fail(const std::string& what) {
    ++failures_;
    if (failures_ <= 3) {
      if (!text_.empty()) text_ += "; ";
      text_ += what;
    }
  }
  bool ok() const { return failures_ == 0; }
  std::string detail(const std::string& on_pass) const {
    if (ok()) return on_pass;
    std::string out = text_;
    if (failures_ > 3) out += " (+" + std::to_string(failures_ - 3) + " more)";
    return out;
  }

 private:
  int failures_ = 0;
  std::string text_;
};

std::string fmt(const char* format, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), format, a);
  return buf;
}

std::string fmt(const char* format, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), format, a, b);
  return buf;
}

template <typename Body>
CheckResult timed(const std::string& id, const std::string& title,
                  double budget, Body&& body) {
  CheckResult r;
  r.id = id;
  r.title = title;
  r.budget_seconds = budget;
  const auto start = std::chrono::steady_clock::now();
  try {
    Notes notes;
    std::string pass_detail = body(notes);
    r.passed = notes.ok();
    r.detail = notes.detail(pass_detail);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("threw: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                  .count();
  if (r.passed && r.seconds > budget) {
    r.passed = false;
    r.detail = fmt("over budget: %.2f s > %.0f s", r.seconds, budget);
  }
  return r;
}

// s*N split into (s, N) with s in [1, 4] where possible.
std::pair<std::int64_t, std::int64_t> split_slots(Rng& rng, std::int64_t total) {
  std::vector<std::int64_t> choices;
  for (std::int64_t s = 1; s <= std::min<std::int64_t>(total, 8); ++s) {
    if (total % s == 0) choices.push_back(s);
  }
  const auto s = choices[uniform(rng, 0, static_cast<std::int64_t>(choices.size()) - 1)];
  return {s, total / s};
}

std::vector<std::int64_t> fuzz_popularity(Rng& rng, std::int64_t experts) {
  std::vector<std::int64_t> pop(experts, 0);
  switch (uniform(rng, 0, 6)) {
    case 0:
      break;  // all zero
    case 1: {
      const auto v = uniform(rng, 1, 1000);
      std::fill(pop.begin(), pop.end(), v);
      break;
    }
    case 2:
      for (auto& v : pop) v = uniform(rng, 0, 100);
      break;
    case 3:
      for (auto& v : pop) v = uniform(rng, 0, 1'000'000);
      break;
    case 4:
      for (auto& v : pop) v = uniform(rng, 0, 3);
      pop[uniform(rng, 0, experts - 1)] = 1'000'000'000;
      break;
    case 5:
      for (auto& v : pop) {
        v = uniform(rng, 0, 3) == 0
                ? 0
                : static_cast<std::int64_t>(std::exp(uniform_real(rng, 0.0, 18.0)));
      }
      break;
    default:
      for (auto& v : pop) v = uniform(rng, 0, 3);
      break;
  }
  return pop;
}

// Every class appears at least once, the rest uniformly, then shuffled.
// One case in four keeps the contiguous scheduler layout instead.
std::vector<ExpertId> fuzz_slots(Rng& rng, std::int64_t total, std::int64_t experts) {
  std::vector<ExpertId> slots(total);
  for (std::int64_t j = 0; j < total; ++j) {
    slots[j] = static_cast<ExpertId>(j < experts ? j : uniform(rng, 0, experts - 1));
  }
  if (uniform(rng, 0, 3) == 0) {
    std::sort(slots.begin(), slots.end());
    return slots;
  }
  for (std::int64_t j = total - 1; j > 0; --j) {
    std::swap(slots[j], slots[uniform(rng, 0, j)]);
  }
  return slots;
}

ClusterSpec small_spec(std::int64_t nodes, std::int64_t s, std::int64_t experts) {
  ClusterSpec spec;
  spec.nodes = nodes;
  spec.slots_per_rank = s;
  spec.expert_classes = experts;
  spec.bw_pci = 32e9;
  spec.bw_net = 12.5e9;
  spec.grad_bytes = 1'000'003;
  spec.weight_bytes = 1'000'003;
  spec.optimizer_bytes = 8'000'024;
  spec.tokens_per_batch = 1024;
  return spec;
}

bool rel_close(double a, double b, double tol) {
  if (a == b) return true;
  return std::fabs(a - b) <= tol * std::max(std::fabs(a), std::fabs(b));
}

std::vector<SimReport> run_study(const Hooks& hooks, std::uint64_t seed,
                                 const std::vector<PolicyConfig>& policies) {
  const auto trace = generate(study_trace_config(seed));
  const auto spec = study_cluster();
  std::vector<SimReport> out;
  for (const auto& p : policies) out.push_back(hooks.run(trace, spec, p));
  return out;
}

PolicyConfig interval_policy(std::int64_t i) {
  return PolicyConfig{PolicyKind::kInterval, i, false};
}

const std::vector<PolicyConfig>& study_policies() {
  static const std::vector<PolicyConfig> policies = {
      PolicyConfig{PolicyKind::kPerIteration, 1, false}, interval_policy(10),
      interval_policy(50), interval_policy(100),
      PolicyConfig{PolicyKind::kStatic, 1, false}};
  return policies;
}

// ---------------------------------------------------------------------------
// Acceptance criteria

CheckResult check_golden(const Hooks& h) {
  return timed("A1", "golden analytic numbers, reference cluster", 1.0, [&](Notes& n) {
    const auto spec = reference_example_cluster();
    const Bytes GB = kGigabyte;
    if (h.mem_footprint(spec) != 1728 * GB) n.fail("mem_footprint != 1728 GB");
    const auto vol = h.data_volume(spec);
    if (vol.grad != 13824 * GB) n.fail("D_G != 13824 GB");
    if (vol.weight != 13824 * GB) n.fail("D_W != 13824 GB");
    if (vol.grad + vol.weight != 27648 * GB) n.fail("D_G + D_W != 27648 GB");

    const double ts = h.comm_time_static(spec, OptimizerVariant::kOffloaded).total();
    const double td = h.comm_time_dynamic(spec, OptimizerVariant::kOffloaded).total();
    if (std::fabs(ts - 0.26908) > kTimeTolerance) n.fail(fmt("T_static %.6f s", ts));
    if (std::fabs(td - 0.27316) > kTimeTolerance) n.fail(fmt("T_dynamic %.6f s", td));

    const double off = 100.0 * h.overhead_ratio(spec, OptimizerVariant::kOffloaded);
    const double hbm = 100.0 * h.overhead_ratio(spec, OptimizerVariant::kHbmOnly);
    if (std::fabs(off - 1.519) > kRatioTolerancePp) n.fail(fmt("offloaded %.4f %%", off));
    if (std::fabs(hbm - 1.538) > kRatioTolerancePp) n.fail(fmt("hbm-only %.4f %%", hbm));

    const double mw = h.migration_cost(1, spec, MigrationPayload::kWeights);
    const double mo = h.migration_cost(1, spec, MigrationPayload::kOptimizer);
    if (std::fabs(mw - 0.0675) > kMigrationTolerance) n.fail(fmt("weights %.7f s", mw));
    if (std::fabs(mo - 0.54) > kMigrationTolerance) n.fail(fmt("optimizer %.7f s", mo));
    return fmt("T %.5f/%.5f s", ts, td) + fmt(", overhead %.3f/%.3f %%", off, hbm);
  });
}

CheckResult check_scheduler(const Hooks& h) {
  return timed("A2", "scheduler equals listing transcription", 30.0, [&](Notes& n) {
    Rng rng(0xA2);
    for (int c = 0; c < kSchedulerCases; ++c) {
      const auto experts = uniform(rng, 1, 64);
      const auto total = uniform(rng, experts, 256);
      const auto [s, nodes] = split_slots(rng, total);
      const auto pop = fuzz_popularity(rng, experts);
      const auto placement = h.compute_placement({pop, nodes, s, experts});
      const auto want = oracle::placement_listing(pop, nodes, s);
      const auto counts = placement.replica_counts();
      const auto slots = placement.slots();
      const std::string where = "case " + std::to_string(c);
      if (!std::equal(counts.begin(), counts.end(), want.counts.begin(), want.counts.end())) {
        n.fail(where + ": counts differ from oracle");
        continue;
      }
      if (!std::equal(slots.begin(), slots.end(), want.placement.begin(), want.placement.end())) {
        n.fail(where + ": slots differ from oracle");
      }
      if (std::accumulate(counts.begin(), counts.end(), std::int64_t{0}) != total) {
        n.fail(where + ": sum r_i != sN");
      }
      if (std::any_of(counts.begin(), counts.end(), [](auto r) { return r < 1; })) {
        n.fail(where + ": r_i < 1");
      }
      if (!std::is_sorted(slots.begin(), slots.end())) {
        n.fail(where + ": classes not contiguous");
      }
    }
    return std::to_string(kSchedulerCases) + " cases";
  });
}

CheckResult check_volume(const Hooks& h) {
  return timed("A3", "planned bytes are s*N*G and s*N*W", 30.0, [&](Notes& n) {
    Rng rng(0xA3);
    for (int k = 0; k < kVolumeSpecs; ++k) {
      const auto nodes = uniform(rng, 1, 12);
      const auto s = uniform(rng, 1, 4);
      const auto experts = uniform(rng, 1, std::min<std::int64_t>(s * nodes, 64));
      auto spec = small_spec(nodes, s, experts);
      spec.grad_bytes = uniform(rng, 1, 5'000'000'000);
      spec.weight_bytes = uniform(rng, 1, 5'000'000'000);
      const Bytes want_grad = s * nodes * spec.grad_bytes;
      const Bytes want_weight = s * nodes * spec.weight_bytes;
      for (int c = 0; c < kVolumePlacementsPerSpec; ++c) {
        const auto slots = fuzz_slots(rng, s * nodes, experts);
        const auto placement = placement_from_slots(slots, spec);
        const auto gather = h.plan_grad_gather(placement, spec);
        const auto exchange = h.plan_grad_exchange(placement, spec, gather);
        const auto weight = h.plan_weight_scatter(placement, spec);
        const Bytes grad = oracle::sum_bytes(gather) + oracle::sum_bytes(exchange);
        if (grad != want_grad) {
          n.fail("spec " + std::to_string(k) + ": grad " + std::to_string(grad) +
                 " != " + std::to_string(want_grad));
        }
        if (oracle::sum_bytes(weight) != want_weight) {
          n.fail("spec " + std::to_string(k) + ": weight " +
                 std::to_string(oracle::sum_bytes(weight)) + " != " +
                 std::to_string(want_weight));
        }
      }
    }
    return std::to_string(kVolumeSpecs * kVolumePlacementsPerSpec) + " plans";
  });
}

CheckResult check_allreduce(const Hooks& h) {
  return timed("A4", "all-reduce mean and group registry", 30.0, [&](Notes& n) {
    Rng rng(0xA4);
    double worst = 0.0;
    for (int c = 0; c < kAllReduceCases; ++c) {
      const auto nodes = uniform(rng, 1, 16);
      const auto s = uniform(rng, 1, 4);
      const auto experts = uniform(rng, 1, std::min<std::int64_t>(s * nodes, 32));
      const auto spec = small_spec(nodes, s, experts);
      const auto slots = fuzz_slots(rng, s * nodes, experts);
      const auto placement = placement_from_slots(slots, spec);
      const auto width = static_cast<std::size_t>(uniform(rng, 1, 8));
      std::vector<std::vector<double>> values(slots.size(), std::vector<double>(width));
      for (auto& v : values) {
        for (auto& x : v) x = uniform_real(rng, 0.5, 1000.0);
      }
      const auto got = h.simulate_allreduce(h.plan_allreduce(placement, spec), values);
      const auto want = oracle::direct_mean(slots, values);
      if (got.size() != want.size()) {
        n.fail("case " + std::to_string(c) + ": shape");
        continue;
      }
      for (std::size_t j = 0; j < want.size(); ++j) {
        for (std::size_t k = 0; k < width; ++k) {
          const double err = std::fabs(got[j][k] - want[j][k]) / std::fabs(want[j][k]);
          worst = std::max(worst, err);
          if (!(err <= kMeanRelTolerance)) {
            n.fail("case " + std::to_string(c) + fmt(": rel err %.3g", err));
          }
        }
      }
    }

    for (std::int64_t nodes = 2; nodes <= 64; ++nodes) {
      const GroupRegistry registry(nodes);
      if (registry.size() != nodes * (nodes - 1) / 2 ||
          registry.size() != oracle::count_contiguous_groups(nodes)) {
        n.fail("registry size for N=" + std::to_string(nodes));
      }
      const auto groups = registry.materialize();
      const std::set<std::pair<std::int64_t, std::int64_t>> unique = [&] {
        std::set<std::pair<std::int64_t, std::int64_t>> u;
        for (const auto& g : groups) u.insert({g.first, g.last});
        return u;
      }();
      if (static_cast<std::int64_t>(unique.size()) != registry.size()) {
        n.fail("registry has duplicates for N=" + std::to_string(nodes));
      }
      for (int c = 0; c < 4; ++c) {
        const auto s = uniform(rng, 1, 4);
        const auto experts = uniform(rng, 1, std::min<std::int64_t>(s * nodes, 64));
        const auto spec = small_spec(nodes, s, experts);
        const auto pop = fuzz_popularity(rng, experts);
        const auto placement = h.compute_placement({pop, nodes, s, experts});
        for (const auto& cls : h.plan_allreduce(placement, spec).per_class) {
          const auto& ranks = cls.hosting_ranks;
          if (ranks.size() < 2) continue;
          for (std::size_t i = 1; i < ranks.size(); ++i) {
            if (ranks[i] != ranks[i - 1] + 1) {
              n.fail("non-contiguous group for class " + std::to_string(cls.expert_class));
              break;
            }
          }
          const RankInterval group{ranks.front(), ranks.back()};
          if (!registry.contains(group) || registry.at(registry.index_of(group)) != group) {
            n.fail("group missing from registry N=" + std::to_string(nodes));
          }
        }
      }
    }
    return fmt("%.0f cases, worst rel err %.2g", kAllReduceCases, worst);
  });
}

CheckResult check_gather(const Hooks& h) {
  return timed("A5", "gradient gather: local-first round-robin", 10.0, [&](Notes& n) {
    Rng rng(0xA5);
    for (int c = 0; c < kGatherCases; ++c) {
      const auto nodes = uniform(rng, 1, 32);
      const auto s = uniform(rng, 1, 4);
      const auto experts = uniform(rng, 1, std::min<std::int64_t>(s * nodes, 64));
      const auto spec = small_spec(nodes, s, experts);
      const auto slots = fuzz_slots(rng, s * nodes, experts);
      const auto placement = placement_from_slots(slots, spec);
      const auto tuples = h.plan_grad_gather(placement, spec);
      const std::string where = "case " + std::to_string(c);

      std::vector<std::set<std::int64_t>> hosts(experts);
      for (std::size_t j = 0; j < slots.size(); ++j) hosts[slots[j]].insert(j / s);

      std::vector<std::vector<int>> seen(nodes, std::vector<int>(experts, 0));
      std::vector<std::map<std::int64_t, int>> served(experts);
      for (const auto& t : tuples) {
        if (t.dst_rank < 0 || t.dst_rank >= nodes || t.expert_class < 0 ||
            t.expert_class >= experts) {
          n.fail(where + ": tuple out of range");
          continue;
        }
        ++seen[t.dst_rank][t.expert_class];
        const auto& h_e = hosts[t.expert_class];
        if (h_e.count(t.dst_rank)) {
          if (t.src_rank != t.dst_rank) n.fail(where + ": hosting destination not local");
        } else {
          if (!h_e.count(t.src_rank)) n.fail(where + ": source does not host class");
          ++served[t.expert_class][t.src_rank];
        }
        if (t.src_rank != oracle::round_robin_source(slots, s, nodes, t.expert_class,
                                                     t.dst_rank)) {
          n.fail(where + ": source differs from round-robin oracle");
        }
      }
      for (std::int64_t d = 0; d < nodes; ++d) {
        for (std::int64_t e = 0; e < experts; ++e) {
          if (seen[d][e] != 1) n.fail(where + ": not exactly one tuple per class");
        }
      }
      for (std::int64_t e = 0; e < experts; ++e) {
        int lo = INT_MAX;
        int hi = 0;
        for (auto host : hosts[e]) {
          const auto it = served[e].find(host);
          const int k = it == served[e].end() ? 0 : it->second;
          lo = std::min(lo, k);
          hi = std::max(hi, k);
        }
        if (hi - lo > 1) n.fail(where + ": remote sources unbalanced");
      }
    }
    return std::to_string(kGatherCases) + " placements";
  });
}

CheckResult check_drops(const Hooks& h) {
  return timed("A6", "drop ordering on spiky traces", 60.0, [&](Notes& n) {
    std::string summary;
    for (const auto seed : kStudySeeds) {
      const auto reports = run_study(h, seed, study_policies());
      std::vector<double> d;
      for (const auto& r : reports) d.push_back(r.aggregates.drop_pct());
      const std::string where = "seed " + std::to_string(seed);
      if (!(d[0] < d[1])) n.fail(where + fmt(": per-iteration %.2f >= interval-10 %.2f", d[0], d[1]));
      if (!(d[1] <= d[2] + kOrderingSlackPp)) n.fail(where + fmt(": interval-10 %.2f > interval-50 %.2f", d[1], d[2]));
      if (!(d[2] <= d[3] + kOrderingSlackPp)) n.fail(where + fmt(": interval-50 %.2f > interval-100 %.2f", d[2], d[3]));
      if (!(d[3] < d[4])) n.fail(where + fmt(": interval-100 %.2f >= static %.2f", d[3], d[4]));
      if (!(d[4] - d[0] >= kStaticMarginPp)) n.fail(where + fmt(": margin %.2f pp < %.0f", d[4] - d[0], kStaticMarginPp));
      if (!summary.empty()) summary += ", ";
      summary += fmt("%.1f/", d[0]) + fmt("%.1f %%", d[4]);
    }
    return "per-iteration/static drops " + summary;
  });
}

CheckResult check_latency(const Hooks& h) {
  return timed("A7", "latency spikes at rebalance only", 60.0, [&](Notes& n) {
    std::int64_t spikes = 0;
    for (const auto seed : kStudySeeds) {
      const auto reports = run_study(h, seed, study_policies());
      const std::string where = "seed " + std::to_string(seed);

      const auto& per = reports[0].records;
      double lo = per.front().total_s;
      double hi = per.front().total_s;
      for (const auto& r : per) {
        if (r.migration_s != 0.0) n.fail(where + ": per-iteration migration > 0");
        lo = std::min(lo, r.total_s);
        hi = std::max(hi, r.total_s);
      }
      if (hi != lo) n.fail(where + fmt(": per-iteration latency varies %.9g..%.9g", lo, hi));

      std::vector<double> means;
      for (std::size_t p = 1; p <= 3; ++p) {
        const auto& recs = reports[p].records;
        double quiet = 0.0;
        for (const auto& r : recs) {
          if (!r.rebalanced) quiet = std::max(quiet, r.total_s);
        }
        for (const auto& r : recs) {
          if (r.rebalanced && r.churn > 0) {
            ++spikes;
            if (!(r.total_s > quiet)) {
              n.fail(where + ": rebalance at t=" + std::to_string(r.iteration) +
                     " not above quiet latency");
            }
          }
        }
        means.push_back(reports[p].aggregates.mean_latency_s);
      }
      if (!(means[0] >= means[1] && means[1] >= means[2])) {
        n.fail(where + fmt(": mean latency interval-10 %.6g, -50 %.6g", means[0], means[1]) +
               fmt(", -100 %.6g", means[2]));
      }
    }
    if (spikes == 0) n.fail("no rebalance with churn > 0 observed");
    return std::to_string(spikes) + " rebalance spikes checked";
  });
}

CheckResult check_k_bound(const Hooks& h) {
  return timed("A8", "k-partition bound", 1.0, [&](Notes& n) {
    const auto spec = reference_example_cluster();
    const double dyn = h.comm_time_dynamic(spec, OptimizerVariant::kOffloaded).total();
    double prev = 0.0;
    for (const std::int64_t k : {1, 2, 4, 8}) {
      const double b = h.k_partition_bound(spec, k).total();
      if (b < prev) n.fail("bound decreases at k=" + std::to_string(k));
      if (k == 1 && !rel_close(b, dyn, kBoundRelTolerance)) {
        n.fail(fmt("k=1 bound %.12g != dynamic %.12g", b, dyn));
      }
      prev = b;
    }
    return fmt("k=8 bound %.4f s", prev);
  });
}

// ---------------------------------------------------------------------------
// Additional properties

ClusterSpec fuzz_cost_spec(Rng& rng) {
  ClusterSpec spec;
  spec.nodes = uniform(rng, 1, 4096);
  spec.slots_per_rank = uniform(rng, 1, 8);
  spec.expert_classes = uniform(rng, 1, std::min<std::int64_t>(spec.total_slots(), 256));
  spec.bw_pci = uniform_real(rng, 1e9, 100e9);
  spec.bw_net = uniform_real(rng, 1e9, 100e9);
  spec.grad_bytes = uniform(rng, 1, 10'000'000'000);
  spec.weight_bytes = uniform(rng, 1, 10'000'000'000);
  spec.optimizer_bytes = 8 * spec.weight_bytes;
  return spec;
}

CheckResult prop_closed_form(const Hooks& h) {
  return timed("P.cost", "closed forms agree with per-instance terms", 5.0, [&](Notes& n) {
    Rng rng(0xC0);
    for (int c = 0; c < 2000; ++c) {
      const auto spec = fuzz_cost_spec(rng);
      const auto want = oracle::closed_form_times(spec);
      const double ts = h.comm_time_static(spec, OptimizerVariant::kOffloaded).total();
      const double td = h.comm_time_dynamic(spec, OptimizerVariant::kOffloaded).total();
      if (!rel_close(ts, want.t_static_total, 1e-12)) n.fail(fmt("static %.15g vs %.15g", ts, want.t_static_total));
      if (!rel_close(td, want.t_dynamic_total, 1e-12)) n.fail(fmt("dynamic %.15g vs %.15g", td, want.t_dynamic_total));
      // dyn - static = (E - s) X / (N BW_net), exactly in real arithmetic.
      const double X = static_cast<double>(spec.grad_bytes + spec.weight_bytes);
      const double gap = static_cast<double>(spec.expert_classes - spec.slots_per_rank) * X /
                         (static_cast<double>(spec.nodes) * spec.bw_net);
      if (std::fabs((td - ts) - gap) > 1e-12 * td) n.fail(fmt("gap %.15g vs %.15g", td - ts, gap));
      // Both ratios share the numerator E - s, so the ordering needs E >= s.
      if (spec.total_slots() > spec.expert_classes && spec.expert_classes >= spec.slots_per_rank) {
        const double off = h.overhead_ratio(spec, OptimizerVariant::kOffloaded);
        const double hbm = h.overhead_ratio(spec, OptimizerVariant::kHbmOnly);
        if (spec.bw_net <= spec.bw_pci && hbm < off) n.fail(fmt("hbm %.6g < offloaded %.6g", hbm, off));
      }
      for (std::int64_t k = 1; k <= 16; k *= 2) {
        if (spec.nodes % k != 0 || spec.expert_classes % k != 0) continue;
        if (h.k_partition_bound(spec, k).total() < td * (1.0 - 1e-12)) {
          n.fail("bound below dynamic at k=" + std::to_string(k));
        }
      }
    }
    return std::string("2000 specs");
  });
}

CheckResult prop_plan_model(const Hooks& h) {
  return timed("P.plan", "planned per-rank times match the closed form", 30.0, [&](Notes& n) {
    Rng rng(0xD0);
    std::vector<ClusterSpec> specs;
    auto ref = reference_example_cluster();
    ref.nodes = 256;
    specs.push_back(ref);
    specs.push_back(study_cluster());
    for (int c = 0; c < 20; ++c) {
      const auto nodes = uniform(rng, 2, 48);
      const auto s = uniform(rng, 1, 4);
      auto spec = small_spec(nodes, s, uniform(rng, 1, std::min<std::int64_t>(s * nodes, 64)));
      spec.grad_bytes = uniform(rng, 1'000'000, 5'000'000'000);
      spec.weight_bytes = uniform(rng, 1'000'000, 5'000'000'000);
      specs.push_back(spec);
    }
    double worst = 0.0;
    for (const auto& spec : specs) {
      const auto pop = fuzz_popularity(rng, spec.expert_classes);
      const auto placement = h.compute_placement(
          {pop, spec.nodes, spec.slots_per_rank, spec.expert_classes});
      CommPlan plan;
      plan.nodes = spec.nodes;
      plan.expert_classes = spec.expert_classes;
      plan.grad_gather = h.plan_grad_gather(placement, spec);
      plan.grad_exchange = h.plan_grad_exchange(placement, spec, plan.grad_gather);
      plan.weight_scatter = h.plan_weight_scatter(placement, spec);
      const auto planned = plan_phase_times(plan_byte_totals(plan), spec);
      const auto model = h.comm_time_dynamic(spec, OptimizerVariant::kOffloaded);
      const double eg = std::fabs(planned.grad - model.grad) / model.grad;
      const double ew = std::fabs(planned.weight - model.weight) / model.weight;
      worst = std::max({worst, eg, ew});
      if (eg > kPlanModelTolerance || ew > kPlanModelTolerance) {
        n.fail("N=" + std::to_string(spec.nodes) + fmt(": grad err %.3g, weight err %.3g", eg, ew));
      }
    }
    return fmt("%.0f specs, worst rel err %.2g", static_cast<double>(specs.size()), worst);
  });
}

CheckResult prop_scheduler_steps(const Hooks&) {
  return timed("P.steps", "rounding correction terminates within 2E(X+1)+D steps", 10.0,
               [&](Notes& n) {
    // X is the initial excess over G*S and D the initial deficit. Between
    // two productive over-allocation steps every class can be visited at
    // most twice, hence the bound. The looser 2*s*N is not a bound: one
    // dominant class with E = G*S needs about E^2 steps.
    Rng rng(0xE0);
    std::int64_t max_steps = 0;
    std::int64_t over_2sn = 0;
    for (int c = 0; c < kSchedulerCases; ++c) {
      const auto experts = uniform(rng, 1, 64);
      const auto total = uniform(rng, experts, 256);
      const auto [s, nodes] = split_slots(rng, total);
      const auto pop = fuzz_popularity(rng, experts);
      const auto a = allocate_replicas({pop, nodes, s, experts});
      std::int64_t initial = 0;
      for (double g : a.goal) initial += static_cast<std::int64_t>(std::floor(std::max(g, 1.0)));
      const std::int64_t excess = std::max<std::int64_t>(0, initial - total);
      const std::int64_t deficit = std::max<std::int64_t>(0, total - initial);
      if (a.correction_steps > 2 * experts * (excess + 1) + deficit) {
        n.fail("case " + std::to_string(c) + ": " + std::to_string(a.correction_steps) + " steps");
      }
      max_steps = std::max(max_steps, a.correction_steps);
      if (a.correction_steps > 2 * total) ++over_2sn;
    }
    return "max " + std::to_string(max_steps) + " steps, " + std::to_string(over_2sn) +
           " cases above 2sN";
  });
}

CheckResult prop_walk_autocorrelation(const Hooks&) {
  return timed("P.autocorr", "walk traces are autocorrelated", 10.0, [&](Notes& n) {
    TraceGenConfig config;  // defaults, walk mode
    const auto trace = generate(config);
    double lowest = 1.0;
    double sum = 0.0;
    for (std::int64_t e = 0; e < trace.expert_classes; ++e) {
      std::vector<double> x;
      for (const auto& row : trace.rows) x.push_back(static_cast<double>(row.counts[e]));
      const std::size_t m = x.size() - 1;
      double ma = 0, mb = 0;
      for (std::size_t t = 0; t < m; ++t) {
        ma += x[t];
        mb += x[t + 1];
      }
      ma /= m;
      mb /= m;
      double sab = 0, saa = 0, sbb = 0;
      for (std::size_t t = 0; t < m; ++t) {
        sab += (x[t] - ma) * (x[t + 1] - mb);
        saa += (x[t] - ma) * (x[t] - ma);
        sbb += (x[t + 1] - mb) * (x[t + 1] - mb);
      }
      const double r = saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : 1.0;
      lowest = std::min(lowest, r);
      sum += r;
    }
    if (!(lowest > kAutocorrelationFloor)) n.fail(fmt("lowest lag-1 correlation %.3f", lowest));
    return fmt("lag-1 correlation min %.3f, mean %.3f", lowest,
               sum / static_cast<double>(trace.expert_classes));
  });
}

CheckResult prop_spike(const Hooks&) {
  return timed("P.spike", "spiky traces flip loads by >= 16x", 10.0, [&](Notes& n) {
    TraceGenConfig config;
    config.mode = TraceMode::kSpiky;
    config.experts = 32;
    config.iterations = 200;
    const auto trace = generate(config);
    // Only changes where the larger side is at least a fair share count, so
    // multinomial noise in the tail does not qualify.
    const double fair = static_cast<double>(config.tokens_per_batch) /
                        static_cast<double>(config.experts);
    double best = 0.0;
    for (std::int64_t e = 0; e < config.experts; ++e) {
      for (std::int64_t t = 0; t < trace.iterations(); ++t) {
        for (std::int64_t d = 1; d <= 2 && t + d < trace.iterations(); ++d) {
          const double a = static_cast<double>(trace.rows[t].counts[e]);
          const double b = static_cast<double>(trace.rows[t + d].counts[e]);
          if (std::max(a, b) < fair) continue;
          best = std::max(best, std::max(a, b) / std::max(1.0, std::min(a, b)));
        }
      }
    }
    if (best < kSpikeRatio) n.fail(fmt("largest 3-iteration change %.1fx", best));
    return fmt("largest 3-iteration change %.0fx", best);
  });
}

CheckResult prop_policy_replay(const Hooks& h) {
  return timed("P.replay", "policy placements follow their schedule", 20.0, [&](Notes& n) {
    const auto trace = generate(study_trace_config(kStudySeeds[0]));
    const auto spec = study_cluster();
    const auto uniform_counts = oracle::placement_listing(
        std::vector<std::int64_t>(spec.expert_classes, 1), spec.nodes, spec.slots_per_rank);

    const auto per = h.run(trace, spec, {PolicyKind::kPerIteration, 1, false});
    for (const auto& r : per.records) {
      const auto want = r.iteration == 0
                            ? uniform_counts.counts
                            : oracle::placement_listing(trace.rows[r.iteration - 1].counts,
                                                        spec.nodes, spec.slots_per_rank)
                                  .counts;
      if (r.replica_counts != want) {
        n.fail("per-iteration t=" + std::to_string(r.iteration) + " differs from replay");
      }
    }

    for (const std::int64_t i : {10, 50}) {
      const auto rep = h.run(trace, spec, interval_policy(i));
      for (std::size_t t = 1; t < rep.records.size(); ++t) {
        const auto& r = rep.records[t];
        const bool boundary = r.iteration % i == 0;
        if (r.rebalanced != boundary) {
          n.fail("interval-" + std::to_string(i) + " rebalance flag at t=" + std::to_string(t));
        }
        if (!boundary && r.replica_counts != rep.records[t - 1].replica_counts) {
          n.fail("interval-" + std::to_string(i) + " placement moved at t=" + std::to_string(t));
        }
        if ((r.migration_s > 0.0) != (boundary && r.churn > 0)) {
          n.fail("interval-" + std::to_string(i) + " migration at t=" + std::to_string(t));
        }
      }
    }

    const auto st = h.run(trace, spec, {PolicyKind::kStatic, 1, false});
    for (const auto& r : st.records) {
      if (r.replica_counts != uniform_counts.counts || r.migration_s != 0.0) {
        n.fail("static placement moved at t=" + std::to_string(r.iteration));
      }
    }
    return std::string("per-iteration, interval-10/50 and static replayed");
  });
}

CheckResult prop_conservation(const Hooks& h) {
  return timed("P.tokens", "tokens are conserved and totals add up", 20.0, [&](Notes& n) {
    const auto trace = generate(study_trace_config(kStudySeeds[1]));
    const auto spec = study_cluster();
    for (const auto& policy : study_policies()) {
      const auto rep = h.run(trace, spec, policy);
      for (const auto& r : rep.records) {
        const auto& row = trace.rows[r.iteration];
        const auto dropped = std::accumulate(r.dropped_per_class.begin(),
                                             r.dropped_per_class.end(), std::int64_t{0});
        if (r.assigned != row.total() || dropped != r.dropped || r.dropped > r.assigned) {
          n.fail(policy.label() + " t=" + std::to_string(r.iteration) + ": token count");
        }
        const double sum =
            r.compute_s + r.comm_grad_s + r.comm_weight_s + r.migration_s + r.metadata_s;
        if (sum != r.total_s) n.fail(policy.label() + ": total != sum of parts");
        if (r.survival < 0.0 || r.survival > 1.0) n.fail(policy.label() + ": survival range");
      }
      if (aggregate_records(rep.records) != rep.aggregates) {
        n.fail(policy.label() + ": aggregates not recomputable");
      }
    }
    return std::string("5 policies");
  });
}

}  // namespace

ClusterSpec study_cluster() {
  ClusterSpec spec;
  spec.nodes = 16;
  spec.slots_per_rank = 4;
  spec.expert_classes = 16;
  spec.bw_pci = 32e9;
  spec.bw_net = 12.5e9;
  spec.grad_bytes = 9'437'184;
  spec.weight_bytes = 9'437'184;
  spec.optimizer_bytes = 8 * 9'437'184;
  spec.tokens_per_batch = 32768;
  spec.capacity_factor = 1.0;
  return spec;
}

TraceGenConfig study_trace_config(std::uint64_t seed) {
  TraceGenConfig config;
  config.experts = 16;
  config.iterations = 2000;
  config.tokens_per_batch = 32768;
  config.mode = TraceMode::kSpiky;
  config.seed = seed;
  return config;
}

std::vector<CheckResult> run_acceptance(const Hooks& hooks, const Reporter& reporter) {
  std::vector<CheckResult> out;
  auto add = [&](CheckResult r) {
    if (reporter) reporter(r);
    out.push_back(std::move(r));
  };
  add(check_golden(hooks));
  add(check_scheduler(hooks));
  add(check_volume(hooks));
  add(check_allreduce(hooks));
  add(check_gather(hooks));
  add(check_drops(hooks));
  add(check_latency(hooks));
  add(check_k_bound(hooks));
  return out;
}

std::vector<CheckResult> run_properties(const Hooks& hooks, const Reporter& reporter) {
  std::vector<CheckResult> out;
  auto add = [&](CheckResult r) {
    if (reporter) reporter(r);
    out.push_back(std::move(r));
  };
  add(prop_closed_form(hooks));
  add(prop_plan_model(hooks));
  add(prop_scheduler_steps(hooks));
  add(prop_walk_autocorrelation(hooks));
  add(prop_spike(hooks));
  add(prop_policy_replay(hooks));
  add(prop_conservation(hooks));
  return out;
}

std::vector<CheckResult> run_all(const Hooks& hooks, const Reporter& reporter) {
  auto out = run_acceptance(hooks, reporter);
  auto more = run_properties(hooks, reporter);
  out.insert(out.end(), std::make_move_iterator(more.begin()),
             std::make_move_iterator(more.end()));
  return out;
}

std::string format_result(const CheckResult& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "[%s] %-9s %-52s %7.3fs  %s",
                r.passed ? "PASS" : "FAIL", r.id.c_str(), r.title.c_str(), r.seconds,
                r.detail.c_str());
  return buf;
}

}  // namespace exrep::verify
