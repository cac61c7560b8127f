// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#include "exrep/oracles.hpp"

#include <cmath>
#include <map>

namespace exrep::oracle {
namespace {

double vsum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

std::size_t argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

std::size_t argmin(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] < v[best]) best = i;
  }
  return best;
}

}  // namespace

ListingResult placement_listing(const std::vector<std::int64_t>& popularity_in,
                                std::int64_t world_size,
                                std::int64_t slots_per_rank) {
  const std::size_t E = popularity_in.size();
  const double G = static_cast<double>(world_size);
  const double S = static_cast<double>(slots_per_rank);

  std::vector<double> popularity(E);
  for (std::size_t i = 0; i < E; ++i) popularity[i] = static_cast<double>(popularity_in[i]);
  if (vsum(popularity) == 0.0) popularity.assign(E, 1.0);

  // goal = (popularity / sum(popularity)) * G * S
  const double total = vsum(popularity);
  std::vector<double> goal(E);
  for (std::size_t i = 0; i < E; ++i) goal[i] = (popularity[i] / total) * G * S;
  // exp_counts = floor(maximum(goal, [1] * E))
  std::vector<double> exp_counts(E);
  for (std::size_t i = 0; i < E; ++i) exp_counts[i] = std::floor(std::fmax(goal[i], 1.0));

  // diff = exp_counts - goal
  std::vector<double> diff(E);
  for (std::size_t i = 0; i < E; ++i) diff[i] = exp_counts[i] - goal[i];
  while (vsum(exp_counts) > G * S) {
    const auto i = argmax(diff);
    if (exp_counts[i] > 1) exp_counts[i] -= 1;
    diff[i] -= 1;
  }
  while (vsum(exp_counts) < G * S) {
    const auto i = argmin(diff);
    exp_counts[i] += 1;
    diff[i] += 1;
  }

  ListingResult out;
  for (std::size_t e = 0; e < E; ++e) {
    const auto count = static_cast<std::int64_t>(exp_counts[e]);
    out.counts.push_back(count);
    for (std::int64_t k = 0; k < count; ++k) out.placement.push_back(static_cast<ExpertId>(e));
  }
  return out;
}

std::vector<std::vector<double>> direct_mean(
    const std::vector<ExpertId>& slots,
    const std::vector<std::vector<double>>& values) {
  std::map<ExpertId, std::vector<double>> sums;
  std::map<ExpertId, double> counts;
  for (std::size_t j = 0; j < slots.size(); ++j) {
    auto& s = sums[slots[j]];
    if (s.empty()) s.assign(values[j].size(), 0.0);
    for (std::size_t k = 0; k < values[j].size(); ++k) s[k] += values[j][k];
    counts[slots[j]] += 1.0;
  }
  std::vector<std::vector<double>> out(slots.size());
  for (std::size_t j = 0; j < slots.size(); ++j) {
    out[j] = sums[slots[j]];
    for (auto& v : out[j]) v /= counts[slots[j]];
  }
  return out;
}

Bytes sum_bytes(const std::vector<TransferTuple>& tuples) {
  Bytes total = 0;
  for (const auto& t : tuples) total += t.bytes;
  return total;
}

std::int64_t round_robin_source(const std::vector<ExpertId>& slots,
                                std::int64_t slots_per_rank,
                                std::int64_t nodes, ExpertId expert,
                                std::int64_t destination) {
  std::vector<bool> hosts(nodes, false);
  for (std::size_t j = 0; j < slots.size(); ++j) {
    if (slots[j] == expert) hosts[static_cast<std::int64_t>(j) / slots_per_rank] = true;
  }
  if (hosts[destination]) return destination;
  std::vector<std::int64_t> candidates;
  std::int64_t position = 0;
  for (std::int64_t r = 0; r < nodes; ++r) {
    if (hosts[r]) candidates.push_back(r);
    else if (r < destination) ++position;
  }
  return candidates[position % static_cast<std::int64_t>(candidates.size())];
}

std::int64_t count_contiguous_groups(std::int64_t nodes) {
  std::int64_t count = 0;
  if (nodes <= 16) {
    for (std::uint32_t mask = 0; mask < (1u << nodes); ++mask) {
      if (__builtin_popcount(mask) < 2) continue;
      // Contiguous iff shifting out trailing zeros leaves 2^k - 1.
      const std::uint32_t bits = mask >> __builtin_ctz(mask);
      if ((bits & (bits + 1)) == 0) ++count;
    }
    return count;
  }
  for (std::int64_t a = 0; a < nodes; ++a) {
    for (std::int64_t b = a + 1; b < nodes; ++b) ++count;
  }
  return count;
}

ClosedForm closed_form_times(const ClusterSpec& spec) {
  const double N = static_cast<double>(spec.nodes);
  const double s = static_cast<double>(spec.slots_per_rank);
  const double E = static_cast<double>(spec.expert_classes);
  const double X = static_cast<double>(spec.grad_bytes + spec.weight_bytes);
  const double r = s * N / E;
  // Static: s slots, each moving (r-1)/r of an instance over the network
  // and 1/r over the host link.
  const double t_static = s * ((r - 1.0) / r) * X / spec.bw_net + s * (1.0 / r) * X / spec.bw_pci;
  // Dynamic: (sN - s) remote instance shards plus E local shards, X/N each.
  const double t_dynamic = (s * N - s) * (X / N) / spec.bw_net + E * (X / N) / spec.bw_pci;
  return {t_static, t_dynamic};
}

}  // namespace exrep::oracle
