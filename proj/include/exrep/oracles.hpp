// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Reference computations that share no code path with the library modules
// they check. Used by the unit tests and by `exrep verify`.

#include <cstdint>
#include <vector>

#include "exrep/commplan.hpp"
#include "exrep/model.hpp"

namespace exrep::oracle {

// Line-by-line transcription of the placement listing: float counts,
// sums recomputed on every loop test, numpy argmax/argmin semantics.
struct ListingResult {
  std::vector<std::int64_t> counts;
  std::vector<ExpertId> placement;
};
ListingResult placement_listing(const std::vector<std::int64_t>& popularity,
                                std::int64_t world_size,
                                std::int64_t slots_per_rank);

// Per-slot mean of each class's instance vectors, computed with a single
// left-to-right pass over the slots of the class.
std::vector<std::vector<double>> direct_mean(
    const std::vector<ExpertId>& slots,
    const std::vector<std::vector<double>>& values);

Bytes sum_bytes(const std::vector<TransferTuple>& tuples);

// sorted(hosts)[k] where k counts non-hosting ranks below `destination`,
// found by scanning ranks one at a time.
std::int64_t round_robin_source(const std::vector<ExpertId>& slots,
                                std::int64_t slots_per_rank,
                                std::int64_t nodes, ExpertId expert,
                                std::int64_t destination);

// Contiguous intervals of length >= 2 found by enumerating all subsets of
// ranks {0..N-1} for small N, otherwise by nested loops.
std::int64_t count_contiguous_groups(std::int64_t nodes);

// Closed-form per-rank times written out term by term, independent of the
// costmodel helpers.
struct ClosedForm {
  double t_static_total;
  double t_dynamic_total;
};
ClosedForm closed_form_times(const ClusterSpec& spec);

}  // namespace exrep::oracle
