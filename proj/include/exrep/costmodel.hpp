// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "exrep/model.hpp"

namespace exrep {

// Where the optimizer state lives. kHbmOnly removes the host-link hop.
enum class OptimizerVariant { kOffloaded, kHbmOnly };

const char* variant_name(OptimizerVariant variant) noexcept;

struct PhaseCost {
  Seconds grad = 0.0;
  Seconds weight = 0.0;

  Seconds total() const noexcept { return grad + weight; }
};

struct DataVolume {
  Bytes grad = 0;
  Bytes weight = 0;
};

struct CostReport {
  Bytes mem_footprint_bytes = 0;
  Bytes data_grad_bytes = 0;
  Bytes data_weight_bytes = 0;
  Seconds t_grad_static = 0.0;
  Seconds t_weight_static = 0.0;
  Seconds t_grad_dynamic = 0.0;
  Seconds t_weight_dynamic = 0.0;
  double overhead_ratio = 0.0;
  OptimizerVariant variant = OptimizerVariant::kOffloaded;
};

// E*O, identical for static and decoupled optimizer sharding.
Bytes mem_footprint(const ClusterSpec& spec);

// D_G = s*N*G and D_W = s*N*W for either design.
DataVolume data_volume(const ClusterSpec& spec);

// Per-rank time of the static baseline (r = sN/E replicas per class, used as
// a real number when it is not integral):
//   (E/N) X/BW_pci + ((sN - E)/N) X/BW_net
PhaseCost comm_time_static(const ClusterSpec& spec,
                           OptimizerVariant variant = OptimizerVariant::kOffloaded);

// Per-rank time with the optimizer sharded over all N ranks:
//   (E/N) X/BW_pci + ((sN - s)/N) X/BW_net
// Independent of how replicas are distributed.
PhaseCost comm_time_dynamic(const ClusterSpec& spec,
                            OptimizerVariant variant = OptimizerVariant::kOffloaded);

// Relative extra time of the dynamic design over the static one:
//   offloaded: (E - s) / (sN - E(1 - BW_net/BW_pci))
//   hbm-only:  (E - s) / (sN - E)
// +inf when the static time is zero but the dynamic one is not.
double overhead_ratio(const ClusterSpec& spec, OptimizerVariant variant);

// Upper bound on the per-rank time when the optimizer is split into k groups
// of N/k ranks, each owning E/k classes. Throws kInvalidK unless k >= 1 and
// k divides both N and E.
PhaseCost k_partition_bound(const ClusterSpec& spec, std::int64_t k);

enum class MigrationPayload { kWeights, kOptimizer, kWeightsAndOptimizer };

// count * bytes(payload) / BW_net.
Seconds migration_cost(std::int64_t experts_moved, const ClusterSpec& spec,
                       MigrationPayload payload);
Seconds migration_cost(std::int64_t experts_moved, const ClusterSpec& spec,
                       bool include_optimizer);

CostReport cost_report(const ClusterSpec& spec,
                       OptimizerVariant variant = OptimizerVariant::kOffloaded);

}  // namespace exrep
