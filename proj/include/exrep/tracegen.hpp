// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "exrep/model.hpp"

namespace exrep {

enum class TraceMode { kWalk, kSpiky, kUniform };

const char* trace_mode_name(TraceMode mode) noexcept;
TraceMode parse_trace_mode(const std::string& name);

// Latent log-weights start as N(0, skew^2) draws and follow a Gaussian random
// walk with step `volatility`. Each iteration's counts are a multinomial draw
// of tokens_per_batch over softmax(weights). Spiky mode additionally swaps
// the heaviest weight with a uniformly chosen other one with probability
// `spike_probability` per iteration.
//
// The engine is mt19937_64; normals, binomials and the swap index come from
// Boost.Random, whose algorithms are fixed in headers, so a seed reproduces
// the same trace on any platform with the same Boost release.
struct TraceGenConfig {
  std::int64_t experts = 16;
  std::int64_t iterations = 2000;
  std::int64_t tokens_per_batch = 32768;
  TraceMode mode = TraceMode::kWalk;
  double volatility = 0.05;
  double spike_probability = 0.05;
  double skew = 1.5;
  std::uint64_t seed = 1;
};

// Throws kInvalidConfig.
void validate_trace_config(const TraceGenConfig& config);

Trace generate(const TraceGenConfig& config);

void write_trace_csv(const Trace& trace, std::ostream& out);
// `source` names the stream in error messages.
Trace read_trace_csv(std::istream& in, const std::string& source = "<stream>");

void save_trace(const Trace& trace, const std::filesystem::path& path);
Trace load_trace(const std::filesystem::path& path);

}  // namespace exrep
