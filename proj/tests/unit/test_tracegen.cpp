// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "exrep/error.hpp"
#include "exrep/tracegen.hpp"
#include "exrep/verify.hpp"

namespace exrep {
namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

Trace parse(const std::string& text) {
  std::istringstream in(text);
  return read_trace_csv(in, "t.csv");
}

std::string to_csv(const Trace& t) {
  std::ostringstream out;
  write_trace_csv(t, out);
  return out.str();
}

TEST(Generate, UniformRowsSumExactly) {
  TraceGenConfig c;
  c.experts = 4;
  c.iterations = 300;
  c.tokens_per_batch = 400;
  c.mode = TraceMode::kUniform;
  const auto t = generate(c);
  ASSERT_EQ(t.iterations(), 300);
  std::vector<double> mean(4, 0.0);
  for (const auto& row : t.rows) {
    ASSERT_EQ(row.total(), 400);
    for (int i = 0; i < 4; ++i) mean[i] += static_cast<double>(row.counts[i]) / 300.0;
  }
  for (double m : mean) EXPECT_NEAR(m, 100.0, 3.0);
}

TEST(Generate, EveryModeConservesTokens) {
  for (auto mode : {TraceMode::kWalk, TraceMode::kSpiky, TraceMode::kUniform}) {
    TraceGenConfig c;
    c.experts = 7;
    c.iterations = 100;
    c.tokens_per_batch = 12345;
    c.mode = mode;
    for (const auto& row : generate(c).rows) ASSERT_EQ(row.total(), 12345);
  }
}

TEST(Generate, ZeroVolatilityWalkIsStationary) {
  TraceGenConfig c;
  c.experts = 8;
  c.iterations = 400;
  c.volatility = 0.0;
  const auto t = generate(c);
  // Only multinomial noise: first and second halves agree per class.
  for (int i = 0; i < 8; ++i) {
    double a = 0, b = 0;
    for (int k = 0; k < 200; ++k) a += static_cast<double>(t.rows[k].counts[i]);
    for (int k = 200; k < 400; ++k) b += static_cast<double>(t.rows[k].counts[i]);
    EXPECT_NEAR(a / 200.0, b / 200.0, 5.0 * std::sqrt(std::max(a, 200.0) / 200.0) + 1.0);
  }
}

TEST(Generate, SpikyFlipsWithinThreeIterations) {
  TraceGenConfig c;
  c.experts = 32;
  c.iterations = 200;
  c.mode = TraceMode::kSpiky;
  const auto t = generate(c);
  const double fair = static_cast<double>(c.tokens_per_batch) / 32.0;
  double best = 0.0;
  for (std::int64_t k = 0; k + 2 < t.iterations(); ++k) {
    for (int i = 0; i < 32; ++i) {
      const auto lo = std::min(t.rows[k].counts[i], t.rows[k + 2].counts[i]);
      const auto hi = std::max(t.rows[k].counts[i], t.rows[k + 2].counts[i]);
      if (static_cast<double>(hi) < fair) continue;
      best = std::max(best, static_cast<double>(hi) / static_cast<double>(std::max<std::int64_t>(lo, 1)));
    }
  }
  EXPECT_GE(best, 16.0);
}

TEST(Generate, Deterministic) {
  TraceGenConfig c;
  c.mode = TraceMode::kSpiky;
  c.iterations = 100;
  c.seed = 42;
  EXPECT_EQ(to_csv(generate(c)), to_csv(generate(c)));
  auto d = c;
  d.seed = 43;
  EXPECT_NE(to_csv(generate(c)), to_csv(generate(d)));
}

TEST(Generate, InvalidConfig) {
  auto bad = [](auto mutate) {
    TraceGenConfig c;
    mutate(c);
    return code_of([&] { generate(c); });
  };
  EXPECT_EQ(bad([](TraceGenConfig& c) { c.experts = 0; }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(bad([](TraceGenConfig& c) { c.iterations = 0; }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(bad([](TraceGenConfig& c) { c.volatility = -1; }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(bad([](TraceGenConfig& c) { c.spike_probability = 1.5; }),
            ErrorCode::kInvalidConfig);
  EXPECT_EQ(code_of([] { parse_trace_mode("bursty"); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(parse_trace_mode("spiky"), TraceMode::kSpiky);
}

TEST(Csv, RoundTrip) {
  TraceGenConfig c;
  c.experts = 5;
  c.iterations = 50;
  c.mode = TraceMode::kSpiky;
  const auto t = generate(c);
  EXPECT_EQ(parse(to_csv(t)), t);

  const auto path = std::filesystem::temp_directory_path() / "exrep_roundtrip.csv";
  save_trace(t, path);
  EXPECT_EQ(load_trace(path), t);
  std::filesystem::remove(path);
}

TEST(Csv, Errors) {
  EXPECT_EQ(code_of([] { parse("iter,e0,e1\n0,1,-2\n"); }), ErrorCode::kParseError);
  std::string header = "iter";
  std::string row = "0";
  for (int i = 0; i < 16; ++i) header += ",e" + std::to_string(i);
  for (int i = 0; i < 15; ++i) row += ",1";
  EXPECT_EQ(code_of([&] { parse(header + "\n" + row + "\n"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { parse("iter,e0\n0,x\n"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { parse("iter,e0\n1,4\n"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { parse("step,e0\n0,1\n"); }), ErrorCode::kSchemaError);
  EXPECT_EQ(code_of([] { parse("iter,e1\n0,1\n"); }), ErrorCode::kSchemaError);
  EXPECT_EQ(code_of([] { parse(""); }), ErrorCode::kSchemaError);
  EXPECT_EQ(code_of([] { load_trace("/nonexistent/trace.csv"); }), ErrorCode::kIo);
  try {
    parse("iter,e0,e1\n0,1,2\n1,1,-2\n");
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("t.csv:3"), std::string::npos) << e.what();
  }
}

TEST(Csv, ShippedTracesMatchGenerator) {
  for (auto seed : verify::kStudySeeds) {
    const auto path = std::filesystem::path(EXREP_DATA_DIR) / "traces" /
                      ("spiky_seed" + std::to_string(seed) + ".csv");
    ASSERT_TRUE(std::filesystem::exists(path)) << path;
    EXPECT_EQ(to_csv(load_trace(path)), to_csv(generate(verify::study_trace_config(seed))));
  }
}

}  // namespace
}  // namespace exrep
