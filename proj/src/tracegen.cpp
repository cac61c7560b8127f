// Copyright 2026 The exrep Authors
// SPDX-License-Identifier: Apache-2.0

#include "exrep/tracegen.hpp"

#include <algorithm>
#include <charconv>
#include <climits>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/binomial_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "exrep/error.hpp"

namespace exrep {
namespace {

using Engine = boost::random::mt19937_64;

std::vector<double> softmax(const std::vector<double>& weights) {
  const double top = *std::max_element(weights.begin(), weights.end());
  std::vector<double> p(weights.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    p[i] = std::exp(weights[i] - top);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

// Multinomial draw as a chain of conditional binomials.
std::vector<std::int64_t> multinomial(std::int64_t tokens,
                                      const std::vector<double>& probs,
                                      Engine& engine) {
  std::vector<std::int64_t> counts(probs.size(), 0);
  std::int64_t remaining = tokens;
  double mass = 1.0;
  for (std::size_t i = 0; i + 1 < probs.size() && remaining > 0; ++i) {
    const double p = mass > 0.0 ? probs[i] / mass : 1.0;
    std::int64_t x = 0;
    if (p >= 1.0) {
      x = remaining;
    } else if (p > 0.0) {
      boost::random::binomial_distribution<int, double> binomial(
          static_cast<int>(remaining), p);
      x = binomial(engine);
    }
    counts[i] = x;
    remaining -= x;
    mass -= probs[i];
  }
  counts.back() += remaining;
  return counts;
}

[[noreturn]] void parse_error(const std::string& source, std::size_t line,
                              const std::string& what) {
  throw Error(ErrorCode::kParseError,
              source + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

const char* trace_mode_name(TraceMode mode) noexcept {
  switch (mode) {
    case TraceMode::kWalk: return "walk";
    case TraceMode::kSpiky: return "spiky";
    case TraceMode::kUniform: return "uniform";
  }
  return "unknown";
}

TraceMode parse_trace_mode(const std::string& name) {
  if (name == "walk") return TraceMode::kWalk;
  if (name == "spiky") return TraceMode::kSpiky;
  if (name == "uniform") return TraceMode::kUniform;
  throw Error(ErrorCode::kInvalidConfig, "unknown trace mode '" + name + "'");
}

void validate_trace_config(const TraceGenConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kInvalidConfig, what);
  };
  require(c.experts >= 1, "experts >= 1");
  require(c.iterations >= 1, "iterations >= 1");
  require(c.tokens_per_batch >= 0 && c.tokens_per_batch <= INT_MAX,
          "tokens_per_batch in [0, 2^31)");
  require(c.volatility >= 0.0 && std::isfinite(c.volatility), "volatility >= 0");
  require(c.spike_probability >= 0.0 && c.spike_probability <= 1.0,
          "spike_probability in [0, 1]");
  require(c.skew >= 0.0 && std::isfinite(c.skew), "skew >= 0");
}

Trace generate(const TraceGenConfig& config) {
  validate_trace_config(config);
  Engine engine(config.seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  boost::random::bernoulli_distribution<double> spike(config.spike_probability);

  const auto experts = static_cast<std::size_t>(config.experts);
  std::vector<double> weights(experts, 0.0);
  if (config.mode != TraceMode::kUniform) {
    for (auto& w : weights) w = config.skew * normal(engine);
  }

  Trace trace;
  trace.expert_classes = config.experts;
  trace.tokens_per_batch = config.tokens_per_batch;
  trace.rows.reserve(static_cast<std::size_t>(config.iterations));
  for (std::int64_t t = 0; t < config.iterations; ++t) {
    if (t > 0 && config.mode != TraceMode::kUniform) {
      for (auto& w : weights) w += config.volatility * normal(engine);
      if (config.mode == TraceMode::kSpiky && experts > 1 && spike(engine)) {
        const auto top = static_cast<std::size_t>(
            std::max_element(weights.begin(), weights.end()) - weights.begin());
        boost::random::uniform_int_distribution<std::size_t> pick(0, experts - 2);
        auto other = pick(engine);
        if (other >= top) ++other;
        std::swap(weights[top], weights[other]);
      }
    }
    trace.rows.push_back(
        {t, multinomial(config.tokens_per_batch, softmax(weights), engine)});
  }
  return trace;
}

void write_trace_csv(const Trace& trace, std::ostream& out) {
  out << "iter";
  for (std::int64_t e = 0; e < trace.expert_classes; ++e) out << ",e" << e;
  out << '\n';
  for (const auto& row : trace.rows) {
    out << row.iteration;
    for (auto c : row.counts) out << ',' << c;
    out << '\n';
  }
}

Trace read_trace_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kSchemaError, source + ": missing header line");
  }
  const auto header = split(trim(line));
  if (header.size() < 2 || trim(header[0]) != "iter") {
    throw Error(ErrorCode::kSchemaError,
                source + ": header must be iter,e0,e1,...");
  }
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (trim(header[i]) != "e" + std::to_string(i - 1)) {
      throw Error(ErrorCode::kSchemaError,
                  source + ": header column " + std::to_string(i) +
                      " must be e" + std::to_string(i - 1));
    }
  }

  Trace trace;
  trace.expert_classes = static_cast<std::int64_t>(header.size() - 1);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto fields = split(body);
    if (fields.size() != header.size()) {
      parse_error(source, line_no,
                  "expected " + std::to_string(header.size()) + " values, got " +
                      std::to_string(fields.size()));
    }
    std::vector<std::int64_t> values(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto f = trim(fields[i]);
      const auto* end = f.data() + f.size();
      const auto [ptr, ec] = std::from_chars(f.data(), end, values[i]);
      if (ec != std::errc() || ptr != end || f.empty()) {
        parse_error(source, line_no, "'" + std::string(f) + "' is not an integer");
      }
      if (values[i] < 0) parse_error(source, line_no, "negative value");
    }
    const auto expected = static_cast<std::int64_t>(trace.rows.size());
    if (values[0] != expected) {
      parse_error(source, line_no,
                  "iteration " + std::to_string(values[0]) + ", expected " +
                      std::to_string(expected));
    }
    PopularityVector row{values[0], {values.begin() + 1, values.end()}};
    trace.tokens_per_batch = std::max(trace.tokens_per_batch, row.total());
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

void save_trace(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write_trace_csv(trace, out);
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

Trace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open trace " + path.string());
  return read_trace_csv(in, path.string());
}

}  // namespace exrep
