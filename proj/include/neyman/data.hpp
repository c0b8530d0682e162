#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "neyman/core.hpp"
#include "neyman/estimators.hpp"
#include "neyman/rng.hpp"

namespace neyman {

// IO and content problems in data files; the CLI maps this to a data
// error, distinct from usage errors.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t comma = line.find(',', pos);
    if (comma == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return out;
}

inline double parse_csv_double(const std::string& field,
                               const std::string& path, std::size_t lineno) {
  char* end = nullptr;
  double v = std::strtod(field.c_str(), &end);
  if (end == field.c_str() || *end != '\0' || !std::isfinite(v)) {
    throw DataError(path + ":" + std::to_string(lineno) +
                    ": expected a finite number, got '" + field + "'");
  }
  return v;
}

inline std::uint8_t parse_csv_binary(const std::string& field,
                                     const std::string& path,
                                     std::size_t lineno) {
  if (field == "0") return 0;
  if (field == "1") return 1;
  throw DataError(path + ":" + std::to_string(lineno) +
                  ": expected 0 or 1, got '" + field + "'");
}

// Reads all lines, tolerating a trailing newline and CRLF endings.
inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open file: " + path);
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// Schedule files: header "y1,y0", one row per unit.
inline OutcomeSchedule load_schedule_csv(const std::string& path) {
  auto lines = detail::read_lines(path);
  if (lines.empty() || lines[0] != "y1,y0") {
    throw DataError(path + ":1: expected header 'y1,y0'");
  }
  std::vector<double> y1, y0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty() && i + 1 == lines.size()) break;
    auto fields = detail::split_csv_line(lines[i]);
    if (fields.size() != 2) {
      throw DataError(path + ":" + std::to_string(i + 1) +
                      ": expected 2 fields, got " +
                      std::to_string(fields.size()));
    }
    y1.push_back(detail::parse_csv_double(fields[0], path, i + 1));
    y0.push_back(detail::parse_csv_double(fields[1], path, i + 1));
  }
  if (y1.empty()) {
    throw DataError(path + ": no data rows");
  }
  return OutcomeSchedule(std::move(y1), std::move(y0));
}

inline void save_schedule_csv(const OutcomeSchedule& sched,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot open file for writing: " + path);
  }
  out << "y1,y0\n";
  for (std::size_t t = 0; t < sched.size(); ++t) {
    out << detail::format_double(sched.y1(t)) << ','
        << detail::format_double(sched.y0(t)) << '\n';
  }
  if (!out) {
    throw DataError("write failed: " + path);
  }
}

// Single observed-outcome column: header "y". Used as the base for
// imputing a full schedule when only one outcome per unit was recorded.
inline std::vector<double> load_observed_csv(const std::string& path) {
  auto lines = detail::read_lines(path);
  if (lines.empty() || lines[0] != "y") {
    throw DataError(path + ":1: expected header 'y'");
  }
  std::vector<double> y;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty() && i + 1 == lines.size()) break;
    auto fields = detail::split_csv_line(lines[i]);
    if (fields.size() != 1) {
      throw DataError(path + ":" + std::to_string(i + 1) +
                      ": expected 1 field, got " +
                      std::to_string(fields.size()));
    }
    y.push_back(detail::parse_csv_double(fields[0], path, i + 1));
  }
  if (y.empty()) {
    throw DataError(path + ": no data rows");
  }
  return y;
}

// Trace files: header "p,z,y", one row per round in order.
inline Trace load_trace_csv(const std::string& path) {
  auto lines = detail::read_lines(path);
  if (lines.empty() || lines[0] != "p,z,y") {
    throw DataError(path + ":1: expected header 'p,z,y'");
  }
  Trace trace;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty() && i + 1 == lines.size()) break;
    auto fields = detail::split_csv_line(lines[i]);
    if (fields.size() != 3) {
      throw DataError(path + ":" + std::to_string(i + 1) +
                      ": expected 3 fields, got " +
                      std::to_string(fields.size()));
    }
    double p = detail::parse_csv_double(fields[0], path, i + 1);
    if (!(p > 0.0 && p < 1.0)) {
      throw DataError(path + ":" + std::to_string(i + 1) +
                      ": probability out of open interval (0,1)");
    }
    trace.p.push_back(p);
    trace.z.push_back(detail::parse_csv_binary(fields[1], path, i + 1));
    trace.y.push_back(detail::parse_csv_double(fields[2], path, i + 1));
  }
  if (trace.p.empty()) {
    throw DataError(path + ": no data rows");
  }
  return trace;
}

inline void save_trace_csv(const Trace& trace, const std::string& path) {
  trace.validate();
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot open file for writing: " + path);
  }
  out << "p,z,y\n";
  for (std::size_t t = 0; t < trace.size(); ++t) {
    out << detail::format_double(trace.p[t]) << ','
        << static_cast<int>(trace.z[t]) << ','
        << detail::format_double(trace.y[t]) << '\n';
  }
  if (!out) {
    throw DataError("write failed: " + path);
  }
}

// Builds a full potential-outcome table from one observed outcome column by
// imposing a constant effect plus seeded Gaussian noise:
// y1[t] = base[t] + tau + noise_t, y0[t] = base[t].
inline OutcomeSchedule impute_schedule(const std::vector<double>& base,
                                       double tau, double sigma,
                                       std::uint64_t seed) {
  if (base.empty()) {
    throw std::invalid_argument("impute_schedule: empty base column");
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma) || !std::isfinite(tau)) {
    throw std::invalid_argument("impute_schedule: tau and sigma must be finite, sigma >= 0");
  }
  SplitMix64 rng(seed);
  std::vector<double> y1(base.size());
  for (std::size_t t = 0; t < base.size(); ++t) {
    y1[t] = base[t] + tau + (sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0);
  }
  return OutcomeSchedule(std::move(y1), base);
}

// Concatenates k copies of the schedule; preserves all per-unit moments.
inline OutcomeSchedule replicate_schedule(const OutcomeSchedule& sched,
                                          std::size_t k) {
  if (k == 0) {
    throw std::invalid_argument("replicate_schedule: k must be >= 1");
  }
  std::vector<double> y1, y0;
  y1.reserve(sched.size() * k);
  y0.reserve(sched.size() * k);
  for (std::size_t i = 0; i < k; ++i) {
    y1.insert(y1.end(), sched.treated().begin(), sched.treated().end());
    y0.insert(y0.end(), sched.control().begin(), sched.control().end());
  }
  return OutcomeSchedule(std::move(y1), std::move(y0));
}

// Affinely maps the pooled outcome range onto [0,1]; both arms share one
// map so their relative scale survives. A constant table maps to 0.5.
inline OutcomeSchedule normalize_schedule(const OutcomeSchedule& sched) {
  if (sched.empty()) {
    throw std::invalid_argument("normalize_schedule: empty schedule");
  }
  double lo = sched.y1(0), hi = sched.y1(0);
  for (std::size_t t = 0; t < sched.size(); ++t) {
    for (double v : {sched.y1(t), sched.y0(t)}) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  std::vector<double> y1(sched.size()), y0(sched.size());
  if (hi == lo) {
    for (std::size_t t = 0; t < sched.size(); ++t) y1[t] = y0[t] = 0.5;
  } else {
    double span = hi - lo;
    for (std::size_t t = 0; t < sched.size(); ++t) {
      y1[t] = (sched.y1(t) - lo) / span;
      y0[t] = (sched.y0(t) - lo) / span;
    }
  }
  return OutcomeSchedule(std::move(y1), std::move(y0));
}

// Swaps the two arms for the first n units. Applying it twice with the
// same n is the identity; n = T exchanges the roles of the arms entirely.
inline OutcomeSchedule flip_prefix(const OutcomeSchedule& sched,
                                   std::size_t n) {
  if (n > sched.size()) {
    throw std::invalid_argument("flip_prefix: n exceeds horizon");
  }
  std::vector<double> y1 = sched.treated();
  std::vector<double> y0 = sched.control();
  for (std::size_t t = 0; t < n; ++t) std::swap(y1[t], y0[t]);
  return OutcomeSchedule(std::move(y1), std::move(y0));
}

// Seeded Fisher-Yates permutation of unit order; (y1,y0) pairs move
// together so only arrival order changes, never the population.
inline OutcomeSchedule shuffle_schedule(const OutcomeSchedule& sched,
                                        std::uint64_t seed) {
  std::vector<double> y1 = sched.treated();
  std::vector<double> y0 = sched.control();
  SplitMix64 rng(seed);
  for (std::size_t i = sched.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next() % i);
    std::swap(y1[i - 1], y1[j]);
    std::swap(y0[i - 1], y0[j]);
  }
  return OutcomeSchedule(std::move(y1), std::move(y0));
}

namespace detail {

inline double take_param(std::map<std::string, double>& params,
                         const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  double v = it->second;
  params.erase(it);
  return v;
}

inline void reject_leftover(const std::map<std::string, double>& params,
                            const std::string& kind) {
  if (!params.empty()) {
    throw SpecError("gen_synthetic: unknown parameter '" +
                    params.begin()->first + "' for kind '" + kind + "'");
  }
}

}  // namespace detail

// Synthetic schedule families used throughout the test harness:
//   iid-scaled:      y0 ~ U[a,b] iid, y1 = lambda*y0   (a=0.25, b=1, lambda=2)
//   etc-adversarial: block schedule; units up to t0 have outcomes
//                    (head_y1, head_y0), the rest (tail_y1, tail_y0);
//                    defaults t0=T/4, head=(1,2), tail=(2,1)
//   constant-effect: y0 ~ U[a,b] iid, y1 = y0 + tau    (a=0, b=1, tau=0.5)
inline OutcomeSchedule gen_synthetic(const std::string& kind, std::size_t T,
                                     std::uint64_t seed,
                                     std::map<std::string, double> params = {}) {
  if (T == 0) {
    throw std::invalid_argument("gen_synthetic: horizon must be >= 1");
  }
  SplitMix64 rng(seed);
  std::vector<double> y1(T), y0(T);

  if (kind == "iid-scaled") {
    double a = detail::take_param(params, "a", 0.25);
    double b = detail::take_param(params, "b", 1.0);
    double lambda = detail::take_param(params, "lambda", 2.0);
    detail::reject_leftover(params, kind);
    if (!(b >= a)) throw SpecError("gen_synthetic: need b >= a");
    if (!(lambda > 0.0)) throw SpecError("gen_synthetic: need lambda > 0");
    for (std::size_t t = 0; t < T; ++t) {
      y0[t] = a + (b - a) * rng.uniform01();
      y1[t] = lambda * y0[t];
    }
  } else if (kind == "etc-adversarial") {
    double t0_raw = detail::take_param(
        params, "t0", std::floor(static_cast<double>(T) / 4.0));
    double head_y1 = detail::take_param(params, "head_y1", 1.0);
    double head_y0 = detail::take_param(params, "head_y0", 2.0);
    double tail_y1 = detail::take_param(params, "tail_y1", 2.0);
    double tail_y0 = detail::take_param(params, "tail_y0", 1.0);
    detail::reject_leftover(params, kind);
    if (!(t0_raw >= 0.0) || t0_raw > static_cast<double>(T) ||
        t0_raw != std::floor(t0_raw)) {
      throw SpecError("gen_synthetic: t0 must be an integer in [0, T]");
    }
    std::size_t t0 = static_cast<std::size_t>(t0_raw);
    for (std::size_t t = 0; t < T; ++t) {
      y1[t] = (t < t0) ? head_y1 : tail_y1;
      y0[t] = (t < t0) ? head_y0 : tail_y0;
    }
  } else if (kind == "constant-effect") {
    double a = detail::take_param(params, "a", 0.0);
    double b = detail::take_param(params, "b", 1.0);
    double tau = detail::take_param(params, "tau", 0.5);
    detail::reject_leftover(params, kind);
    if (!(b >= a)) throw SpecError("gen_synthetic: need b >= a");
    for (std::size_t t = 0; t < T; ++t) {
      y0[t] = a + (b - a) * rng.uniform01();
      y1[t] = y0[t] + tau;
    }
  } else {
    throw SpecError("gen_synthetic: unknown kind '" + kind + "'");
  }
  return OutcomeSchedule(std::move(y1), std::move(y0));
}

}  // namespace neyman
