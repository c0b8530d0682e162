#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "neyman/core.hpp"
#include "neyman/designs.hpp"
#include "neyman/estimators.hpp"
#include "neyman/numeric.hpp"
#include "neyman/oracle.hpp"
#include "neyman/rng.hpp"

namespace neyman {

struct SimConfig {
  std::uint64_t replications = 1000;
  std::uint64_t seed = 0;
  std::vector<double> levels;  // interval levels to track; may be empty
  unsigned threads = 0;        // 0 = hardware concurrency
};

// Per-replication scalars kept for post-hoc analysis.
struct RepRecord {
  double tau_hat = 0.0;
  double t_vb_hat = 0.0;
  double regret = 0.0;
};

// Aggregates over replications. Interval maps are keyed by kind
// ("chebyshev"/"wald") then by the level formatted as text.
struct SimSummary {
  std::uint64_t rep_count = 0;
  double true_tau = 0.0;
  double mean_tau_hat = 0.0;
  double empirical_var_tau_hat = 0.0;
  double normalized_empirical_variance = 0.0;
  double mean_regret = 0.0;
  double mean_t_vb_hat = 0.0;
  bool degenerate = false;  // fewer than 2 replications: variance undefined
  std::map<std::string, std::map<std::string, double>> coverage;
  std::map<std::string, std::map<std::string, double>> mean_width;
};

// Runs one experiment: asks the policy for each round's probability,
// samples the assignment, reveals the corresponding outcome. One uniform
// draw per round, so a trace consumes exactly T generator steps.
inline Trace run_experiment(const OutcomeSchedule& sched, Policy& policy,
                            SplitMix64& rng) {
  if (sched.empty()) {
    throw std::invalid_argument("run_experiment: empty schedule");
  }
  Trace trace;
  trace.p.reserve(sched.size());
  trace.z.reserve(sched.size());
  trace.y.reserve(sched.size());
  for (std::size_t t = 1; t <= sched.size(); ++t) {
    double p = policy.next_prob(t);
    if (!(p > 0.0 && p < 1.0)) {
      throw std::runtime_error("run_experiment: positivity violated at round " +
                               std::to_string(t));
    }
    bool z = rng.bernoulli(p);
    double y = z ? sched.y1(t - 1) : sched.y0(t - 1);
    policy.observe(t, z, y);
    trace.p.push_back(p);
    trace.z.push_back(z ? 1 : 0);
    trace.y.push_back(y);
  }
  return trace;
}

inline std::string format_level(double level) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", level);
  return buf;
}

// Monte Carlo study of one design on one schedule. Replication r always
// uses RNG substream r of the master seed, and records are reduced in
// replication order after all workers finish, so results are identical
// for every thread count, including 1.
inline SimSummary monte_carlo(const OutcomeSchedule& sched,
                              const std::string& policy_spec,
                              const SimConfig& config,
                              std::vector<RepRecord>* records_out = nullptr) {
  if (sched.empty()) {
    throw std::invalid_argument("monte_carlo: empty schedule");
  }
  if (config.replications == 0) {
    throw std::invalid_argument("monte_carlo: need at least one replication");
  }
  for (double level : config.levels) {
    if (!(level > 0.0 && level < 1.0)) {
      throw std::invalid_argument("monte_carlo: levels must lie in (0,1)");
    }
  }
  auto prototype = make_policy(policy_spec, sched);

  const std::uint64_t R = config.replications;
  std::vector<RepRecord> records(R);

  auto worker = [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t r = begin; r < end; ++r) {
      auto policy = prototype->clone();
      SplitMix64 rng = substream(config.seed, r);
      Trace trace = run_experiment(sched, *policy, rng);
      EffectEstimate est = variance_bound_estimate(trace);
      records[r].tau_hat = est.tau_hat;
      records[r].t_vb_hat = est.t_vb_hat;
      records[r].regret = neyman_regret(sched, trace.p);
    }
  };

  unsigned threads = config.threads;
  if (threads == 0) {
    threads = std::thread::hardware_concurrency();
    if (threads == 0) threads = 1;
  }
  if (static_cast<std::uint64_t>(threads) > R) {
    threads = static_cast<unsigned>(R);
  }
  if (threads <= 1) {
    worker(0, R);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::uint64_t chunk = (R + threads - 1) / threads;
    for (unsigned i = 0; i < threads; ++i) {
      std::uint64_t begin = static_cast<std::uint64_t>(i) * chunk;
      std::uint64_t end = std::min(begin + chunk, R);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  const double T = static_cast<double>(sched.size());
  SimSummary sum;
  sum.rep_count = R;
  sum.true_tau = finite_stats(sched).tau;
  sum.degenerate = (R < 2);

  KahanSum mean_acc, regret_acc, vb_acc;
  for (std::uint64_t r = 0; r < R; ++r) {
    mean_acc.add(records[r].tau_hat);
    regret_acc.add(records[r].regret);
    vb_acc.add(records[r].t_vb_hat);
  }
  sum.mean_tau_hat = mean_acc.value() / static_cast<double>(R);
  sum.mean_regret = regret_acc.value() / static_cast<double>(R);
  sum.mean_t_vb_hat = vb_acc.value() / static_cast<double>(R);

  if (R >= 2) {
    KahanSum sq_acc;
    for (std::uint64_t r = 0; r < R; ++r) {
      double d = records[r].tau_hat - sum.mean_tau_hat;
      sq_acc.add(d * d);
    }
    sum.empirical_var_tau_hat = sq_acc.value() / static_cast<double>(R - 1);
  }
  sum.normalized_empirical_variance = T * sum.empirical_var_tau_hat;

  for (double level : config.levels) {
    std::string key = format_level(level);
    KahanSum cheb_width, wald_width;
    std::uint64_t cheb_hits = 0, wald_hits = 0;
    for (std::uint64_t r = 0; r < R; ++r) {
      EffectEstimate est;
      est.tau_hat = records[r].tau_hat;
      est.t_vb_hat = records[r].t_vb_hat;
      IntervalEstimate cheb = chebyshev_interval(est, sched.size(), level);
      IntervalEstimate wald = wald_interval(est, sched.size(), level);
      if (cheb.lo <= sum.true_tau && sum.true_tau <= cheb.hi) ++cheb_hits;
      if (wald.lo <= sum.true_tau && sum.true_tau <= wald.hi) ++wald_hits;
      cheb_width.add(cheb.hi - cheb.lo);
      wald_width.add(wald.hi - wald.lo);
    }
    sum.coverage["chebyshev"][key] =
        static_cast<double>(cheb_hits) / static_cast<double>(R);
    sum.coverage["wald"][key] =
        static_cast<double>(wald_hits) / static_cast<double>(R);
    sum.mean_width["chebyshev"][key] =
        cheb_width.value() / static_cast<double>(R);
    sum.mean_width["wald"][key] = wald_width.value() / static_cast<double>(R);
  }

  if (records_out) *records_out = std::move(records);
  return sum;
}

// One row of a variance-vs-horizon study: empirical scaled variance of a
// design on the first `horizon` units, next to the exact optimal-design
// and fair-coin variances of that same prefix.
struct CurvePoint {
  std::size_t horizon = 0;
  std::string design;
  double normalized_empirical_variance = 0.0;
  double normalized_neyman_variance = 0.0;
  double normalized_bernoulli_half_variance = 0.0;
  double mean_regret = 0.0;
};

inline std::vector<CurvePoint> variance_curve(
    const OutcomeSchedule& sched, const std::vector<std::string>& designs,
    const std::vector<std::size_t>& horizons, const SimConfig& config) {
  if (designs.empty()) {
    throw std::invalid_argument("variance_curve: no designs given");
  }
  if (horizons.empty()) {
    throw std::invalid_argument("variance_curve: no horizons given");
  }
  std::vector<CurvePoint> out;
  for (std::size_t horizon : horizons) {
    if (horizon < 1 || horizon > sched.size()) {
      throw std::invalid_argument(
          "variance_curve: horizon " + std::to_string(horizon) +
          " outside schedule of length " + std::to_string(sched.size()));
    }
    OutcomeSchedule prefix = sched.prefix(horizon);
    FiniteStats st = finite_stats(prefix);
    double neyman_tvar = neyman_summary(st).t_var_neyman;
    double bern_half_tvar = bernoulli_variance(st, 0.5);
    for (const std::string& design : designs) {
      SimSummary sum = monte_carlo(prefix, design, config);
      CurvePoint pt;
      pt.horizon = horizon;
      pt.design = design;
      pt.normalized_empirical_variance = sum.normalized_empirical_variance;
      pt.normalized_neyman_variance = neyman_tvar;
      pt.normalized_bernoulli_half_variance = bern_half_tvar;
      pt.mean_regret = sum.mean_regret;
      out.push_back(pt);
    }
  }
  return out;
}

}  // namespace neyman
