#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "neyman/numeric.hpp"

namespace neyman {

// Observed record of one experiment run: per round, the treatment
// probability actually used, the sampled assignment, and the revealed
// outcome. This is all an analyst sees; potential outcomes stay hidden.
struct Trace {
  std::vector<double> p;
  std::vector<std::uint8_t> z;
  std::vector<double> y;

  std::size_t size() const { return p.size(); }

  void validate() const {
    if (p.size() != z.size() || p.size() != y.size()) {
      throw std::invalid_argument("Trace: column length mismatch");
    }
    if (p.empty()) {
      throw std::invalid_argument("Trace: empty trace");
    }
    for (std::size_t t = 0; t < p.size(); ++t) {
      if (!(p[t] > 0.0 && p[t] < 1.0)) {
        throw std::invalid_argument("Trace: positivity violated at round " +
                                    std::to_string(t + 1));
      }
      if (z[t] > 1) {
        throw std::invalid_argument("Trace: assignment must be 0 or 1 at round " +
                                    std::to_string(t + 1));
      }
      if (!std::isfinite(y[t])) {
        throw std::invalid_argument("Trace: outcome not finite at round " +
                                    std::to_string(t + 1));
      }
    }
  }
};

struct EffectEstimate {
  double tau_hat = 0.0;
  double a1_hat = 0.0;
  double a0_hat = 0.0;
  double t_vb_hat = 0.0;
};

// Horvitz-Thompson style effect estimate: each observed outcome is
// weighted by the inverse of the probability of the arm it came from,
// using the exact per-round probabilities from the trace.
inline double adaptive_ht(const Trace& trace) {
  trace.validate();
  KahanSum acc;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    if (trace.z[t]) {
      acc.add(trace.y[t] / trace.p[t]);
    } else {
      acc.add(-trace.y[t] / (1.0 - trace.p[t]));
    }
  }
  return acc.value() / static_cast<double>(trace.size());
}

// Point estimate plus the estimable variance bound. a1_hat and a0_hat are
// unbiased for the per-arm mean squares; 4*sqrt(a1_hat*a0_hat) estimates
// an upper bound on T times the estimator variance (it cannot estimate
// the variance itself, which depends on unobservable cross-terms).
inline EffectEstimate variance_bound_estimate(const Trace& trace) {
  trace.validate();
  const double T = static_cast<double>(trace.size());
  KahanSum ht, m1, m0;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    double y2 = trace.y[t] * trace.y[t];
    if (trace.z[t]) {
      ht.add(trace.y[t] / trace.p[t]);
      m1.add(y2 / trace.p[t]);
    } else {
      ht.add(-trace.y[t] / (1.0 - trace.p[t]));
      m0.add(y2 / (1.0 - trace.p[t]));
    }
  }
  EffectEstimate est;
  est.tau_hat = ht.value() / T;
  est.a1_hat = m1.value() / T;
  est.a0_hat = m0.value() / T;
  est.t_vb_hat = 4.0 * std::sqrt(est.a1_hat * est.a0_hat);
  return est;
}

struct IntervalEstimate {
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.0;
  std::string kind;
  bool conjectural = false;
};

// Conservative interval from Chebyshev's inequality; valid at level alpha
// whenever the variance bound holds, no distributional assumptions.
inline IntervalEstimate chebyshev_interval(const EffectEstimate& est,
                                           std::size_t horizon, double level) {
  if (!(level > 0.0 && level <= 1.0)) {
    throw std::invalid_argument("chebyshev_interval: level out of range (0,1]");
  }
  if (horizon == 0) {
    throw std::invalid_argument("chebyshev_interval: empty horizon");
  }
  if (est.t_vb_hat < 0.0) {
    throw std::invalid_argument("chebyshev_interval: negative variance bound");
  }
  double half = std::sqrt(est.t_vb_hat / static_cast<double>(horizon)) /
                std::sqrt(level);
  return {est.tau_hat - half, est.tau_hat + half, level, "chebyshev", false};
}

// Normal-approximation interval. Flagged conjectural: the estimator is not
// proven asymptotically normal under adaptive designs, so nominal coverage
// is a working hypothesis rather than a guarantee.
inline IntervalEstimate wald_interval(const EffectEstimate& est,
                                      std::size_t horizon, double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("wald_interval: level out of range (0,1)");
  }
  if (horizon == 0) {
    throw std::invalid_argument("wald_interval: empty horizon");
  }
  if (est.t_vb_hat < 0.0) {
    throw std::invalid_argument("wald_interval: negative variance bound");
  }
  double half = normal_quantile(1.0 - level / 2.0) *
                std::sqrt(est.t_vb_hat / static_cast<double>(horizon));
  return {est.tau_hat - half, est.tau_hat + half, level, "wald", true};
}

}  // namespace neyman
