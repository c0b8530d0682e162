#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "neyman/numeric.hpp"

namespace neyman {

// Raised when a user-facing spec string (design spec, generator kind,
// generator parameters) is malformed; the CLI maps this to a usage error
// rather than a data error.
struct SpecError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Full potential-outcome table for a finite population of T units, in
// arrival order: y1[t] is the outcome if unit t is treated, y0[t] if not.
class OutcomeSchedule {
 public:
  OutcomeSchedule() = default;

  OutcomeSchedule(std::vector<double> treated, std::vector<double> control)
      : y1_(std::move(treated)), y0_(std::move(control)) {
    if (y1_.size() != y0_.size()) {
      throw std::invalid_argument(
          "OutcomeSchedule: treated and control arms must have equal length");
    }
    if (!all_finite(y1_.data(), y1_.size()) ||
        !all_finite(y0_.data(), y0_.size())) {
      throw std::invalid_argument("OutcomeSchedule: outcomes must be finite");
    }
  }

  std::size_t size() const { return y1_.size(); }
  bool empty() const { return y1_.empty(); }

  double y1(std::size_t t) const { return y1_[t]; }
  double y0(std::size_t t) const { return y0_[t]; }
  double effect(std::size_t t) const { return y1_[t] - y0_[t]; }

  const std::vector<double>& treated() const { return y1_; }
  const std::vector<double>& control() const { return y0_; }

  OutcomeSchedule prefix(std::size_t n) const {
    if (n > size()) {
      throw std::invalid_argument("OutcomeSchedule::prefix: n exceeds horizon");
    }
    return OutcomeSchedule(std::vector<double>(y1_.begin(), y1_.begin() + n),
                           std::vector<double>(y0_.begin(), y0_.begin() + n));
  }

 private:
  std::vector<double> y1_;
  std::vector<double> y0_;
};

// Second-moment summary of a schedule. s1 and s0 are root mean squares of
// the two arms; rho is the cosine similarity of the arm vectors and is
// absent when either arm is identically zero (the ratio is 0/0 then).
struct FiniteStats {
  std::size_t horizon = 0;
  double s1 = 0.0;
  double s0 = 0.0;
  std::optional<double> rho;
  double tau = 0.0;
};

inline FiniteStats finite_stats(const OutcomeSchedule& sched) {
  if (sched.empty()) {
    throw std::invalid_argument("finite_stats: empty schedule");
  }
  const double T = static_cast<double>(sched.size());
  KahanSum sq1, sq0, cross, eff;
  for (std::size_t t = 0; t < sched.size(); ++t) {
    sq1.add(sched.y1(t) * sched.y1(t));
    sq0.add(sched.y0(t) * sched.y0(t));
    cross.add(sched.y1(t) * sched.y0(t));
    eff.add(sched.effect(t));
  }
  FiniteStats st;
  st.horizon = sched.size();
  st.s1 = std::sqrt(sq1.value() / T);
  st.s0 = std::sqrt(sq0.value() / T);
  st.tau = eff.value() / T;
  if (st.s1 > 0.0 && st.s0 > 0.0) {
    double r = (cross.value() / T) / (st.s1 * st.s0);
    if (r > 1.0) r = 1.0;
    if (r < -1.0) r = -1.0;
    st.rho = r;
  }
  return st;
}

// Optimal-design summary: p_star is the probability minimizing the
// variance over Bernoulli designs, t_var_neyman the variance (scaled by T)
// attained there, t_var_bound the estimable upper bound 4*s1*s0.
struct NeymanSummary {
  double p_star = 0.0;
  double t_var_neyman = 0.0;
  double t_var_bound = 0.0;
};

inline NeymanSummary neyman_summary(const FiniteStats& st) {
  if (st.s1 <= 0.0 || st.s0 <= 0.0) {
    throw std::invalid_argument("neyman_summary: degenerate arm");
  }
  NeymanSummary out;
  out.p_star = st.s1 / (st.s1 + st.s0);
  out.t_var_neyman = 2.0 * (1.0 + *st.rho) * st.s1 * st.s0;
  out.t_var_bound = 4.0 * st.s1 * st.s0;
  return out;
}

// Variance (scaled by T) of the adaptive difference-in-means estimator
// under a fixed Bernoulli(p) design.
inline double bernoulli_variance(const FiniteStats& st, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument(
        "bernoulli_variance: probability out of open interval (0,1)");
  }
  double cross = st.rho ? 2.0 * (*st.rho) * st.s1 * st.s0 : 0.0;
  return st.s1 * st.s1 * (1.0 / p - 1.0) +
         st.s0 * st.s0 * (1.0 / (1.0 - p) - 1.0) + cross;
}

// Ratio of the optimal-design variance to the Bernoulli(p) variance;
// below 1 means adaptivity has room to help.
inline double relative_efficiency(const FiniteStats& st, double p) {
  double denom = bernoulli_variance(st, p);
  if (denom <= 0.0) {
    throw std::invalid_argument("relative_efficiency: zero denominator");
  }
  if (st.s1 <= 0.0 || st.s0 <= 0.0) return 0.0;
  return neyman_summary(st).t_var_neyman / denom;
}

// Per-round inverse-propensity cost whose sum the allocation is trying to
// minimize: f_t(p) = y1^2/p + y0^2/(1-p).
inline double cost(double y1, double y0, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("cost: probability out of open interval (0,1)");
  }
  return y1 * y1 / p + y0 * y0 / (1.0 - p);
}

inline double cost_gradient(double y1, double y0, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument(
        "cost_gradient: probability out of open interval (0,1)");
  }
  return -y1 * y1 / (p * p) + y0 * y0 / ((1.0 - p) * (1.0 - p));
}

// Best fixed probability in hindsight attains sum_t f_t(p) = T*(s1+s0)^2;
// this is the benchmark the regret is measured against.
inline double neyman_benchmark(const FiniteStats& st) {
  return static_cast<double>(st.horizon) * (st.s1 + st.s0) * (st.s1 + st.s0);
}

// Realized cost of a probability sequence minus the fixed-p benchmark.
inline double neyman_regret(const OutcomeSchedule& sched,
                            const std::vector<double>& probs) {
  if (sched.size() != probs.size()) {
    throw std::invalid_argument(
        "neyman_regret: schedule and probability sequence length mismatch");
  }
  if (sched.empty()) {
    throw std::invalid_argument("neyman_regret: empty schedule");
  }
  KahanSum total;
  for (std::size_t t = 0; t < probs.size(); ++t) {
    total.add(cost(sched.y1(t), sched.y0(t), probs[t]));
  }
  return total.value() - neyman_benchmark(finite_stats(sched));
}

// Relative excess of a design's variance over the optimal one.
inline double neyman_ratio(double t_var, double t_var_neyman) {
  if (t_var_neyman <= 0.0) {
    throw std::invalid_argument("neyman_ratio: zero denominator");
  }
  return (t_var - t_var_neyman) / t_var_neyman;
}

// A priori outcome-magnitude envelope 0 < c <= |y| <= C, used to tune the
// allocation when such bounds are credibly known.
struct MomentBounds {
  double c;
  double C;

  MomentBounds(double c_in, double C_in) : c(c_in), C(C_in) {
    if (!(c > 0.0) || !(C >= c) || !std::isfinite(C)) {
      throw std::invalid_argument("MomentBounds: need 0 < c <= C < inf");
    }
  }
};

}  // namespace neyman
