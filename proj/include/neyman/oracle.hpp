#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "neyman/core.hpp"
#include "neyman/designs.hpp"
#include "neyman/numeric.hpp"

namespace neyman {

// Exact distributional facts about a policy on a schedule, computed by
// walking every assignment sequence. Sizes are per-estimate (not scaled by
// T) except expected_regret, which is the raw cost gap.
struct ExactResults {
  std::uint64_t path_count = 0;
  double total_probability = 0.0;
  double mean_tau_hat = 0.0;
  double var_tau_hat = 0.0;
  double expected_regret = 0.0;
  std::vector<double> inv_p_means;  // E[1/P_t] per round
  std::vector<double> inv_q_means;  // E[1/(1-P_t)] per round
};

namespace detail {

struct ExactAccum {
  KahanSum prob, mean, second_moment, regret;
  std::vector<KahanSum> inv_p, inv_q;
  double benchmark = 0.0;
  std::size_t horizon = 0;
};

// Depth-first walk. The policy is cloned at each branch so sibling
// subtrees never see each other's history; the round-t probability is
// recorded at the node, weighted by the prefix probability, which sums to
// exactly the marginal E[1/P_t] over full paths.
inline void exact_dfs(const OutcomeSchedule& sched, Policy& pol,
                      std::size_t t, double weight, double ht_sum,
                      double cost_sum, ExactAccum& acc) {
  const std::size_t T = acc.horizon;
  if (t > T) {
    double tau_hat = ht_sum / static_cast<double>(T);
    acc.prob.add(weight);
    acc.mean.add(weight * tau_hat);
    acc.second_moment.add(weight * tau_hat * tau_hat);
    acc.regret.add(weight * (cost_sum - acc.benchmark));
    return;
  }
  double p = pol.next_prob(t);
  if (!(p > 0.0 && p < 1.0)) {
    throw std::runtime_error("enumerate_exact: positivity violated at round " +
                             std::to_string(t));
  }
  acc.inv_p[t - 1].add(weight / p);
  acc.inv_q[t - 1].add(weight / (1.0 - p));

  double y1 = sched.y1(t - 1);
  double y0 = sched.y0(t - 1);
  double round_cost = cost(y1, y0, p);

  if (t == T) {
    // Terminal round: children are leaves, no policy state is consulted
    // again, so skip the clone-and-observe bookkeeping.
    exact_dfs(sched, pol, t + 1, weight * p, ht_sum + y1 / p,
              cost_sum + round_cost, acc);
    exact_dfs(sched, pol, t + 1, weight * (1.0 - p),
              ht_sum - y0 / (1.0 - p), cost_sum + round_cost, acc);
    return;
  }

  {
    auto child = pol.clone();
    child->observe(t, true, y1);
    exact_dfs(sched, *child, t + 1, weight * p, ht_sum + y1 / p,
              cost_sum + round_cost, acc);
  }
  {
    auto child = pol.clone();
    child->observe(t, false, y0);
    exact_dfs(sched, *child, t + 1, weight * (1.0 - p),
              ht_sum - y0 / (1.0 - p), cost_sum + round_cost, acc);
  }
}

}  // namespace detail

// Hard ceiling on exact enumeration: 2^20 is about a million paths and
// stays under a second; every doubling past that doubles the cost.
inline constexpr std::size_t kMaxExactHorizon = 20;

// Enumerates all 2^T assignment paths of `policy` on `sched`. Exponential
// by construction; refuses horizons above `cap`. Callers may lower the cap
// for their own budget but cannot raise it past the hard ceiling.
inline ExactResults enumerate_exact(const OutcomeSchedule& sched,
                                    const Policy& policy,
                                    std::size_t cap = kMaxExactHorizon) {
  if (sched.empty()) {
    throw std::invalid_argument("enumerate_exact: empty schedule");
  }
  std::size_t effective_cap = std::min(cap, kMaxExactHorizon);
  if (sched.size() > effective_cap) {
    throw std::invalid_argument(
        "enumerate_exact: enumeration cap exceeded (horizon " +
        std::to_string(sched.size()) + " > cap " +
        std::to_string(effective_cap) + ")");
  }
  detail::ExactAccum acc;
  acc.horizon = sched.size();
  acc.inv_p.resize(sched.size());
  acc.inv_q.resize(sched.size());
  acc.benchmark = neyman_benchmark(finite_stats(sched));

  auto root = policy.clone();
  detail::exact_dfs(sched, *root, 1, 1.0, 0.0, 0.0, acc);

  ExactResults out;
  out.path_count = std::uint64_t{1} << sched.size();
  out.total_probability = acc.prob.value();
  out.mean_tau_hat = acc.mean.value();
  out.var_tau_hat =
      acc.second_moment.value() - out.mean_tau_hat * out.mean_tau_hat;
  out.expected_regret = acc.regret.value();
  out.inv_p_means.reserve(sched.size());
  out.inv_q_means.reserve(sched.size());
  for (std::size_t t = 0; t < sched.size(); ++t) {
    out.inv_p_means.push_back(acc.inv_p[t].value());
    out.inv_q_means.push_back(acc.inv_q[t].value());
  }
  return out;
}

// Exact identity linking regret to variance excess: T*Var(tau_hat) minus
// the optimal-design variance equals E[regret]/T for any policy that keeps
// probabilities strictly interior. Verifying it is a strong end-to-end
// check of the enumeration, the analytics, and the policy implementations.
struct RegretRatioCheck {
  double excess_t_var = 0.0;
  double scaled_expected_regret = 0.0;
  double abs_diff = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline RegretRatioCheck exact_regret_ratio_check(const OutcomeSchedule& sched,
                                                 const Policy& policy,
                                                 std::size_t cap = 20) {
  ExactResults ex = enumerate_exact(sched, policy, cap);
  FiniteStats st = finite_stats(sched);
  double rho_term = st.rho ? (1.0 + *st.rho) : 1.0;
  double t_var_neyman = 2.0 * rho_term * st.s1 * st.s0;
  double T = static_cast<double>(sched.size());

  RegretRatioCheck chk;
  chk.excess_t_var = T * ex.var_tau_hat - t_var_neyman;
  chk.scaled_expected_regret = ex.expected_regret / T;
  chk.abs_diff = std::abs(chk.excess_t_var - chk.scaled_expected_regret);
  chk.tolerance = 1e-9 * std::max(1.0, T * ex.var_tau_hat);
  chk.pass = chk.abs_diff <= chk.tolerance;
  return chk;
}

}  // namespace neyman
