#pragma once

#include <json.hpp>

#include "neyman/core.hpp"
#include "neyman/estimators.hpp"
#include "neyman/oracle.hpp"
#include "neyman/simulation.hpp"

namespace neyman {

// Version of the output file schema, stamped into every JSON document the
// tools emit so downstream readers can detect format changes.
inline constexpr const char* kSchemaVersion = "1.0";

inline void to_json(nlohmann::json& j, const FiniteStats& st) {
  j = nlohmann::json{{"horizon", st.horizon},
                     {"s1", st.s1},
                     {"s0", st.s0},
                     {"tau", st.tau}};
  if (st.rho) {
    j["rho"] = *st.rho;
  } else {
    j["rho"] = nullptr;
  }
}

inline void to_json(nlohmann::json& j, const NeymanSummary& s) {
  j = nlohmann::json{{"p_star", s.p_star},
                     {"t_var_neyman", s.t_var_neyman},
                     {"t_var_bound", s.t_var_bound}};
}

inline void to_json(nlohmann::json& j, const EffectEstimate& e) {
  j = nlohmann::json{{"tau_hat", e.tau_hat},
                     {"a1_hat", e.a1_hat},
                     {"a0_hat", e.a0_hat},
                     {"t_vb_hat", e.t_vb_hat}};
}

inline void to_json(nlohmann::json& j, const IntervalEstimate& iv) {
  j = nlohmann::json{{"lo", iv.lo},
                     {"hi", iv.hi},
                     {"level", iv.level},
                     {"kind", iv.kind},
                     {"conjectural", iv.conjectural}};
}

inline void to_json(nlohmann::json& j, const ExactResults& ex) {
  j = nlohmann::json{{"path_count", ex.path_count},
                     {"total_probability", ex.total_probability},
                     {"mean_tau_hat", ex.mean_tau_hat},
                     {"var_tau_hat", ex.var_tau_hat},
                     {"t_var_tau_hat", ex.var_tau_hat *
                                           static_cast<double>(
                                               ex.inv_p_means.size())},
                     {"expected_regret", ex.expected_regret},
                     {"inv_p_means", ex.inv_p_means},
                     {"inv_q_means", ex.inv_q_means}};
}

inline void to_json(nlohmann::json& j, const RegretRatioCheck& chk) {
  j = nlohmann::json{{"excess_t_var", chk.excess_t_var},
                     {"scaled_expected_regret", chk.scaled_expected_regret},
                     {"abs_diff", chk.abs_diff},
                     {"tolerance", chk.tolerance},
                     {"pass", chk.pass}};
}

inline void to_json(nlohmann::json& j, const SimSummary& s) {
  j = nlohmann::json{{"rep_count", s.rep_count},
                     {"true_tau", s.true_tau},
                     {"mean_tau_hat", s.mean_tau_hat},
                     {"empirical_var_tau_hat", s.empirical_var_tau_hat},
                     {"normalized_empirical_variance",
                      s.normalized_empirical_variance},
                     {"mean_regret", s.mean_regret},
                     {"mean_t_vb_hat", s.mean_t_vb_hat},
                     {"degenerate", s.degenerate},
                     {"coverage", s.coverage},
                     {"mean_width", s.mean_width}};
}

inline void to_json(nlohmann::json& j, const CurvePoint& p) {
  j = nlohmann::json{
      {"horizon", p.horizon},
      {"design", p.design},
      {"normalized_empirical_variance", p.normalized_empirical_variance},
      {"normalized_neyman_variance", p.normalized_neyman_variance},
      {"normalized_bernoulli_half_variance",
       p.normalized_bernoulli_half_variance},
      {"mean_regret", p.mean_regret}};
}

}  // namespace neyman
