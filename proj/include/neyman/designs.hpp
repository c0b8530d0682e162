#pragma once

#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "neyman/core.hpp"

namespace neyman {

// Lower clip boundary for round t: probabilities are projected onto
// [delta_t, 1 - delta_t] with delta_t = t^(-1/alpha) / 2, so the design
// can approach the boundary only polynomially fast.
inline double projection_parameter(std::size_t t, double alpha) {
  if (t == 0) throw std::invalid_argument("projection_parameter: t is 1-based");
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("projection_parameter: alpha must be positive");
  }
  return 0.5 * std::pow(static_cast<double>(t), -1.0 / alpha);
}

inline double clip_to(double x, double lo, double hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}

// Single-observation estimate of the cost gradient at p. Its conditional
// mean given p equals cost_gradient exactly, which is what the online
// update needs from one sampled arm per round.
inline double gradient_estimate(double y, bool treated, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument(
        "gradient_estimate: probability out of open interval (0,1)");
  }
  if (treated) return -(y * y) / (p * p * p);
  return (y * y) / ((1.0 - p) * (1.0 - p) * (1.0 - p));
}

inline double clip_ogd_default_eta(std::size_t horizon) {
  if (horizon < 2) {
    throw std::invalid_argument(
        "clip_ogd_default_eta: horizon too short for default parameters");
  }
  return 1.0 / std::sqrt(static_cast<double>(horizon));
}

inline double clip_ogd_default_alpha(std::size_t horizon) {
  if (horizon < 2) {
    throw std::invalid_argument(
        "clip_ogd_default_alpha: horizon too short for default parameters");
  }
  return std::sqrt(5.0 * std::log(static_cast<double>(horizon)));
}

// Step size for a caller-chosen clipping rate alpha >= 2. At
// alpha = sqrt(5 log T) this reduces to the default 1/sqrt(T).
inline double clip_ogd_general_eta(std::size_t horizon, double alpha) {
  if (horizon < 1) {
    throw std::invalid_argument("clip_ogd_general_eta: empty horizon");
  }
  if (!(alpha >= 2.0)) {
    throw std::invalid_argument("clip_ogd_general_eta: alpha must be >= 2");
  }
  double T = static_cast<double>(horizon);
  return std::sqrt(std::exp(alpha) / std::pow(T, 1.0 + 5.0 / alpha));
}

// Tuning informed by known outcome bounds 0 < c <= |y| <= C.
inline double clip_ogd_moment_alpha(const MomentBounds& b) {
  return 1.0 + b.C / b.c;
}

inline double clip_ogd_moment_eta(const MomentBounds& b, std::size_t horizon) {
  if (horizon < 1) {
    throw std::invalid_argument("clip_ogd_moment_eta: empty horizon");
  }
  return std::exp((1.0 + b.C / b.c) / 4.0) /
         (2.0 * std::sqrt(2.0) * b.C * b.C * std::sqrt(static_cast<double>(horizon)));
}

// Sequential treatment-probability rule. Rounds are 1-based and arrive in
// order: the driver asks next_prob(t), samples the assignment, then feeds
// the realized (assignment, outcome) back through observe(t, ...). The
// probability is exposed before sampling so estimators can reuse the exact
// value the draw was made with.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string kind() const = 0;
  virtual std::vector<std::pair<std::string, double>> params() const = 0;
  virtual double next_prob(std::size_t t) const = 0;
  virtual void observe(std::size_t t, bool treated, double y) = 0;
  virtual std::unique_ptr<Policy> clone() const = 0;
};

class BernoulliPolicy final : public Policy {
 public:
  explicit BernoulliPolicy(double p) : p_(p) {
    if (!(p > 0.0 && p < 1.0)) {
      throw std::invalid_argument(
          "BernoulliPolicy: probability out of open interval (0,1)");
    }
  }

  std::string kind() const override { return "bernoulli"; }
  std::vector<std::pair<std::string, double>> params() const override {
    return {{"p", p_}};
  }
  double next_prob(std::size_t) const override { return p_; }
  void observe(std::size_t, bool, double) override {}
  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<BernoulliPolicy>(*this);
  }

 private:
  double p_;
};

class NeymanOraclePolicy final : public Policy {
 public:
  explicit NeymanOraclePolicy(double p_star) : p_(p_star) {
    if (!(p_ > 0.0 && p_ < 1.0)) {
      throw std::invalid_argument(
          "NeymanOraclePolicy: probability out of open interval (0,1)");
    }
  }

  static NeymanOraclePolicy from_schedule(const OutcomeSchedule& sched) {
    return NeymanOraclePolicy(neyman_summary(finite_stats(sched)).p_star);
  }

  std::string kind() const override { return "neyman-oracle"; }
  std::vector<std::pair<std::string, double>> params() const override {
    return {{"p", p_}};
  }
  double next_prob(std::size_t) const override { return p_; }
  void observe(std::size_t, bool, double) override {}
  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<NeymanOraclePolicy>(*this);
  }

 private:
  double p_;
};

// Online-gradient-descent allocation with a shrinking clip window. State
// after round t is the pair (P_t, G_t); round t+1 projects the gradient
// step onto [delta_{t+1}, 1 - delta_{t+1}]. delta_1 = 1/2 pins the first
// round to a fair coin regardless of tuning.
class ClipOgdPolicy final : public Policy {
 public:
  ClipOgdPolicy(double eta, double alpha)
      : eta_(eta), alpha_(alpha) {
    if (!(eta > 0.0) || !std::isfinite(eta)) {
      throw std::invalid_argument("ClipOgdPolicy: eta must be positive");
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw std::invalid_argument("ClipOgdPolicy: alpha must be positive");
    }
  }

  static ClipOgdPolicy with_default_params(std::size_t horizon) {
    return ClipOgdPolicy(clip_ogd_default_eta(horizon),
                         clip_ogd_default_alpha(horizon));
  }

  std::string kind() const override { return "clip-ogd"; }
  std::vector<std::pair<std::string, double>> params() const override {
    return {{"eta", eta_}, {"alpha", alpha_}};
  }

  double next_prob(std::size_t t) const override {
    if (t != round_) {
      throw std::logic_error("ClipOgdPolicy: rounds must be visited in order");
    }
    double delta = projection_parameter(t, alpha_);
    return clip_to(p_prev_ - eta_ * g_prev_, delta, 1.0 - delta);
  }

  void observe(std::size_t t, bool treated, double y) override {
    double p = next_prob(t);
    p_prev_ = p;
    g_prev_ = gradient_estimate(y, treated, p);
    ++round_;
  }

  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<ClipOgdPolicy>(*this);
  }

 private:
  double eta_;
  double alpha_;
  double p_prev_ = 0.5;
  double g_prev_ = 0.0;
  std::size_t round_ = 1;
};

// Explore-then-commit: fair coin for t0 rounds, then a plug-in estimate of
// the optimal probability from inverse-propensity second moments, clipped
// away from the boundary. With no usable exploration data it stays at 1/2.
class EtcPolicy final : public Policy {
 public:
  explicit EtcPolicy(std::size_t t0, double p_min = 0.01)
      : t0_(t0), p_min_(p_min) {
    if (t0 == 0) {
      throw std::invalid_argument("EtcPolicy: exploration length must be >= 1");
    }
    if (!(p_min > 0.0 && p_min < 0.5)) {
      throw std::invalid_argument("EtcPolicy: p_min must lie in (0, 0.5)");
    }
  }

  std::string kind() const override { return "etc"; }
  std::vector<std::pair<std::string, double>> params() const override {
    return {{"t0", static_cast<double>(t0_)}, {"p_min", p_min_}};
  }

  double next_prob(std::size_t t) const override {
    if (t != round_) {
      throw std::logic_error("EtcPolicy: rounds must be visited in order");
    }
    return (t <= t0_) ? 0.5 : committed_;
  }

  void observe(std::size_t t, bool treated, double y) override {
    if (t != round_) {
      throw std::logic_error("EtcPolicy: rounds must be visited in order");
    }
    if (t <= t0_) {
      // Inverse-propensity estimates of the arm second moments; the common
      // 1/2 propensity cancels from the committed ratio.
      if (treated) {
        sum_sq_treated_ += y * y;
      } else {
        sum_sq_control_ += y * y;
      }
      if (t == t0_) {
        if (sum_sq_treated_ > 0.0 && sum_sq_control_ > 0.0) {
          double p = 1.0 / (1.0 + std::sqrt(sum_sq_control_ / sum_sq_treated_));
          committed_ = clip_to(p, p_min_, 1.0 - p_min_);
        } else {
          committed_ = 0.5;
        }
      }
    }
    ++round_;
  }

  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<EtcPolicy>(*this);
  }

 private:
  std::size_t t0_;
  double p_min_;
  double sum_sq_treated_ = 0.0;
  double sum_sq_control_ = 0.0;
  double committed_ = 0.5;
  std::size_t round_ = 1;
};

namespace detail {

inline double parse_double_or_throw(const std::string& s,
                                    const std::string& what) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || !std::isfinite(v)) {
    throw SpecError("design spec: bad numeric value for " + what + ": '" + s +
                    "'");
  }
  return v;
}

inline std::map<std::string, std::string> parse_options(
    const std::string& body) {
  std::map<std::string, std::string> opts;
  std::size_t pos = 0;
  while (pos < body.size()) {
    std::size_t comma = body.find(',', pos);
    std::string item = body.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    std::size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= item.size()) {
      throw SpecError("design spec: expected key=value, got '" + item + "'");
    }
    std::string key = item.substr(0, eq);
    if (opts.count(key)) {
      throw SpecError("design spec: duplicate option '" + key + "'");
    }
    opts[key] = item.substr(eq + 1);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return opts;
}

}  // namespace detail

// Builds a policy from a spec string:
//   bernoulli:<p>
//   clip-ogd[:eta=<x>][:alpha=<x>]      (comma-separated options)
//   etc:t0=<n|cbrt>
//   neyman-oracle
// The schedule supplies the horizon for parameter defaults and, for the
// oracle, the optimal probability itself.
inline std::unique_ptr<Policy> make_policy(const std::string& spec,
                                           const OutcomeSchedule& sched) {
  std::size_t colon = spec.find(':');
  std::string name = spec.substr(0, colon);
  std::string body =
      colon == std::string::npos ? std::string() : spec.substr(colon + 1);
  std::size_t T = sched.size();

  if (name == "bernoulli") {
    if (body.empty()) {
      throw SpecError("design spec: bernoulli requires a probability, e.g. "
                      "bernoulli:0.5");
    }
    double p = detail::parse_double_or_throw(body, "bernoulli probability");
    if (!(p > 0.0 && p < 1.0)) {
      throw SpecError("design spec: bernoulli probability must lie in (0,1)");
    }
    return std::make_unique<BernoulliPolicy>(p);
  }

  if (name == "clip-ogd") {
    auto opts = detail::parse_options(body);
    double eta = 0.0, alpha = 0.0;
    bool have_eta = opts.count("eta") > 0;
    bool have_alpha = opts.count("alpha") > 0;
    if (have_eta) eta = detail::parse_double_or_throw(opts.at("eta"), "eta");
    if (have_alpha) {
      alpha = detail::parse_double_or_throw(opts.at("alpha"), "alpha");
    }
    opts.erase("eta");
    opts.erase("alpha");
    if (!opts.empty()) {
      throw SpecError("design spec: unknown clip-ogd option '" +
                      opts.begin()->first + "'");
    }
    if (!have_alpha) alpha = clip_ogd_default_alpha(T);
    if (!have_eta) {
      eta = have_alpha ? clip_ogd_general_eta(T, alpha)
                       : clip_ogd_default_eta(T);
    }
    return std::make_unique<ClipOgdPolicy>(eta, alpha);
  }

  if (name == "etc") {
    auto opts = detail::parse_options(body);
    if (!opts.count("t0")) {
      throw SpecError("design spec: etc requires t0, e.g. etc:t0=cbrt");
    }
    std::string t0s = opts.at("t0");
    opts.erase("t0");
    if (!opts.empty()) {
      throw SpecError("design spec: unknown etc option '" +
                      opts.begin()->first + "'");
    }
    std::size_t t0 = 0;
    if (t0s == "cbrt") {
      if (T == 0) throw SpecError("design spec: etc:t0=cbrt needs a schedule");
      double root = std::cbrt(static_cast<double>(T));
      double rounded = std::round(root);
      // cbrt of a perfect cube can land a few ulps off an integer.
      t0 = static_cast<std::size_t>(std::abs(root - rounded) < 1e-9
                                        ? rounded
                                        : std::ceil(root));
    } else {
      char* end = nullptr;
      long v = std::strtol(t0s.c_str(), &end, 10);
      if (end == t0s.c_str() || *end != '\0' || v < 1) {
        throw SpecError("design spec: t0 must be a positive integer or cbrt");
      }
      t0 = static_cast<std::size_t>(v);
    }
    return std::make_unique<EtcPolicy>(t0);
  }

  if (name == "neyman-oracle") {
    if (!body.empty()) {
      throw SpecError("design spec: neyman-oracle takes no options");
    }
    return std::make_unique<NeymanOraclePolicy>(
        NeymanOraclePolicy::from_schedule(sched));
  }

  throw SpecError("design spec: unknown design '" + name + "'");
}

}  // namespace neyman
