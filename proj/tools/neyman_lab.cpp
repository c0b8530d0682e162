// neyman-lab: command-line front end for the adaptive allocation toolkit.
//
// Subcommands:
//   data      generate or transform outcome schedules (CSV out)
//   exact     enumerate a design exactly on a small schedule (JSON out)
//   simulate  Monte Carlo study of one design (JSON out)
//   curve     variance-vs-horizon table for several designs (CSV out)
//   analyze   effect estimate and intervals from a recorded trace (JSON out)
//
// Exit codes: 0 success, 1 usage error (bad flags or design spec),
// 2 data or validation error. Primary outputs are deterministic for a
// fixed invocation; wall-clock timing goes to stderr only.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "neyman/neyman.hpp"

namespace {

using nlohmann::json;

json design_echo(const neyman::Policy& policy) {
  json params = json::object();
  for (const auto& [key, value] : policy.params()) {
    params[key] = value;
  }
  return json{{"name", policy.kind()}, {"params", params}};
}

void emit_json(const json& doc, const std::string& out_path) {
  std::string text = doc.dump(2);
  text.push_back('\n');
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) {
      throw neyman::DataError("cannot open file for writing: " + out_path);
    }
    out << text;
    if (!out) {
      throw neyman::DataError("write failed: " + out_path);
    }
  }
  std::cout << text;
}

std::map<std::string, double> parse_kv_doubles(const std::string& body,
                                               const std::string& what) {
  std::map<std::string, double> out;
  if (body.empty()) return out;
  for (const auto& [key, value] : neyman::detail::parse_options(body)) {
    out[key] = neyman::detail::parse_double_or_throw(value, what + "." + key);
  }
  return out;
}

unsigned resolve_threads(int threads_flag) {
  if (threads_flag < 0) {
    throw CLI::ValidationError("--threads", "must be >= 0");
  }
  unsigned threads = static_cast<unsigned>(threads_flag);
  if (threads == 0) {
    threads = std::thread::hardware_concurrency();
    if (threads == 0) threads = 1;
  }
  return threads;
}

struct DataArgs {
  std::string in_path;
  std::string gen_kind;
  std::size_t horizon = 0;
  std::uint64_t gen_seed = 0;
  std::string gen_params;
  std::string impute;
  std::size_t replicate = 1;
  bool normalize = false;
  std::optional<std::uint64_t> shuffle_seed;
  std::size_t flip_prefix = 0;
  std::string out_path;
};

int run_data(const DataArgs& args) {
  json config{{"command", "data"}, {"out", args.out_path}};
  neyman::OutcomeSchedule sched;

  if (!args.gen_kind.empty()) {
    auto params = parse_kv_doubles(args.gen_params, "gen-params");
    config["gen"] = args.gen_kind;
    config["t"] = args.horizon;
    config["gen_seed"] = args.gen_seed;
    config["gen_params"] = params;
    sched = neyman::gen_synthetic(args.gen_kind, args.horizon, args.gen_seed,
                                  params);
  } else {
    config["in"] = args.in_path;
    // A schedule file carries both arms; an observed file carries one
    // column which both arms start from (impute then separates them).
    std::ifstream probe(args.in_path);
    if (!probe) {
      throw neyman::DataError("cannot open file: " + args.in_path);
    }
    std::string header;
    std::getline(probe, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    probe.close();
    if (header == "y") {
      std::vector<double> y = neyman::load_observed_csv(args.in_path);
      sched = neyman::OutcomeSchedule(y, y);
    } else {
      sched = neyman::load_schedule_csv(args.in_path);
    }
  }

  if (!args.impute.empty()) {
    auto iv = parse_kv_doubles(args.impute, "impute");
    if (!iv.count("tau") || !iv.count("sigma")) {
      throw neyman::SpecError("--impute requires tau=<x>,sigma=<x>[,seed=<n>]");
    }
    double tau = iv.at("tau");
    double sigma = iv.at("sigma");
    std::uint64_t seed = 0;
    iv.erase("tau");
    iv.erase("sigma");
    if (iv.count("seed")) {
      seed = static_cast<std::uint64_t>(iv.at("seed"));
      iv.erase("seed");
    }
    if (!iv.empty()) {
      throw neyman::SpecError("--impute: unknown key '" + iv.begin()->first +
                              "'");
    }
    config["impute"] = {{"tau", tau}, {"sigma", sigma}, {"seed", seed}};
    sched = neyman::impute_schedule(sched.control(), tau, sigma, seed);
  }

  if (args.replicate > 1) {
    sched = neyman::replicate_schedule(sched, args.replicate);
  }
  config["replicate"] = args.replicate;

  if (args.normalize) {
    sched = neyman::normalize_schedule(sched);
  }
  config["normalize"] = args.normalize;

  if (args.shuffle_seed) {
    sched = neyman::shuffle_schedule(sched, *args.shuffle_seed);
    config["shuffle_seed"] = *args.shuffle_seed;
  }

  if (args.flip_prefix > 0) {
    sched = neyman::flip_prefix(sched, args.flip_prefix);
  }
  config["flip_prefix"] = args.flip_prefix;

  neyman::save_schedule_csv(sched, args.out_path);

  neyman::FiniteStats st = neyman::finite_stats(sched);
  json doc{{"spec_version", neyman::kSchemaVersion},
           {"config", config},
           {"stats", st}};
  if (st.s1 > 0.0 && st.s0 > 0.0) {
    doc["neyman"] = neyman::neyman_summary(st);
  } else {
    doc["neyman"] = nullptr;
  }
  std::cout << doc.dump(2) << "\n";
  return 0;
}

struct ExactArgs {
  std::string data_path;
  std::string design;
  std::size_t cap = 20;
  std::string out_path;
};

int run_exact(const ExactArgs& args) {
  neyman::OutcomeSchedule sched = neyman::load_schedule_csv(args.data_path);
  auto policy = neyman::make_policy(args.design, sched);
  neyman::ExactResults results =
      neyman::enumerate_exact(sched, *policy, args.cap);
  neyman::RegretRatioCheck check =
      neyman::exact_regret_ratio_check(sched, *policy, args.cap);

  json doc{{"spec_version", neyman::kSchemaVersion},
           {"config",
            {{"command", "exact"},
             {"data", args.data_path},
             {"design", args.design},
             {"resolved_design", design_echo(*policy)},
             {"cap", args.cap}}},
           {"stats", neyman::finite_stats(sched)},
           {"results", results},
           {"identity_check", check}};
  emit_json(doc, args.out_path);
  return 0;
}

struct SimulateArgs {
  std::string data_path;
  std::string design;
  std::uint64_t reps = 1000;
  std::uint64_t seed = 0;
  std::vector<double> levels;
  int threads = 0;
  std::string trace_out;
  std::string out_path;
};

int run_simulate(const SimulateArgs& args) {
  neyman::OutcomeSchedule sched = neyman::load_schedule_csv(args.data_path);
  auto policy = neyman::make_policy(args.design, sched);

  neyman::SimConfig config;
  config.replications = args.reps;
  config.seed = args.seed;
  config.levels = args.levels;
  config.threads = resolve_threads(args.threads);

  neyman::SimSummary summary =
      neyman::monte_carlo(sched, args.design, config);

  if (!args.trace_out.empty()) {
    // Replication 0 replayed from its own substream; identical to the run
    // that produced records[0] inside the study.
    auto replay = policy->clone();
    neyman::SplitMix64 rng = neyman::substream(config.seed, 0);
    neyman::Trace trace = neyman::run_experiment(sched, *replay, rng);
    neyman::save_trace_csv(trace, args.trace_out);
  }

  json doc{{"spec_version", neyman::kSchemaVersion},
           {"config",
            {{"command", "simulate"},
             {"data", args.data_path},
             {"design", args.design},
             {"resolved_design", design_echo(*policy)},
             {"reps", args.reps},
             {"seed", args.seed},
             {"levels", args.levels},
             {"threads", config.threads},
             {"horizon", sched.size()},
             {"trace_out", args.trace_out}}},
           {"summary", summary}};
  emit_json(doc, args.out_path);
  return 0;
}

struct CurveArgs {
  std::string data_path;
  std::vector<std::string> designs;
  std::vector<std::size_t> t_grid;
  std::uint64_t reps = 1000;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out_path;
};

int run_curve(const CurveArgs& args) {
  neyman::OutcomeSchedule sched = neyman::load_schedule_csv(args.data_path);

  neyman::SimConfig config;
  config.replications = args.reps;
  config.seed = args.seed;
  config.threads = resolve_threads(args.threads);

  std::vector<neyman::CurvePoint> points =
      neyman::variance_curve(sched, args.designs, args.t_grid, config);

  std::ofstream out(args.out_path);
  if (!out) {
    throw neyman::DataError("cannot open file for writing: " + args.out_path);
  }
  out << "horizon,design,normalized_empirical_variance,"
         "normalized_neyman_variance,normalized_bernoulli_half_variance,"
         "mean_regret\n";
  for (const auto& pt : points) {
    out << pt.horizon << ',' << pt.design << ','
        << neyman::detail::format_double(pt.normalized_empirical_variance)
        << ','
        << neyman::detail::format_double(pt.normalized_neyman_variance) << ','
        << neyman::detail::format_double(
               pt.normalized_bernoulli_half_variance)
        << ',' << neyman::detail::format_double(pt.mean_regret) << '\n';
  }
  if (!out) {
    throw neyman::DataError("write failed: " + args.out_path);
  }

  json doc{{"spec_version", neyman::kSchemaVersion},
           {"config",
            {{"command", "curve"},
             {"data", args.data_path},
             {"designs", args.designs},
             {"t_grid", args.t_grid},
             {"reps", args.reps},
             {"seed", args.seed},
             {"threads", config.threads},
             {"out", args.out_path}}},
           {"points", points}};
  std::cout << doc.dump(2) << "\n";
  return 0;
}

struct AnalyzeArgs {
  std::string trace_path;
  std::vector<double> levels{0.05};
  std::string out_path;
};

int run_analyze(const AnalyzeArgs& args) {
  neyman::Trace trace = neyman::load_trace_csv(args.trace_path);
  neyman::EffectEstimate est = neyman::variance_bound_estimate(trace);

  std::vector<neyman::IntervalEstimate> intervals;
  for (double level : args.levels) {
    intervals.push_back(neyman::chebyshev_interval(est, trace.size(), level));
    intervals.push_back(neyman::wald_interval(est, trace.size(), level));
  }

  json doc{{"spec_version", neyman::kSchemaVersion},
           {"config",
            {{"command", "analyze"},
             {"trace", args.trace_path},
             {"levels", args.levels}}},
           {"estimate", est},
           {"intervals", intervals}};
  emit_json(doc, args.out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "neyman-lab: sequential experiment designs that adapt treatment\n"
      "probabilities toward the variance-optimal allocation, with exact\n"
      "small-horizon verification and Monte Carlo studies.\n\n"
      "Design specs:\n"
      "  bernoulli:<p>                     fixed probability\n"
      "  clip-ogd[:eta=<x>,alpha=<x>]      online gradient descent with\n"
      "                                    shrinking clip window (defaults\n"
      "                                    tuned from the horizon)\n"
      "  etc:t0=<n|cbrt>                   explore-then-commit\n"
      "  neyman-oracle                     optimal fixed probability\n"};
  app.require_subcommand(1);

  DataArgs data_args;
  auto* data = app.add_subcommand(
      "data",
      "Generate or transform an outcome schedule CSV (header y1,y0).\n"
      "Transforms apply in order: impute, replicate, normalize, shuffle, "
      "flip-prefix.");
  auto* in_opt =
      data->add_option("--in", data_args.in_path,
                       "Input CSV: schedule (y1,y0) or observed column (y)");
  auto* gen_opt = data->add_option(
      "--gen", data_args.gen_kind,
      "Synthetic kind: iid-scaled, etc-adversarial, constant-effect");
  data->add_option("--t", data_args.horizon, "Horizon for --gen");
  data->add_option("--gen-seed", data_args.gen_seed, "Seed for --gen");
  data->add_option("--gen-params", data_args.gen_params,
                   "Generator parameters, e.g. a=0.25,b=1,lambda=2");
  data->add_option("--impute", data_args.impute,
                   "Rebuild treated arm from the control column: "
                   "tau=<x>,sigma=<x>[,seed=<n>]");
  data->add_option("--replicate", data_args.replicate,
                   "Concatenate this many copies of the schedule");
  data->add_flag("--normalize", data_args.normalize,
                 "Jointly min-max map outcomes onto [0,1]");
  data->add_option("--shuffle-seed", data_args.shuffle_seed,
                   "Shuffle unit order with this seed");
  data->add_option("--flip-prefix", data_args.flip_prefix,
                   "Swap the arms for the first N units");
  data->add_option("--out", data_args.out_path, "Output schedule CSV")
      ->required();
  in_opt->excludes(gen_opt);
  gen_opt->needs(data->get_option("--t"));

  ExactArgs exact_args;
  auto* exact = app.add_subcommand(
      "exact",
      "Enumerate every assignment path of a design on a small schedule;\n"
      "reports exact mean, variance, expected regret, and the\n"
      "regret-variance identity check.");
  exact->add_option("--data", exact_args.data_path, "Schedule CSV")
      ->required();
  exact->add_option("--design", exact_args.design, "Design spec")->required();
  exact->add_option("--cap", exact_args.cap,
                    "Refuse horizons above this (default 20)");
  exact->add_option("--out", exact_args.out_path, "Also write JSON here");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand(
      "simulate",
      "Monte Carlo study of one design on a schedule. Replication r always\n"
      "consumes RNG substream r, so results do not depend on --threads.");
  simulate->add_option("--data", sim_args.data_path, "Schedule CSV")
      ->required();
  simulate->add_option("--design", sim_args.design, "Design spec")->required();
  simulate->add_option("--reps", sim_args.reps, "Replication count")
      ->required();
  simulate->add_option("--seed", sim_args.seed, "Master seed")->required();
  simulate
      ->add_option("--levels", sim_args.levels,
                   "Interval levels to track, e.g. 0.05,0.1")
      ->delimiter(',');
  simulate
      ->add_option("--threads", sim_args.threads,
                   "Worker threads (0 = hardware)")
      ->envname("NEYMAN_LAB_THREADS");
  simulate->add_option("--trace-out", sim_args.trace_out,
                       "Write replication 0's trace CSV here");
  simulate->add_option("--out", sim_args.out_path, "Also write JSON here");

  CurveArgs curve_args;
  auto* curve = app.add_subcommand(
      "curve",
      "Scaled variance of several designs across growing schedule prefixes,\n"
      "next to the exact optimal and fair-coin variances (CSV out).");
  curve->add_option("--data", curve_args.data_path, "Schedule CSV")
      ->required();
  curve
      ->add_option("--designs", curve_args.designs,
                   "Design specs (repeat or space-separate)")
      ->required()
      ->take_all();
  curve->add_option("--t-grid", curve_args.t_grid, "Horizons, e.g. 256,1024")
      ->required()
      ->delimiter(',');
  curve->add_option("--reps", curve_args.reps, "Replications per point")
      ->required();
  curve->add_option("--seed", curve_args.seed, "Master seed")->required();
  curve
      ->add_option("--threads", curve_args.threads,
                   "Worker threads (0 = hardware)")
      ->envname("NEYMAN_LAB_THREADS");
  curve->add_option("--out", curve_args.out_path, "Output CSV")->required();

  AnalyzeArgs analyze_args;
  auto* analyze = app.add_subcommand(
      "analyze",
      "Effect estimate, variance bound, and confidence intervals from a\n"
      "recorded trace CSV (header p,z,y).");
  analyze->add_option("--trace", analyze_args.trace_path, "Trace CSV")
      ->required();
  analyze
      ->add_option("--levels", analyze_args.levels,
                   "Interval levels (default 0.05)")
      ->delimiter(',');
  analyze->add_option("--out", analyze_args.out_path, "Also write JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  auto started = std::chrono::steady_clock::now();
  int rc = 0;
  try {
    if (data->parsed()) {
      if (data_args.in_path.empty() && data_args.gen_kind.empty()) {
        std::cerr << "data: need --in or --gen\n";
        return 1;
      }
      rc = run_data(data_args);
    } else if (exact->parsed()) {
      rc = run_exact(exact_args);
    } else if (simulate->parsed()) {
      rc = run_simulate(sim_args);
    } else if (curve->parsed()) {
      rc = run_curve(curve_args);
    } else if (analyze->parsed()) {
      rc = run_analyze(analyze_args);
    }
  } catch (const neyman::SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  // Timing is deliberately kept out of the primary outputs so reruns of
  // the same invocation are byte-identical.
  std::chrono::duration<double> elapsed =
      std::chrono::steady_clock::now() - started;
  std::fprintf(stderr, "# completed in %.3f s\n", elapsed.count());
  return rc;
}
