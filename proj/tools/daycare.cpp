// daycare: generate, match, estimate and simulate daycare assignment markets.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "daycare/analysis.hpp"
#include "daycare/estimation.hpp"
#include "daycare/io.hpp"
#include "daycare/matching.hpp"
#include "daycare/synthetic.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace daycare;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitNoStable = 4;

struct RunConfig {
  std::string config_path;
  std::string market;
  std::string matching;
  std::string theta;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> families;
  std::string policy;
  std::string before = "0,25";
  std::string after = "160,160";
  std::string grid = "0:400:5";
  int threads = 0;
  int bootstrap = 0;
  int max_iters = 500;
  bool force = false;
  bool verify = false;
  bool individual = false;
  json file;
};

PolicyScenario parse_policy(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ConfigError("policy must be X,Y, got '" + text + "'");
  const auto x = parse_int(text.substr(0, comma), "policy");
  const auto y = parse_int(text.substr(comma + 1), "policy");
  if (x < 0 || y < 0) throw ConfigError("policy points must be non-negative");
  return {static_cast<int>(x), static_cast<int>(y), {}};
}

std::string policy_text(const PolicyScenario& p) {
  return std::to_string(p.simultaneous_points) + "," + std::to_string(p.incumbent_points);
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

// Values from the config file fill whatever the command line left unset.
void merge_config(RunConfig& rc, const CLI::App& cmd) {
  rc.file = load_config(rc.config_path);
  const json& f = rc.file;
  auto unset = [&](const char* flag) { return cmd.count(flag) == 0; };
  try {
    if (f.contains("seed") && unset("--seed")) rc.seed = f["seed"].get<std::uint64_t>();
    if (f.contains("families") && unset("--families")) rc.families = f["families"].get<std::size_t>();
    if (f.contains("policy") && unset("--policy")) rc.policy = f["policy"].get<std::string>();
    if (f.contains("before") && unset("--before")) rc.before = f["before"].get<std::string>();
    if (f.contains("after") && unset("--after")) rc.after = f["after"].get<std::string>();
    if (f.contains("grid") && unset("--grid")) rc.grid = f["grid"].get<std::string>();
    if (f.contains("threads") && unset("--threads")) rc.threads = f["threads"].get<int>();
    if (f.contains("bootstrap") && unset("--bootstrap")) rc.bootstrap = f["bootstrap"].get<int>();
    if (f.contains("max_iters") && unset("--max-iters")) rc.max_iters = f["max_iters"].get<int>();
  } catch (const json::exception& e) {
    throw ConfigError("config " + rc.config_path + ": " + e.what());
  }
}

SyntheticConfig synthetic_config(const RunConfig& rc) {
  SyntheticConfig c;
  const json& f = rc.file;
  try {
    if (f.contains("status_shares")) c.status_shares = f["status_shares"].get<std::array<double, 3>>();
    if (f.contains("licensed")) c.num_licensed = f["licensed"].get<std::size_t>();
    if (f.contains("nonlicensed")) c.num_nonlicensed = f["nonlicensed"].get<std::size_t>();
    if (f.contains("kindergartens")) c.num_kindergartens = f["kindergartens"].get<std::size_t>();
    if (f.contains("joint_share")) c.joint_share = f["joint_share"].get<double>();
    if (f.contains("covariate_share")) {
      c.covariate_share = f["covariate_share"].get<std::array<double, kNumCovariates>>();
    }
    if (f.contains("observation_policy")) {
      c.observation_policy = parse_policy(f["observation_policy"].get<std::string>());
    }
  } catch (const json::exception& e) {
    throw ConfigError("config " + rc.config_path + ": " + e.what());
  }
  if (rc.families) c.num_families = *rc.families;
  c.validate();
  return c;
}

std::string config_hash(const RunConfig& rc, const std::string& command) {
  json j = rc.file;
  j["command"] = command;
  j["seed"] = rc.seed ? json(*rc.seed) : json(nullptr);
  if (rc.families) j["families"] = *rc.families;
  j["policy"] = rc.policy;
  j["before"] = rc.before;
  j["after"] = rc.after;
  j["grid"] = rc.grid;
  j["bootstrap"] = rc.bootstrap;
  j["max_iters"] = rc.max_iters;
  j["individual"] = rc.individual;
  return fnv1a_hex(j.dump());
}

Metadata base_metadata(const RunConfig& rc, const std::string& command,
                       std::optional<std::uint64_t> seed) {
  Metadata m;
  m.set("tool", std::string("daycare ") + DAYCARE_VERSION);
  m.set("command", command);
  m.set("seed", seed ? std::to_string(*seed) : "none");
  m.set("config_hash", config_hash(rc, command));
  m.set("ordering_rule", std::string(kOrderingRuleVersion));
  return m;
}

void prepare_out(const RunConfig& rc) {
  std::error_code ec;
  fs::create_directories(rc.out, ec);
  if (ec) throw IoError("cannot create output directory " + rc.out + ": " + ec.message());
}

template <class Fn>
void emit(const RunConfig& rc, const std::string& name, const Metadata& meta, Fn&& body) {
  std::ostringstream os;
  os << format_metadata(meta);
  body(os);
  write_text_file(fs::path(rc.out) / name, os.str(), rc.force);
}

std::optional<std::uint64_t> run_seed(const RunConfig& rc, const Market& market) {
  return rc.seed ? rc.seed : market.rng_seed();
}

Market load_valid_market(const RunConfig& rc) {
  Market market = read_market(rc.market);
  const auto violations = validate_market(market);
  if (!violations.empty()) {
    for (const Violation& v : violations) std::cerr << v.entity << ": " << v.rule << '\n';
    throw DataError(std::to_string(violations.size()) + " validation violation(s) in " + rc.market);
  }
  return market;
}

void print_rates(const GroupRates& rates) {
  for (SiblingStatus s : kSiblingStatuses) {
    const auto r = rates[s];
    std::cout << "  " << to_string(s) << ": " << (r ? format_real(*r) : "n/a") << " ("
              << rates.families[static_cast<int>(s)] << " families)\n";
  }
}

int cmd_generate(RunConfig& rc) {
  const SyntheticConfig cfg = synthetic_config(rc);
  const std::uint64_t seed = rc.seed.value_or(1);
  const SyntheticMarket sm = generate_synthetic_market(cfg, default_true_theta(), seed);
  prepare_out(rc);
  Metadata meta = base_metadata(rc, "generate", seed);
  write_market(rc.out, sm.market, meta, rc.force);
  write_text_file(fs::path(rc.out) / "theta_true.txt", format_metadata(meta) + theta_to_text(sm.theta_true),
                  rc.force);
  Metadata mm = meta;
  mm.set("policy", policy_text(cfg.observation_policy));
  emit(rc, "observed_matching.csv", mm,
       [&](std::ostream& os) { write_matching(os, sm.observed, sm.market); });

  std::array<std::size_t, 3> counts{};
  for (std::size_t f = 0; f < sm.market.families().size(); ++f) {
    ++counts[static_cast<int>(sm.market.status(f))];
  }
  std::cout << "families " << sm.market.families().size() << ", children "
            << sm.market.children().size() << ", facilities " << sm.market.daycares().size() - 1
            << '\n';
  for (SiblingStatus s : kSiblingStatuses) {
    std::cout << "  " << to_string(s) << ": " << counts[static_cast<int>(s)] << '\n';
  }
  return kExitOk;
}

int cmd_validate(RunConfig& rc) {
  const Market market = read_market(rc.market);
  const auto violations = validate_market(market);
  for (const Violation& v : violations) std::cout << v.entity << ": " << v.rule << '\n';
  std::cout << violations.size() << " violation(s)\n";
  return violations.empty() ? kExitOk : kExitData;
}

int cmd_match(RunConfig& rc) {
  const Market market = load_valid_market(rc);
  const PolicyScenario policy = parse_policy(rc.policy.empty() ? "0,25" : rc.policy);
  const MechanismResult result = run_mechanism(market, policy);
  prepare_out(rc);
  Metadata meta = base_metadata(rc, "match", run_seed(rc, market));
  meta.set("policy", policy_text(policy));
  emit(rc, "matching.csv", meta,
       [&](std::ostream& os) { write_matching(os, result.matching, market); });
  emit(rc, "cutoffs.csv", meta,
       [&](std::ostream& os) { write_cutoffs(os, result.cutoffs, market); });
  const GroupRates rates = assignment_rates(result.matching, market);
  emit(rc, "rates.csv", meta, [&](std::ostream& os) {
    os << "group,families,rate\n";
    for (SiblingStatus s : kSiblingStatuses) {
      const auto r = rates[s];
      os << to_string(s) << ',' << rates.families[static_cast<int>(s)] << ','
         << (r ? format_real(*r) : "") << '\n';
    }
  });
  std::cout << "policy " << policy_text(policy) << ", repair iterations "
            << result.repair_iterations << '\n';
  print_rates(rates);

  if (rc.verify) {
    const auto coalitions =
        verify_stability(result.matching, market, policy, ReportedPreferences{});
    emit(rc, "stability.txt", meta, [&](std::ostream& os) {
      os << "blocking_coalitions=" << coalitions.size() << '\n';
      for (const auto& c : coalitions) {
        os << c.family.value << ' ' << to_string(c.tuple) << ' ' << c.witness << '\n';
      }
    });
    std::cout << "blocking coalitions: " << coalitions.size() << '\n';
    if (!coalitions.empty()) return kExitNoStable;
  }
  return kExitOk;
}

int cmd_estimate(RunConfig& rc) {
  const Market market = load_valid_market(rc);
  const fs::path matching_path =
      rc.matching.empty() ? fs::path(rc.market) / "observed_matching.csv" : fs::path(rc.matching);
  const Table table = read_table_file(matching_path);
  const Matching matching = matching_from_table(table, market);
  std::string policy_spec = rc.policy;
  if (policy_spec.empty()) policy_spec = table.metadata.get("policy").value_or("160,160");
  const PolicyScenario policy = parse_policy(policy_spec);

  FitOptions opts;
  opts.max_iters = rc.max_iters;
  opts.threads = rc.threads;
  const auto sets = build_choice_sets(market, matching, policy);
  const EstimationResult full = fit_full_model(sets, market, opts);
  std::optional<EstimationResult> indiv;
  if (rc.individual) indiv = fit_individual_model(market, matching, policy, opts);

  prepare_out(rc);
  Metadata meta = base_metadata(rc, "estimate", run_seed(rc, market));
  meta.set("policy", policy_text(policy));
  emit(rc, "parameters.csv", meta, [&](std::ostream& os) {
    write_parameter_table(os, full, indiv ? &*indiv : nullptr);
  });
  emit(rc, "convergence.log", meta, [&](std::ostream& os) {
    write_convergence_log(os, full);
    if (indiv) write_convergence_log(os, *indiv);
  });
  write_text_file(fs::path(rc.out) / "theta_hat.txt",
                  format_metadata(meta) + theta_to_text(full.theta_hat), rc.force);

  std::cout << "full model: loglik " << format_real(full.loglik) << ", iterations "
            << full.iterations << ", " << full.stop_reason << '\n';
  std::cout << "  kappa " << format_real(full.theta_hat.kappa) << '\n';
  if (indiv) {
    std::cout << "individual model: loglik " << format_real(indiv->loglik) << ", "
              << indiv->stop_reason << '\n';
    std::cout << "  kappa " << format_real(indiv->theta_hat.kappa) << '\n';
  }
  if (!full.converged || (indiv && !indiv->converged)) {
    std::cerr << "estimation did not converge\n";
    return kExitNumeric;
  }
  return kExitOk;
}

Theta read_theta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open theta file " + path);
  std::ostringstream body;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line[0] == '#') continue;
    body << line << '\n';
  }
  return theta_from_text(body.str());
}

int cmd_simulate(RunConfig& rc) {
  const Market market = load_valid_market(rc);
  const Theta theta =
      read_theta(rc.theta.empty() ? (fs::path(rc.market) / "theta_true.txt").string() : rc.theta);
  const GridSpec grid = GridSpec::parse(rc.grid);
  const auto policies = grid.policies();
  const auto results = simulate_policy_grid(market, theta, policies, rc.threads);
  const PolicyScenario before = parse_policy(rc.before);
  const PolicyScenario after = parse_policy(rc.after);
  const ScenarioEvaluation eb = evaluate_scenario(market, theta, before);
  const ScenarioEvaluation ea = evaluate_scenario(market, theta, after);
  const QuantileFit frontier = frontier_slope(results);

  std::size_t failed = 0;
  for (const auto& r : results) failed += r.failed;

  prepare_out(rc);
  Metadata meta = base_metadata(rc, "simulate", run_seed(rc, market));
  meta.set("grid", rc.grid);
  meta.set("scenarios", std::to_string(results.size()));
  meta.set("failed", std::to_string(failed));
  emit(rc, "grid.csv", meta, [&](std::ostream& os) { write_grid(os, results); });
  emit(rc, "frontier.csv", meta, [&](std::ostream& os) {
    write_quantile_fits(os, std::span<const QuantileFit>(&frontier, 1));
  });
  emit(rc, "heatmap.csv", meta,
       [&](std::ostream& os) { write_heatmap(os, welfare_heatmap(results)); });

  Metadata pair = base_metadata(rc, "simulate", run_seed(rc, market));
  pair.set("before", policy_text(before));
  pair.set("after", policy_text(after));
  emit(rc, "decomposition.csv", pair, [&](std::ostream& os) {
    write_decomposition(os, welfare_decomposition_table(eb.summary, ea.summary));
  });
  emit(rc, "heterogeneity.csv", pair, [&](std::ostream& os) {
    write_heterogeneity(os, heterogeneity_table(market, eb, ea));
  });
  Metadata split = base_metadata(rc, "simulate", run_seed(rc, market));
  split.set("policy", policy_text(before));
  emit(rc, "split_counterfactual.csv", split, [&](std::ostream& os) {
    write_split_counterfactual(
        os, split_reassignment_counterfactual(market, theta, eb.mechanism.matching, before));
  });

  std::cout << "scenarios " << results.size() << ", failed " << failed << '\n';
  if (frontier.slope) std::cout << "frontier slope " << format_real(*frontier.slope) << '\n';
  std::cout << "mean welfare before " << format_real(eb.summary.mean_welfare_km) << " km, after "
            << format_real(ea.summary.mean_welfare_km) << " km\n";
  return kExitOk;
}

int cmd_dispersion(RunConfig& rc) {
  const Market market = load_valid_market(rc);
  const std::uint64_t seed = rc.seed.value_or(kBootstrapSeed);
  const DispersionAnalysis d = dispersion_analysis(market, rc.bootstrap, seed);
  prepare_out(rc);
  Metadata meta = base_metadata(rc, "dispersion", seed);
  meta.set("bootstrap", std::to_string(rc.bootstrap));
  emit(rc, "dispersion_values.csv", meta,
       [&](std::ostream& os) { write_dispersion_values(os, d.values); });
  emit(rc, "dispersion_quantiles.csv", meta,
       [&](std::ostream& os) { write_quantile_fits(os, d.fits); });
  std::cout << d.values.size() << " families with two or more listed facilities\n";
  for (const QuantileFit& f : d.fits) {
    std::cout << "  tau " << format_real(f.tau) << ": slope "
              << (f.slope ? format_real(*f.slope) : "n/a") << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Daycare assignment markets: generation, matching, estimation, policy simulation"};
  app.set_version_flag("--version", std::string("daycare ") + DAYCARE_VERSION);
  app.require_subcommand(1);
  RunConfig rc;

  auto common = [&](CLI::App* cmd, bool needs_market) {
    cmd->add_option("--config", rc.config_path, "JSON run config; flags override its fields");
    cmd->add_option("--seed", rc.seed, "Random seed");
    cmd->add_option("--threads", rc.threads, "Worker cap (0 = all cores)");
    cmd->add_option("--out", rc.out, "Output directory");
    cmd->add_flag("--force", rc.force, "Overwrite existing outputs");
    if (needs_market) cmd->add_option("market", rc.market, "Market directory")->required();
  };

  auto* gen = app.add_subcommand("generate", "Write a synthetic market");
  common(gen, false);
  gen->add_option("--families", rc.families, "Number of families");

  auto* val = app.add_subcommand("validate", "Check market files against the model invariants");
  common(val, true);

  auto* match = app.add_subcommand("match", "Run the assignment mechanism");
  common(match, true);
  match->add_option("--policy", rc.policy, "Extra points X,Y for simultaneous and incumbent families");
  match->add_flag("--verify", rc.verify, "Check the result for blocking coalitions");

  auto* est = app.add_subcommand("estimate", "Fit the preference model");
  common(est, true);
  est->add_option("--matching", rc.matching, "Observed matching (default <market>/observed_matching.csv)");
  est->add_option("--policy", rc.policy, "Policy in force for the matching (default from its header)");
  est->add_flag("--individual", rc.individual, "Also fit the individual model");
  est->add_option("--max-iters", rc.max_iters, "Optimizer iteration cap");

  auto* sim = app.add_subcommand("simulate", "Policy grid, frontier and welfare tables");
  common(sim, true);
  sim->add_option("--theta", rc.theta, "Parameter file (default <market>/theta_true.txt)");
  sim->add_option("--grid", rc.grid, "MIN:MAX:STEP for both point axes");
  sim->add_option("--before", rc.before, "Baseline policy X,Y");
  sim->add_option("--after", rc.after, "Reform policy X,Y");

  auto* disp = app.add_subcommand("dispersion", "Geographic dispersion of listed facilities");
  common(disp, true);
  disp->add_option("--bootstrap", rc.bootstrap, "Bootstrap replications for standard errors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitData;
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    merge_config(rc, *cmd);
    if (cmd == gen) return cmd_generate(rc);
    if (cmd == val) return cmd_validate(rc);
    if (cmd == match) return cmd_match(rc);
    if (cmd == est) return cmd_estimate(rc);
    if (cmd == sim) return cmd_simulate(rc);
    return cmd_dispersion(rc);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NoStableMatching& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNoStable;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
