#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "daycare/estimation.hpp"
#include "daycare/synthetic.hpp"

using namespace daycare;

namespace {

SyntheticMarket small_market(std::size_t families, std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.num_families = families;
  cfg.num_licensed = 12;
  cfg.num_nonlicensed = 6;
  cfg.num_kindergartens = 6;
  return generate_synthetic_market(cfg, default_true_theta(), seed);
}

double oracle_loglik(const Market& m, const Theta& theta, const std::vector<ChoiceSet>& sets) {
  double ll = 0.0;
  for (const ChoiceSet& s : sets) {
    std::vector<double> v;
    for (const auto& t : s.tuples) v.push_back(systematic_utility(m, s.family_index, t, theta).V);
    const double top = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += std::exp(x - top);
    ll += v[s.chosen] - top - std::log(sum);
  }
  return ll;
}

}  // namespace

TEST_CASE("parameter layout names and packing") {
  const SyntheticMarket sm = small_market(60, 1);
  const ParameterLayout full = full_layout(sm.market);
  const ParameterLayout indiv = individual_layout(sm.market);
  CHECK(full.size() == 5 + 12 + 2 + 5 + 6 + 1);
  CHECK(indiv.size() == full.size() - 6);
  const auto names = full.names();
  CHECK(names.front() == "alpha_age_1");
  CHECK(names[5] == "alpha_fac_1");
  CHECK(names[full.gamma0()] == "gamma_0");
  CHECK(names.back() == "kappa");
  CHECK(full.unpack(full.pack(sm.theta_true)) == sm.theta_true);

  Theta no_gamma = sm.theta_true;
  no_gamma.gamma0 = 0.0;
  no_gamma.gamma = {};
  CHECK(indiv.unpack(indiv.pack(sm.theta_true)) == no_gamma);
}

TEST_CASE("compiled likelihood matches a direct logit computation") {
  const SyntheticMarket sm = small_market(120, 2);
  const auto sets = build_choice_sets(sm.market, sm.observed, PolicyScenario::after_reform());
  const double ll = log_likelihood(sm.theta_true, sets, sm.market);
  CHECK(ll == doctest::Approx(oracle_loglik(sm.market, sm.theta_true, sets)).epsilon(1e-12));
  CHECK(ll < 0.0);
}

TEST_CASE("probabilities normalize and gradient matches finite differences") {
  const SyntheticMarket sm = small_market(100, 3);
  const auto sets = build_choice_sets(sm.market, sm.observed, PolicyScenario::after_reform());
  LikelihoodProblem problem(sm.market, sets, layout_for(sm.market, sets), 1);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> noise(0.0, 0.3);
  Eigen::VectorXd x = problem.layout().pack(sm.theta_true);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += noise(rng);

  for (std::size_t u = 0; u < problem.num_units(); ++u) {
    const auto p = problem.probabilities(x, u);
    CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) < 1e-12);
  }

  Eigen::VectorXd g;
  problem.evaluate(x, &g);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
    Eigen::VectorXd up = x, dn = x;
    up[i] += h;
    dn[i] -= h;
    const double fd = (problem.value(up) - problem.value(dn)) / (2 * h);
    CHECK(std::abs(fd - g[i]) <= 1e-6 * std::max(1.0, std::abs(g[i])));
  }
}

TEST_CASE("parallel evaluation is bitwise identical to serial") {
  const SyntheticMarket sm = small_market(300, 4);
  const auto sets = build_choice_sets(sm.market, sm.observed, PolicyScenario::after_reform());
  LikelihoodProblem one(sm.market, sets, layout_for(sm.market, sets), 1);
  LikelihoodProblem many(sm.market, sets, layout_for(sm.market, sets), 4);
  const Eigen::VectorXd x = one.layout().pack(sm.theta_true);
  Eigen::VectorXd g1, g4;
  CHECK(one.evaluate(x, &g1) == many.evaluate(x, &g4));
  CHECK(g1 == g4);
}

TEST_CASE("full model converges on a small synthetic market") {
  const SyntheticMarket sm = small_market(400, 5);
  const auto sets = build_choice_sets(sm.market, sm.observed, PolicyScenario::after_reform());
  FitOptions opts;
  opts.threads = 1;
  const EstimationResult r = fit_full_model(sets, sm.market, opts);
  CHECK(r.converged);
  CHECK(r.gradient_norm < 1e-4);
  CHECK(r.names.size() == r.estimates.size());
  CHECK(r.estimate("kappa") > 0.0);
  REQUIRE(r.se("kappa"));
  CHECK(*r.se("kappa") > 0.0);
  CHECK(r.loglik >= log_likelihood(sm.theta_true, sets, sm.market));
  CHECK_THROWS_AS(r.estimate("nope"), LookupError);
}

TEST_CASE("individual model has one unit per applicant and no split terms") {
  const SyntheticMarket sm = small_market(150, 6);
  const auto sets =
      build_individual_choice_sets(sm.market, sm.observed, PolicyScenario::after_reform());
  std::size_t applicants = 0;
  for (std::size_t c = 0; c < sm.market.children().size(); ++c) {
    applicants += sm.market.is_applying(c);
  }
  CHECK(sets.size() == applicants);
  for (const auto& s : sets) {
    CHECK(s.child);
    CHECK(s.tuples.front().size == 1);
  }
  CHECK_FALSE(layout_for(sm.market, sets).has_gamma());
}

TEST_CASE("an observed tuple outside the feasible set is a data error") {
  const SyntheticMarket sm = small_market(80, 7);
  Matching mu = sm.observed;
  const PolicyScenario policy = PolicyScenario::after_reform();
  const CutoffTable cutoffs = compute_cutoffs(mu, sm.market, policy);
  // Place an applicant at a licensed facility whose cell is closed to them.
  for (std::size_t c = 0; c < sm.market.children().size(); ++c) {
    if (!sm.market.is_applying(c)) continue;
    const std::size_t f = sm.market.child_family(c);
    const Priority p = family_priority(sm.market, f, policy);
    for (std::size_t d : sm.market.licensed()) {
      const int g = sm.market.children()[c].grade.value();
      if (cutoffs.clears(sm.market, d, g, p)) continue;
      mu.assign(c, sm.market.daycares()[d].id);
      CHECK_THROWS_AS(build_choice_set(sm.market, f, cutoffs, mu, policy), DataError);
      return;
    }
  }
  FAIL("no closed cell found");
}
