#include "daycare/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>
#include <random>

#include "daycare/geo.hpp"
#include "daycare/io.hpp"
#include "daycare/parallel.hpp"

namespace daycare {

namespace {

bool is_licensed(const Market& market, FacilityId id) {
  return id != kHome && market.facility(id).kind == FacilityKind::Licensed;
}

bool family_assigned(const Market& market, std::size_t family, const AssignmentTuple& tuple) {
  const auto& kids = market.family_children(family);
  for (std::size_t s = 0; s < tuple.size; ++s) {
    if (market.is_applying(kids[s]) && is_licensed(market, tuple[s])) return true;
  }
  return false;
}

UtilityBreakdown to_km(const UtilityBreakdown& b, const Theta& theta) {
  return {km_equivalent(b.U, theta), km_equivalent(b.Gamma, theta), b.dist_km,
          km_equivalent(b.V, theta)};
}

int welfare_group(SiblingStatus s) {
  switch (s) {
    case SiblingStatus::NoSiblings: return static_cast<int>(WelfareGroup::NoSiblings);
    case SiblingStatus::Simultaneous: return static_cast<int>(WelfareGroup::Simultaneous);
    case SiblingStatus::Incumbent: return static_cast<int>(WelfareGroup::Incumbent);
  }
  return 0;
}

void check_kappa(const Theta& theta) {
  if (!(theta.kappa > 0.0)) throw DomainError("kappa must be positive for km conversion");
}

// Shared by the direct pipeline and the grid so both aggregate identically.
ScenarioResult summarize(const Market& market, const PolicyScenario& policy,
                         std::span<const UtilityBreakdown> welfare,
                         const std::vector<char>& assigned) {
  ScenarioResult r;
  r.policy = policy;
  std::array<std::size_t, 3> hits{};
  for (std::size_t f = 0; f < welfare.size(); ++f) {
    const SiblingStatus s = market.status(f);
    const int si = static_cast<int>(s);
    ++r.rates.families[si];
    if (assigned[f]) ++hits[si];
    for (int g : {static_cast<int>(WelfareGroup::All), welfare_group(s)}) {
      GroupWelfare& w = r.welfare[g];
      ++w.n;
      w.V += welfare[f].V;
      w.U += welfare[f].U;
      w.Gamma += welfare[f].Gamma;
      w.dist_km += welfare[f].dist_km;
    }
  }
  for (int s = 0; s < 3; ++s) {
    if (r.rates.families[s] > 0) {
      r.rates.rate[s] = static_cast<double>(hits[s]) / static_cast<double>(r.rates.families[s]);
    }
  }
  for (GroupWelfare& w : r.welfare) {
    if (w.n == 0) continue;
    const double n = static_cast<double>(w.n);
    w.V /= n;
    w.U /= n;
    w.Gamma /= n;
    w.dist_km /= n;
  }
  r.mean_welfare_km = r.welfare[static_cast<int>(WelfareGroup::All)].V;
  r.inequality_sd = inequality_sd(r.rates.rate);
  return r;
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_real(*v) : std::string();
}

double sample_sd(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0));
}

struct GroupQuantiles {
  std::optional<double> q0;
  std::optional<double> q1;
};

GroupQuantiles binary_quantiles(std::span<const double> y, std::span<const bool> x,
                                std::span<const std::size_t> sample, double tau) {
  std::vector<double> g0, g1;
  for (std::size_t i : sample) (x[i] ? g1 : g0).push_back(y[i]);
  GroupQuantiles q;
  if (!g0.empty()) q.q0 = empirical_quantile(std::move(g0), tau);
  if (!g1.empty()) q.q1 = empirical_quantile(std::move(g1), tau);
  return q;
}

// Best line through observation p: the slope minimizing the pinball loss is a
// weighted quantile of the slopes to every other observation.
struct Rotation {
  bool ok = false;
  double intercept = 0.0;
  double slope = 0.0;
  double loss = std::numeric_limits<double>::infinity();
};

Rotation best_rotation(std::span<const double> y, std::span<const double> x, double tau,
                       std::size_t p) {
  struct Kink {
    double s;
    double w;
  };
  std::vector<Kink> kinks;
  kinks.reserve(x.size());
  double above = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - x[p];
    if (d == 0.0) continue;
    kinks.push_back({(y[i] - y[p]) / d, std::abs(d)});
    above += d > 0.0 ? d * tau : -d * (1.0 - tau);
  }
  Rotation r;
  if (kinks.empty()) return r;
  std::sort(kinks.begin(), kinks.end(), [](const Kink& a, const Kink& b) { return a.s < b.s; });
  double cum = 0.0;
  r.slope = kinks.back().s;
  for (const Kink& k : kinks) {
    cum += k.w;
    if (cum >= above) {
      r.slope = k.s;
      break;
    }
  }
  r.ok = true;
  r.intercept = y[p] - r.slope * x[p];
  r.loss = pinball_loss(y, x, r.intercept, r.slope, tau);
  return r;
}

}  // namespace

std::string_view to_string(WelfareGroup group) {
  switch (group) {
    case WelfareGroup::All: return "All";
    case WelfareGroup::Incumbent: return "Incumbent";
    case WelfareGroup::NoSiblings: return "NoSiblings";
    case WelfareGroup::Simultaneous: return "Simultaneous";
  }
  return "?";
}

std::optional<double> inequality_sd(const std::array<std::optional<double>, 3>& rates) {
  if (!rates[0] || !rates[1] || !rates[2]) return std::nullopt;
  return inequality_sd(std::array<double, 3>{*rates[0], *rates[1], *rates[2]});
}

double inequality_sd(std::array<double, 3> rates) {
  std::sort(rates.begin(), rates.end());
  const double mean = (rates[0] + rates[1] + rates[2]) / 3.0;
  double ss = 0.0;
  for (double r : rates) ss += (r - mean) * (r - mean);
  return std::sqrt(ss / 3.0);
}

std::vector<UtilityBreakdown> family_welfare(const Market& market, const Theta& theta,
                                             const Matching& matching) {
  check_kappa(theta);
  std::vector<UtilityBreakdown> out(market.families().size());
  for (std::size_t f = 0; f < out.size(); ++f) {
    out[f] = to_km(systematic_utility(market, f, matching.family_tuple(market, f), theta), theta);
  }
  return out;
}

ScenarioResult summarize_scenario(const Market& market, const PolicyScenario& policy,
                                  const Matching& matching,
                                  std::span<const UtilityBreakdown> welfare) {
  if (welfare.size() != market.families().size()) {
    throw DataError("welfare vector does not cover every family");
  }
  std::vector<char> assigned(welfare.size());
  for (std::size_t f = 0; f < welfare.size(); ++f) {
    assigned[f] = family_assigned(market, f, matching.family_tuple(market, f));
  }
  return summarize(market, policy, welfare, assigned);
}

ScenarioEvaluation evaluate_scenario(const Market& market, const Theta& theta,
                                     const PolicyScenario& policy) {
  ScenarioEvaluation e;
  e.mechanism = run_mechanism(market, policy);
  e.welfare = family_welfare(market, theta, e.mechanism.matching);
  e.summary = summarize_scenario(market, policy, e.mechanism.matching, e.welfare);
  return e;
}

GridSpec GridSpec::parse(std::string_view text) {
  GridSpec g;
  int* fields[3] = {&g.min, &g.max, &g.step};
  std::size_t start = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t end = i < 2 ? text.find(':', start) : text.size();
    if (end == std::string_view::npos) throw ConfigError("grid must be MIN:MAX:STEP");
    const std::string_view part = text.substr(start, end - start);
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), *fields[i]);
    if (ec != std::errc{} || ptr != part.data() + part.size() || part.empty()) {
      throw ConfigError("grid must be MIN:MAX:STEP, got '" + std::string(text) + "'");
    }
    start = end + 1;
  }
  if (g.min < 0 || g.max < g.min || g.step <= 0) {
    throw ConfigError("grid needs 0 <= MIN <= MAX and STEP > 0");
  }
  return g;
}

std::vector<PolicyScenario> GridSpec::policies() const {
  std::vector<PolicyScenario> out;
  for (int x = min; x <= max; x += step) {
    for (int y = min; y <= max; y += step) out.push_back({x, y, {}});
  }
  return out;
}

std::vector<ScenarioResult> simulate_policy_grid(const Market& market, const Theta& theta,
                                                 std::span<const PolicyScenario> policies,
                                                 int threads) {
  check_kappa(theta);
  const CompiledOrders compiled = compile_orders(market, induce_reported_orders(market));
  const std::size_t nf = market.families().size();

  // Every outcome is some tuple of the family's order, so welfare is tabulated once.
  std::vector<std::vector<UtilityBreakdown>> table(nf);
  std::vector<std::vector<char>> assigned(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    for (const AssignmentTuple& t : compiled.orders[f].tuples) {
      table[f].push_back(to_km(systematic_utility(market, f, t, theta), theta));
      assigned[f].push_back(family_assigned(market, f, t));
    }
  }

  std::vector<ScenarioResult> out(policies.size());
  parallel_for(policies.size(), threads, [&](std::size_t i) {
    try {
      const MechanismResult m = run_mechanism(market, policies[i], compiled);
      std::vector<UtilityBreakdown> welfare(nf);
      std::vector<char> hit(nf);
      for (std::size_t f = 0; f < nf; ++f) {
        welfare[f] = table[f][m.positions[f]];
        hit[f] = assigned[f][m.positions[f]];
      }
      out[i] = summarize(market, policies[i], welfare, hit);
    } catch (const NoStableMatching& e) {
      out[i].policy = policies[i];
      out[i].failed = true;
      out[i].failure = e.what();
    } catch (const CapacityViolation& e) {
      out[i].policy = policies[i];
      out[i].failed = true;
      out[i].failure = e.what();
    }
  });
  std::stable_sort(out.begin(), out.end(), [](const ScenarioResult& a, const ScenarioResult& b) {
    return std::pair(a.policy.simultaneous_points, a.policy.incumbent_points) <
           std::pair(b.policy.simultaneous_points, b.policy.incumbent_points);
  });
  return out;
}

std::vector<WelfareRow> welfare_decomposition_table(const ScenarioResult& before,
                                                    const ScenarioResult& after) {
  if (before.failed || after.failed) throw DataError("cannot decompose a failed scenario");
  std::vector<WelfareRow> rows;
  for (WelfareGroup g : kWelfareGroups) {
    const GroupWelfare& b = before.group(g);
    const GroupWelfare& a = after.group(g);
    if (a.n != b.n) {
      throw DataError("group " + std::string(to_string(g)) + " differs in size between scenarios");
    }
    WelfareRow r{g, a.n, b.V, a.V, a.V - b.V, a.U - b.U, a.Gamma - b.Gamma, a.dist_km - b.dist_km};
    if (std::abs(r.dV - (r.dU - r.dGamma - r.dDist)) >= 1e-9) {
      throw NumericError("welfare identity fails for group " + std::string(to_string(g)));
    }
    rows.push_back(r);
  }
  return rows;
}

double pinball_loss(std::span<const double> y, std::span<const double> x, double intercept,
                    double slope, double tau) {
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - intercept - slope * x[i];
    loss += r >= 0.0 ? tau * r : (tau - 1.0) * r;
  }
  return loss;
}

double empirical_quantile(std::vector<double> values, double tau) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("quantile level must lie in (0,1)");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (tau == 0.5 && n % 2 == 0) return 0.5 * (values[n / 2 - 1] + values[n / 2]);
  const auto k = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * tau));
  return values[std::max<std::size_t>(k, 1) - 1];
}

QuantileFit quantile_regression(std::span<const double> y, std::span<const bool> x, double tau,
                                int bootstrap_reps, std::uint64_t seed) {
  if (y.size() != x.size()) throw DomainError("y and x differ in length");
  if (y.size() < 10) throw DomainError("quantile regression needs at least 10 observations");
  QuantileFit fit;
  fit.tau = tau;
  fit.n = y.size();
  std::vector<std::size_t> all(y.size());
  std::iota(all.begin(), all.end(), 0);
  const GroupQuantiles q = binary_quantiles(y, x, all, tau);
  fit.intercept = q.q0;
  if (q.q0 && q.q1) fit.slope = *q.q1 - *q.q0;

  std::vector<double> xs(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) xs[i] = x[i] ? 1.0 : 0.0;
  if (fit.intercept) {
    fit.loss = pinball_loss(y, xs, *fit.intercept, fit.slope.value_or(0.0), tau);
  }

  if (bootstrap_reps > 0 && fit.intercept) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, y.size() - 1);
    std::vector<double> a, b;
    std::vector<std::size_t> sample(y.size());
    for (int rep = 0; rep < bootstrap_reps; ++rep) {
      for (auto& s : sample) s = pick(rng);
      const GroupQuantiles bq = binary_quantiles(y, x, sample, tau);
      if (!bq.q0) continue;
      a.push_back(*bq.q0);
      if (fit.slope && bq.q1) b.push_back(*bq.q1 - *bq.q0);
    }
    if (a.size() >= 2) fit.se_intercept = sample_sd(a);
    if (b.size() >= 2) fit.se_slope = sample_sd(b);
  }
  return fit;
}

QuantileFit quantile_regression_line(std::span<const double> y, std::span<const double> x,
                                     double tau) {
  if (y.size() != x.size()) throw DomainError("y and x differ in length");
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("quantile level must lie in (0,1)");
  QuantileFit fit;
  fit.tau = tau;
  fit.n = y.size();
  if (y.empty()) return fit;

  std::size_t start = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i] < x[start] || (x[i] == x[start] && y[i] < y[start])) start = i;
  }
  Rotation best = best_rotation(y, x, tau, start);
  if (!best.ok) {
    fit.intercept = empirical_quantile(std::vector<double>(y.begin(), y.end()), tau);
    fit.loss = pinball_loss(y, x, *fit.intercept, 0.0, tau);
    return fit;
  }

  // Walk between basic lines: the current line is optimal once no rotation
  // about any observation on it lowers the loss.
  auto better = [](const Rotation& r, const Rotation& cur) {
    return r.loss < cur.loss - 1e-12 * std::max(1.0, std::abs(cur.loss));
  };
  const std::size_t limit = 10 * y.size() + 10;
  bool settled = false;
  for (std::size_t iter = 0; iter < limit && !settled; ++iter) {
    settled = true;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double resid = y[i] - best.intercept - best.slope * x[i];
      if (std::abs(resid) > 1e-10 * std::max(1.0, std::abs(y[i]))) continue;
      const Rotation r = best_rotation(y, x, tau, i);
      if (r.ok && better(r, best)) {
        best = r;
        settled = false;
        break;
      }
    }
  }
  if (!settled) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      const Rotation r = best_rotation(y, x, tau, i);
      if (r.ok && better(r, best)) best = r;
    }
  }
  fit.intercept = best.intercept;
  fit.slope = best.slope;
  fit.loss = best.loss;
  return fit;
}

QuantileFit frontier_slope(std::span<const ScenarioResult> results) {
  std::vector<double> y, x;
  for (const ScenarioResult& r : results) {
    if (r.failed || !r.inequality_sd) continue;
    x.push_back(r.mean_welfare_km);
    y.push_back(*r.inequality_sd);
  }
  return quantile_regression_line(y, x, kFrontierTau);
}

std::vector<double> percentile_ranks(std::span<const std::int64_t> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double pct = 100.0 * (static_cast<double>(i) + 0.5 * static_cast<double>(j - i)) /
                       static_cast<double>(n);
    for (std::size_t k = i; k < j; ++k) out[order[k]] = pct;
    i = j;
  }
  return out;
}

SplitCounterfactual split_reassignment_counterfactual(const Market& market, const Theta& theta,
                                                      const Matching& matching,
                                                      const PolicyScenario& policy) {
  check_kappa(theta);
  std::vector<std::size_t> group;
  std::vector<std::int64_t> scores;
  for (std::size_t f = 0; f < market.families().size(); ++f) {
    if (market.status(f) != SiblingStatus::Simultaneous) continue;
    group.push_back(f);
    scores.push_back(effective_score(market, f, policy));
  }
  const std::vector<double> pct = percentile_ranks(scores);

  SplitCounterfactual out;
  for (int b = 0; b < 10; ++b) out.bins.push_back({10 * b, 10 * b + 10, 0, 0.0, 0.0, 0.0});
  for (std::size_t gi = 0; gi < group.size(); ++gi) {
    const std::size_t f = group[gi];
    const Family& fam = market.families()[f];
    const auto& kids = market.family_children(f);
    if (!fam.joint_required || kids.size() != 2) continue;
    const AssignmentTuple base = matching.family_tuple(market, f);
    if (base[0] != base[1] || !is_licensed(market, base[0])) continue;
    const auto r0 = rank_in_rol(market, kids[0], base[0]);
    const auto r1 = rank_in_rol(market, kids[1], base[1]);
    if (!r0 || !r1 || std::max(*r0, *r1) < 2) continue;

    std::size_t moved;
    if (*r0 != *r1) {
      moved = *r0 > *r1 ? 0 : 1;
    } else {
      moved = market.children()[kids[0]].grade < market.children()[kids[1]].grade ? 0 : 1;
    }
    AssignmentTuple cf = base;
    cf[moved] = market.rol(kids[moved]).front();

    const UtilityBreakdown b0 = to_km(systematic_utility(market, f, base, theta), theta);
    const UtilityBreakdown b1 = to_km(systematic_utility(market, f, cf, theta), theta);
    SplitFamilyEffect e{fam.id, pct[gi], moved, base, cf, b1.U - b0.U, -(b1.Gamma - b0.Gamma),
                        -(b1.dist_km - b0.dist_km)};
    SplitBin& bin = out.bins[std::min(9, static_cast<int>(e.percentile / 10.0))];
    ++bin.n;
    bin.dU += e.dU;
    bin.dGamma += e.dGamma;
    bin.dDist += e.dDist;
    out.families.push_back(e);
  }
  if (out.families.empty()) {
    out.bins.clear();
    return out;
  }
  for (SplitBin& bin : out.bins) {
    if (bin.n == 0) continue;
    const double n = static_cast<double>(bin.n);
    bin.dU /= n;
    bin.dGamma /= n;
    bin.dDist /= n;
  }
  return out;
}

std::vector<HeterogeneityRow> heterogeneity_table(const Market& market,
                                                  const ScenarioEvaluation& before,
                                                  const ScenarioEvaluation& after) {
  const std::size_t nf = market.families().size();
  if (before.welfare.size() != nf || after.welfare.size() != nf) {
    throw DataError("scenario evaluations do not match the market");
  }
  std::vector<std::int64_t> sb(nf), sa(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    sb[f] = effective_score(market, f, before.summary.policy);
    sa[f] = effective_score(market, f, after.summary.policy);
  }
  const std::vector<double> pb = percentile_ranks(sb);
  const std::vector<double> pa = percentile_ranks(sa);

  std::vector<HeterogeneityRow> rows;
  for (SiblingStatus status : {SiblingStatus::NoSiblings, SiblingStatus::Simultaneous,
                               SiblingStatus::Incumbent}) {
    std::vector<std::size_t> members;
    for (std::size_t f = 0; f < nf; ++f) {
      if (market.status(f) == status) members.push_back(f);
    }
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      return sa[a] != sa[b] ? sa[a] < sa[b] : market.families()[a].id < market.families()[b].id;
    });
    std::array<std::vector<std::size_t>, 4> quartiles;
    for (std::size_t k = 0; k < members.size(); ++k) {
      quartiles[4 * k / members.size()].push_back(members[k]);
    }
    for (int q = 0; q < 4; ++q) {
      HeterogeneityRow row{status, q + 1, quartiles[q].size(), {}, {}, {}, {}};
      if (!quartiles[q].empty()) {
        double s_pb = 0, s_pa = 0, s_wb = 0, s_wa = 0;
        for (std::size_t f : quartiles[q]) {
          s_pb += pb[f];
          s_pa += pa[f];
          s_wb += before.welfare[f].V;
          s_wa += after.welfare[f].V;
        }
        const double n = static_cast<double>(row.n);
        row.percentile_before = s_pb / n;
        row.percentile_after = s_pa / n;
        row.welfare_before = s_wb / n;
        row.welfare_after = s_wa / n;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

DispersionAnalysis dispersion_analysis(const Market& market, int bootstrap_reps,
                                       std::uint64_t seed) {
  DispersionAnalysis out;
  std::vector<double> y;
  std::vector<char> joint;
  for (std::size_t f = 0; f < market.families().size(); ++f) {
    std::vector<FacilityId> listed;
    for (std::size_t c : market.family_children(f)) {
      for (FacilityId d : market.rol(c)) {
        if (std::find(listed.begin(), listed.end(), d) == listed.end()) listed.push_back(d);
      }
    }
    if (listed.size() < 2) continue;
    const double disp = rol_mean_pairwise_dispersion(listed, market);
    const Family& fam = market.families()[f];
    std::string label;
    switch (market.status(f)) {
      case SiblingStatus::NoSiblings: label = "no_siblings"; break;
      case SiblingStatus::Incumbent: label = "incumbent"; break;
      case SiblingStatus::Simultaneous:
        label = fam.joint_required ? "simultaneous_joint" : "simultaneous_nonjoint";
        y.push_back(disp);
        joint.push_back(fam.joint_required);
        break;
    }
    out.values.push_back({label, fam.id, disp});
  }
  if (y.size() >= 10) {
    auto x = std::make_unique<bool[]>(joint.size());
    std::copy(joint.begin(), joint.end(), x.get());
    for (double tau : kDispersionTaus) {
      out.fits.push_back(quantile_regression(y, std::span<const bool>(x.get(), joint.size()), tau,
                                             bootstrap_reps, seed));
    }
  }
  return out;
}

std::vector<HeatmapCell> welfare_heatmap(std::span<const ScenarioResult> results, int bin_width) {
  if (bin_width <= 0) throw ConfigError("heatmap bin width must be positive");
  std::map<std::pair<int, int>, HeatmapCell> cells;
  for (const ScenarioResult& r : results) {
    if (r.failed) continue;
    const int bx = r.policy.simultaneous_points / bin_width * bin_width;
    const int by = r.policy.incumbent_points / bin_width * bin_width;
    HeatmapCell& c = cells[{bx, by}];
    c.x = bx;
    c.y = by;
    ++c.n;
    c.mean_welfare_km += r.mean_welfare_km;
  }
  std::vector<HeatmapCell> out;
  for (auto& [key, c] : cells) {
    c.mean_welfare_km /= static_cast<double>(c.n);
    out.push_back(c);
  }
  return out;
}

void write_grid(std::ostream& out, std::span<const ScenarioResult> results) {
  out << "x,y,mean_welfare_km,rate_nosib,rate_sim,rate_inc,inequality_sd,flags\n";
  for (const ScenarioResult& r : results) {
    out << r.policy.simultaneous_points << ',' << r.policy.incumbent_points << ',';
    if (r.failed) {
      out << ",,,,,failed\n";
      continue;
    }
    out << format_real(r.mean_welfare_km) << ','
        << format_optional(r.rates[SiblingStatus::NoSiblings]) << ','
        << format_optional(r.rates[SiblingStatus::Simultaneous]) << ','
        << format_optional(r.rates[SiblingStatus::Incumbent]) << ','
        << format_optional(r.inequality_sd) << ",ok\n";
  }
}

void write_decomposition(std::ostream& out, std::span<const WelfareRow> rows) {
  out << "group,n,before,after,dV,dU,dGamma,dDist\n";
  for (const WelfareRow& r : rows) {
    out << to_string(r.group) << ',' << r.n << ',' << format_real(r.before) << ','
        << format_real(r.after) << ',' << format_real(r.dV) << ',' << format_real(r.dU) << ','
        << format_real(r.dGamma) << ',' << format_real(r.dDist) << '\n';
  }
}

void write_heterogeneity(std::ostream& out, std::span<const HeterogeneityRow> rows) {
  out << "status,quartile,n,percentile_before,percentile_after,percentile_diff,"
         "welfare_before,welfare_after,welfare_diff\n";
  auto diff = [](const std::optional<double>& a, const std::optional<double>& b) {
    return a && b ? std::optional<double>(*b - *a) : std::nullopt;
  };
  for (const HeterogeneityRow& r : rows) {
    out << to_string(r.status) << ",Q" << r.quartile << ',' << r.n << ','
        << format_optional(r.percentile_before) << ',' << format_optional(r.percentile_after)
        << ',' << format_optional(diff(r.percentile_before, r.percentile_after)) << ','
        << format_optional(r.welfare_before) << ',' << format_optional(r.welfare_after) << ','
        << format_optional(diff(r.welfare_before, r.welfare_after)) << '\n';
  }
}

void write_split_counterfactual(std::ostream& out, const SplitCounterfactual& result) {
  out << "percentile_lower,percentile_upper,n,dU,dGamma,dDist,dV\n";
  for (const SplitBin& b : result.bins) {
    out << b.lower << ',' << b.upper << ',' << b.n << ',';
    if (b.n == 0) {
      out << ",,,\n";
      continue;
    }
    out << format_real(b.dU) << ',' << format_real(b.dGamma) << ',' << format_real(b.dDist) << ','
        << format_real(b.dU + b.dGamma + b.dDist) << '\n';
  }
}

void write_quantile_fits(std::ostream& out, std::span<const QuantileFit> fits) {
  out << "tau,intercept,se_intercept,slope,se_slope,n,loss\n";
  for (const QuantileFit& f : fits) {
    out << format_real(f.tau) << ',' << format_optional(f.intercept) << ','
        << format_optional(f.se_intercept) << ',' << format_optional(f.slope) << ','
        << format_optional(f.se_slope) << ',' << f.n << ',' << format_real(f.loss) << '\n';
  }
}

void write_dispersion_values(std::ostream& out, std::span<const DispersionValue> values) {
  out << "group,family_id,dispersion_km\n";
  for (const DispersionValue& v : values) {
    out << v.group << ',' << v.family.value << ',' << format_real(v.dispersion_km) << '\n';
  }
}

void write_heatmap(std::ostream& out, std::span<const HeatmapCell> cells) {
  out << "x_bin,y_bin,n,mean_welfare_km\n";
  for (const HeatmapCell& c : cells) {
    out << c.x << ',' << c.y << ',' << c.n << ',' << format_real(c.mean_welfare_km) << '\n';
  }
}

}  // namespace daycare
