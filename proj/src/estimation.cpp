#include "daycare/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "daycare/geo.hpp"
#include "daycare/io.hpp"
#include "daycare/parallel.hpp"

namespace daycare {
namespace {

constexpr std::size_t kBlockSize = 64;

FacilityId pooled(const Market& market, std::size_t family, FacilityId d) {
  const FacilityKind kind = market.facility(d).kind;
  if (kind != FacilityKind::Nonlicensed && kind != FacilityKind::Kindergarten) return d;
  auto nearest = market.nearest_of_kind(family, kind);
  return nearest ? market.daycares()[*nearest].id : d;
}

/// Licensed facilities the family clears for this grade, then the outside options.
std::vector<FacilityId> slot_universe(const Market& market, std::size_t family, int grade,
                                      const CutoffTable& cutoffs, const Priority& p) {
  std::vector<FacilityId> out;
  for (std::size_t d : market.licensed()) {
    if (cutoffs.clears(market, d, grade, p)) out.push_back(market.daycares()[d].id);
  }
  out.push_back(kHome);
  for (FacilityKind kind : {FacilityKind::Nonlicensed, FacilityKind::Kindergarten}) {
    if (auto d = market.nearest_of_kind(family, kind)) out.push_back(market.daycares()[*d].id);
  }
  return out;
}

std::size_t locate_chosen(const ChoiceSet& set, const AssignmentTuple& chosen) {
  auto it = std::find(set.tuples.begin(), set.tuples.end(), chosen);
  if (it == set.tuples.end()) {
    throw DataError("family " + std::to_string(set.family.value) + ": observed tuple " +
                    to_string(chosen) + " is infeasible under the cutoffs");
  }
  return static_cast<std::size_t>(it - set.tuples.begin());
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

}  // namespace

ParameterLayout::ParameterLayout(std::vector<FacilityId> facilities, bool include_gamma)
    : facilities_(std::move(facilities)), include_gamma_(include_gamma) {
  std::sort(facilities_.begin(), facilities_.end());
}

std::vector<std::string> ParameterLayout::names() const {
  std::vector<std::string> out(size());
  for (int g = 1; g < kNumGrades; ++g) out[age(g)] = "alpha_age_" + std::to_string(g);
  for (std::size_t i = 0; i < facilities_.size(); ++i) {
    out[facility(i)] = "alpha_fac_" + std::to_string(facilities_[i].value);
  }
  out[alpha_nonlicensed()] = "alpha_nonlicensed";
  out[alpha_kindergarten()] = "alpha_kindergarten";
  for (int k = 0; k < kNumCovariates; ++k) out[beta(k)] = "beta_" + std::string(kCovariateNames[k]);
  if (include_gamma_) {
    out[gamma0()] = "gamma_0";
    for (int k = 0; k < kNumCovariates; ++k) {
      out[gamma(k)] = "gamma_" + std::string(kCovariateNames[k]);
    }
  }
  out[kappa()] = "kappa";
  return out;
}

Eigen::VectorXd ParameterLayout::pack(const Theta& theta) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
  for (int g = 1; g < kNumGrades; ++g) x[age(g)] = theta.age[g];
  for (std::size_t i = 0; i < facilities_.size(); ++i) {
    auto it = theta.facility.find(facilities_[i]);
    if (it != theta.facility.end()) x[facility(i)] = it->second;
  }
  x[alpha_nonlicensed()] = theta.alpha_nonlicensed;
  x[alpha_kindergarten()] = theta.alpha_kindergarten;
  for (int k = 0; k < kNumCovariates; ++k) x[beta(k)] = theta.beta[k];
  if (include_gamma_) {
    x[gamma0()] = theta.gamma0;
    for (int k = 0; k < kNumCovariates; ++k) x[gamma(k)] = theta.gamma[k];
  }
  x[kappa()] = theta.kappa;
  return x;
}

Theta ParameterLayout::unpack(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != size()) throw DomainError("parameter vector size mismatch");
  Theta t;
  for (int g = 1; g < kNumGrades; ++g) t.age[g] = x[age(g)];
  for (std::size_t i = 0; i < facilities_.size(); ++i) t.facility[facilities_[i]] = x[facility(i)];
  t.alpha_nonlicensed = x[alpha_nonlicensed()];
  t.alpha_kindergarten = x[alpha_kindergarten()];
  for (int k = 0; k < kNumCovariates; ++k) t.beta[k] = x[beta(k)];
  if (include_gamma_) {
    t.gamma0 = x[gamma0()];
    for (int k = 0; k < kNumCovariates; ++k) t.gamma[k] = x[gamma(k)];
  }
  t.kappa = x[kappa()];
  return t;
}

namespace {

std::vector<FacilityId> licensed_ids(const Market& market) {
  std::vector<FacilityId> ids;
  for (std::size_t d : market.licensed()) ids.push_back(market.daycares()[d].id);
  return ids;
}

}  // namespace

ParameterLayout full_layout(const Market& market) { return {licensed_ids(market), true}; }
ParameterLayout individual_layout(const Market& market) { return {licensed_ids(market), false}; }

ParameterLayout layout_for(const Market& market, std::span<const ChoiceSet> sets) {
  const bool individual =
      !sets.empty() && std::all_of(sets.begin(), sets.end(), [](const ChoiceSet& s) {
        return s.child.has_value();
      });
  return individual ? individual_layout(market) : full_layout(market);
}

ChoiceSet build_choice_set(const Market& market, std::size_t family, const CutoffTable& cutoffs,
                           const Matching& matching, const PolicyScenario& policy) {
  const Priority p = family_priority(market, family, policy);
  const auto& kids = market.family_children(family);
  ChoiceSet set;
  set.family = market.families()[family].id;
  set.family_index = family;

  std::array<std::vector<FacilityId>, 2> options;
  AssignmentTuple chosen = matching.family_tuple(market, family);
  for (std::size_t s = 0; s < kids.size(); ++s) {
    if (!market.is_applying(kids[s])) {
      options[s] = {market.children()[kids[s]].current_placement};
      continue;
    }
    options[s] = slot_universe(market, family, market.children()[kids[s]].grade.value(), cutoffs, p);
    chosen[s] = pooled(market, family, chosen[s]);
  }
  if (kids.size() == 1) {
    for (FacilityId a : options[0]) set.tuples.push_back(AssignmentTuple{a});
  } else {
    for (FacilityId a : options[0]) {
      for (FacilityId b : options[1]) set.tuples.push_back(AssignmentTuple{a, b});
    }
  }
  set.chosen = locate_chosen(set, chosen);
  return set;
}

std::vector<ChoiceSet> build_choice_sets(const Market& market, const Matching& matching,
                                         const PolicyScenario& policy) {
  const CutoffTable cutoffs = compute_cutoffs(matching, market, policy);
  std::vector<ChoiceSet> out;
  out.reserve(market.families().size());
  for (std::size_t f = 0; f < market.families().size(); ++f) {
    out.push_back(build_choice_set(market, f, cutoffs, matching, policy));
  }
  return out;
}

std::vector<ChoiceSet> build_individual_choice_sets(const Market& market, const Matching& matching,
                                                    const PolicyScenario& policy) {
  const CutoffTable cutoffs = compute_cutoffs(matching, market, policy);
  std::vector<ChoiceSet> out;
  for (std::size_t f = 0; f < market.families().size(); ++f) {
    const Priority p = family_priority(market, f, policy);
    for (std::size_t c : market.family_children(f)) {
      if (!market.is_applying(c)) continue;
      ChoiceSet set;
      set.family = market.families()[f].id;
      set.family_index = f;
      set.child = c;
      for (FacilityId d :
           slot_universe(market, f, market.children()[c].grade.value(), cutoffs, p)) {
        set.tuples.push_back(AssignmentTuple{d});
      }
      set.chosen = locate_chosen(set, AssignmentTuple{pooled(market, f, matching[c])});
      out.push_back(std::move(set));
    }
  }
  return out;
}

struct LikelihoodProblem::Data {
  struct Alternative {
    std::array<std::int32_t, 2> facility{-1, -1};
    std::array<std::int32_t, 2> age{-1, -1};
    std::uint8_t nonhome = 0;
    bool split = false;
    double dist = 0.0;
  };
  struct Unit {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t chosen = 0;
    FamilyId family;
    Covariates z{};
  };

  ParameterLayout layout;
  std::vector<Alternative> alternatives;
  std::vector<Unit> units;
  int threads = 0;

  /// Log-likelihood of units [first, last); gradient accumulated when non-null.
  double block(const Eigen::VectorXd& x, std::size_t first, std::size_t last,
               Eigen::VectorXd* grad, std::vector<double>& v) const {
    double ll = 0.0;
    for (std::size_t u = first; u < last; ++u) {
      const Unit& unit = units[u];
      const double zb = covariate_shift(unit.z, beta_of(x));
      const double zg = layout.has_gamma() ? x[layout.gamma0()] + covariate_shift(unit.z, gamma_of(x)) : 0.0;
      const double kappa = x[layout.kappa()];
      const std::size_t n = unit.end - unit.begin;
      v.resize(n);
      double vmax = -std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < n; ++t) {
        const Alternative& a = alternatives[unit.begin + t];
        double value = a.nonhome * zb - kappa * a.dist;
        for (int s = 0; s < 2; ++s) {
          if (a.facility[s] >= 0) value += x[a.facility[s]];
          if (a.age[s] >= 0) value += x[a.age[s]];
        }
        if (a.split) value -= zg;
        if (!std::isfinite(value)) {
          throw NumericError("non-finite utility for family " + std::to_string(unit.family.value));
        }
        v[t] = value;
        vmax = std::max(vmax, value);
      }
      double sum = 0.0;
      for (std::size_t t = 0; t < n; ++t) sum += std::exp(v[t] - vmax);
      const double lse = vmax + std::log(sum);
      ll += v[unit.chosen] - lse;
      if (!grad) continue;

      double sb = 0.0, sg = 0.0, sd = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        const double w = (t == unit.chosen ? 1.0 : 0.0) - std::exp(v[t] - lse);
        const Alternative& a = alternatives[unit.begin + t];
        for (int s = 0; s < 2; ++s) {
          if (a.facility[s] >= 0) (*grad)[a.facility[s]] += w;
          if (a.age[s] >= 0) (*grad)[a.age[s]] += w;
        }
        sb += w * a.nonhome;
        if (a.split) sg += w;
        sd += w * a.dist;
      }
      for (int k = 0; k < kNumCovariates; ++k) {
        if (unit.z[k]) (*grad)[layout.beta(k)] += sb;
      }
      if (layout.has_gamma()) {
        (*grad)[layout.gamma0()] -= sg;
        for (int k = 0; k < kNumCovariates; ++k) {
          if (unit.z[k]) (*grad)[layout.gamma(k)] -= sg;
        }
      }
      (*grad)[layout.kappa()] -= sd;
    }
    return ll;
  }

  std::array<double, kNumCovariates> beta_of(const Eigen::VectorXd& x) const {
    std::array<double, kNumCovariates> b{};
    for (int k = 0; k < kNumCovariates; ++k) b[k] = x[layout.beta(k)];
    return b;
  }
  std::array<double, kNumCovariates> gamma_of(const Eigen::VectorXd& x) const {
    std::array<double, kNumCovariates> g{};
    for (int k = 0; k < kNumCovariates; ++k) g[k] = x[layout.gamma(k)];
    return g;
  }

  /// Dense feature vector of one alternative.
  void features(const Unit& unit, const Alternative& a, std::vector<double>& out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (int s = 0; s < 2; ++s) {
      if (a.facility[s] >= 0) out[a.facility[s]] += 1.0;
      if (a.age[s] >= 0) out[a.age[s]] += 1.0;
    }
    for (int k = 0; k < kNumCovariates; ++k) {
      if (unit.z[k]) out[layout.beta(k)] += a.nonhome;
    }
    if (layout.has_gamma() && a.split) {
      out[layout.gamma0()] -= 1.0;
      for (int k = 0; k < kNumCovariates; ++k) {
        if (unit.z[k]) out[layout.gamma(k)] -= 1.0;
      }
    }
    out[layout.kappa()] -= a.dist;
  }
};

LikelihoodProblem::LikelihoodProblem(const Market& market, std::span<const ChoiceSet> sets,
                                     ParameterLayout layout, int threads)
    : data_(std::make_unique<Data>(Data{std::move(layout), {}, {}, threads})) {
  const ParameterLayout& lay = data_->layout;
  std::vector<std::int32_t> facility_param(market.daycares().size(), -1);
  for (std::size_t i = 0; i < lay.facilities().size(); ++i) {
    facility_param[market.facility_index(lay.facilities()[i])] = static_cast<std::int32_t>(lay.facility(i));
  }
  for (std::size_t d = 0; d < market.daycares().size(); ++d) {
    const FacilityKind kind = market.daycares()[d].kind;
    if (kind == FacilityKind::Nonlicensed) facility_param[d] = static_cast<std::int32_t>(lay.alpha_nonlicensed());
    if (kind == FacilityKind::Kindergarten) facility_param[d] = static_cast<std::int32_t>(lay.alpha_kindergarten());
    if (kind == FacilityKind::Licensed && facility_param[d] < 0) {
      throw LookupError("layout has no effect for facility " + std::to_string(market.daycares()[d].id.value));
    }
  }

  for (const ChoiceSet& set : sets) {
    if (set.tuples.empty()) throw DomainError("empty choice set for family " + std::to_string(set.family.value));
    if (set.chosen >= set.tuples.size()) throw DomainError("chosen index outside choice set");
    const Family& fam = market.families()[set.family_index];
    std::vector<std::size_t> slots;
    if (set.child) {
      slots = {*set.child};
    } else {
      slots = market.family_children(set.family_index);
    }
    Data::Unit unit;
    unit.begin = data_->alternatives.size();
    unit.chosen = set.chosen;
    unit.family = set.family;
    unit.z = fam.z;
    for (const AssignmentTuple& t : set.tuples) {
      if (t.size != slots.size()) throw DomainError("tuple size does not match its unit");
      Data::Alternative a;
      for (std::size_t s = 0; s < t.size; ++s) {
        if (t[s] == kHome) continue;
        const std::size_t d = market.facility_index(t[s]);
        a.facility[s] = facility_param[d];
        const int grade = market.children()[slots[s]].grade.value();
        if (grade >= 1) a.age[s] = static_cast<std::int32_t>(lay.age(grade));
        ++a.nonhome;
      }
      if (set.child) {
        a.dist = t[0] == kHome ? 0.0
                               : haversine_km({fam.lat, fam.lon},
                                              {market.facility(t[0]).lat, market.facility(t[0]).lon});
      } else {
        a.split = lay.has_gamma() && t.size == 2 && !t.is_diagonal();
        a.dist = tuple_distance_km(market, set.family_index, t);
      }
      data_->alternatives.push_back(a);
    }
    unit.end = data_->alternatives.size();
    data_->units.push_back(unit);
  }
}

LikelihoodProblem::~LikelihoodProblem() = default;
LikelihoodProblem::LikelihoodProblem(LikelihoodProblem&&) noexcept = default;
LikelihoodProblem& LikelihoodProblem::operator=(LikelihoodProblem&&) noexcept = default;

const ParameterLayout& LikelihoodProblem::layout() const { return data_->layout; }
std::size_t LikelihoodProblem::num_units() const { return data_->units.size(); }

double LikelihoodProblem::value(const Eigen::VectorXd& x) const { return evaluate(x, nullptr); }

double LikelihoodProblem::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* gradient) const {
  const Data& d = *data_;
  const auto p = static_cast<Eigen::Index>(d.layout.size());
  if (x.size() != p) throw DomainError("parameter vector size mismatch");
  const std::size_t blocks = (d.units.size() + kBlockSize - 1) / kBlockSize;
  std::vector<double> ll(blocks, 0.0);
  std::vector<Eigen::VectorXd> grads(gradient ? blocks : 0);
  parallel_for(blocks, d.threads, [&](std::size_t b) {
    std::vector<double> buffer;
    Eigen::VectorXd* g = nullptr;
    if (gradient) {
      grads[b] = Eigen::VectorXd::Zero(p);
      g = &grads[b];
    }
    ll[b] = d.block(x, b * kBlockSize, std::min(d.units.size(), (b + 1) * kBlockSize), g, buffer);
  });
  double total = 0.0;
  for (double v : ll) total += v;
  if (gradient) {
    *gradient = Eigen::VectorXd::Zero(p);
    for (const auto& g : grads) *gradient += g;
  }
  return total;
}

std::vector<double> LikelihoodProblem::probabilities(const Eigen::VectorXd& x, std::size_t unit) const {
  const Data& d = *data_;
  std::vector<double> v;
  d.block(x, unit, unit + 1, nullptr, v);
  const double vmax = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double value : v) sum += std::exp(value - vmax);
  const double lse = vmax + std::log(sum);
  for (double& value : v) value = std::exp(value - lse);
  return v;
}

std::vector<bool> LikelihoodProblem::identified() const {
  const Data& d = *data_;
  const std::size_t p = d.layout.size();
  std::vector<bool> varies(p, false);
  std::vector<double> first(p), other(p);
  for (const Data::Unit& unit : d.units) {
    if (unit.end - unit.begin < 2) continue;
    d.features(unit, d.alternatives[unit.begin], first);
    for (std::size_t t = unit.begin + 1; t < unit.end; ++t) {
      d.features(unit, d.alternatives[t], other);
      for (std::size_t k = 0; k < p; ++k) {
        if (other[k] != first[k]) varies[k] = true;
      }
    }
  }
  return varies;
}

double log_likelihood(const Theta& theta, std::span<const ChoiceSet> sets, const Market& market) {
  LikelihoodProblem problem(market, sets, layout_for(market, sets));
  return problem.value(problem.layout().pack(theta));
}

std::vector<double> loglik_gradient(const Theta& theta, std::span<const ChoiceSet> sets,
                                    const Market& market) {
  LikelihoodProblem problem(market, sets, layout_for(market, sets));
  Eigen::VectorXd g;
  problem.evaluate(problem.layout().pack(theta), &g);
  return {g.data(), g.data() + g.size()};
}

std::optional<double> EstimationResult::se(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return standard_errors.empty() ? std::nullopt : standard_errors[i];
  }
  throw LookupError("no parameter named " + name);
}

double EstimationResult::estimate(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return estimates[i];
  }
  throw LookupError("no parameter named " + name);
}

EstimationResult fit_model(const LikelihoodProblem& problem, const FitOptions& options) {
  const ParameterLayout& layout = problem.layout();
  Theta init;
  if (options.init) init = *options.init;
  Eigen::VectorXd x = layout.pack(init);

  const std::vector<bool> active = problem.identified();
  std::vector<Eigen::Index> idx;
  for (std::size_t k = 0; k < active.size(); ++k) {
    if (active[k]) idx.push_back(static_cast<Eigen::Index>(k));
  }
  const auto na = static_cast<Eigen::Index>(idx.size());
  auto restrict = [&](const Eigen::VectorXd& full) {
    Eigen::VectorXd r(na);
    for (Eigen::Index i = 0; i < na; ++i) r[i] = full[idx[i]];
    return r;
  };
  auto max_norm = [](const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; };

  EstimationResult result;
  Eigen::VectorXd g;
  double ll = problem.evaluate(x, &g);
  if (!std::isfinite(ll)) throw NumericError("log-likelihood is not finite at the starting point");
  Eigen::VectorXd ga = restrict(g);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(na, na);
  bool scaled = false;
  int flat_steps = 0;
  constexpr int kMaxFlatSteps = 25;
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxHalvings = 60;
  constexpr int kMaxExpansions = 10;

  int iter = 0;
  for (;; ++iter) {
    const double gnorm = max_norm(ga);
    if (gnorm < options.gradient_tol) {
      result.converged = true;
      result.stop_reason = "gradient below tolerance";
      break;
    }
    if (iter >= options.max_iters) {
      result.stop_reason = "iteration limit reached";
      break;
    }
    Eigen::VectorXd p = H * ga;
    double slope = ga.dot(p);
    if (!(slope > 0.0)) {
      H.setIdentity();
      p = ga;
      slope = ga.dot(p);
    }

    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd xn, gn;
    double lln = 0.0;
    for (int h = 0; h <= kMaxHalvings; ++h, step *= 0.5) {
      xn = x;
      for (Eigen::Index i = 0; i < na; ++i) xn[idx[i]] += step * p[i];
      try {
        lln = problem.evaluate(xn, &gn);
      } catch (const NumericError&) {
        continue;
      }
      if (std::isfinite(lln) && lln >= ll + kArmijo * step * slope) {
        accepted = true;
        break;
      }
    }
    if (accepted && step == 1.0) {
      for (int e = 0; e < kMaxExpansions; ++e) {
        const double wider = step * 2.0;
        Eigen::VectorXd xw = x, gw;
        for (Eigen::Index i = 0; i < na; ++i) xw[idx[i]] += wider * p[i];
        double llw;
        try {
          llw = problem.evaluate(xw, &gw);
        } catch (const NumericError&) {
          break;
        }
        if (!(std::isfinite(llw) && llw > lln && llw >= ll + kArmijo * wider * slope)) break;
        step = wider;
        xn = std::move(xw);
        gn = std::move(gw);
        lln = llw;
      }
    }
    flat_steps = accepted && !(lln > ll) ? flat_steps + 1 : 0;
    if (flat_steps >= kMaxFlatSteps) accepted = false;
    if (!accepted) {
      const double rel = std::abs(lln - ll) / std::max(1.0, std::abs(ll));
      if (std::isfinite(lln) && rel < options.loglik_rel_tol) {
        result.converged = true;
        result.stop_reason = "line search stalled with relative loglik change below tolerance";
      } else {
        result.stop_reason = "line search failed";
      }
      break;
    }

    const Eigen::VectorXd gna = restrict(gn);
    const Eigen::VectorXd s = step * p;
    const Eigen::VectorXd y = ga - gna;
    const double sy = s.dot(y);
    if (sy > 0.0) {
      if (!scaled) {
        H = Eigen::MatrixXd::Identity(na, na) * (sy / y.dot(y));
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = H * y;
      H += rho * rho * (sy + y.dot(Hy)) * (s * s.transpose()) -
           rho * (Hy * s.transpose() + s * Hy.transpose());
    }
    x = xn;
    ll = lln;
    ga = gna;
    result.log.push_back("iter=" + std::to_string(iter + 1) + " loglik=" + format_real(ll) +
                         " grad_max=" + sci(max_norm(ga)) + " step=" + sci(step));
  }

  result.iterations = iter;
  result.loglik = ll;
  result.gradient_norm = max_norm(ga);
  result.theta_hat = layout.unpack(x);
  result.names = layout.names();
  result.estimates.assign(x.data(), x.data() + x.size());
  if (options.standard_errors) {
    result.standard_errors = standard_errors(problem, x, active);
  } else {
    result.standard_errors.assign(layout.size(), std::nullopt);
  }
  return result;
}

EstimationResult fit_full_model(std::span<const ChoiceSet> sets, const Market& market,
                                const FitOptions& options) {
  LikelihoodProblem problem(market, sets, layout_for(market, sets), options.threads);
  return fit_model(problem, options);
}

EstimationResult fit_individual_model(const Market& market, const Matching& matching,
                                      const PolicyScenario& policy, const FitOptions& options) {
  const auto sets = build_individual_choice_sets(market, matching, policy);
  LikelihoodProblem problem(market, sets, individual_layout(market), options.threads);
  return fit_model(problem, options);
}

std::vector<std::optional<double>> standard_errors(const LikelihoodProblem& problem,
                                                   const Eigen::VectorXd& x,
                                                   const std::vector<bool>& active) {
  const std::size_t p = problem.layout().size();
  std::vector<std::optional<double>> out(p);
  std::vector<Eigen::Index> idx;
  for (std::size_t k = 0; k < p; ++k) {
    if (active[k]) idx.push_back(static_cast<Eigen::Index>(k));
  }
  const auto na = static_cast<Eigen::Index>(idx.size());
  if (na == 0) return out;

  Eigen::MatrixXd hess(na, na);
  Eigen::VectorXd gp, gm;
  for (Eigen::Index j = 0; j < na; ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[idx[j]]));
    Eigen::VectorXd xp = x, xm = x;
    xp[idx[j]] += h;
    xm[idx[j]] -= h;
    problem.evaluate(xp, &gp);
    problem.evaluate(xm, &gm);
    for (Eigen::Index i = 0; i < na; ++i) hess(i, j) = (gp[idx[i]] - gm[idx[i]]) / (2.0 * h);
  }
  const Eigen::MatrixXd info = -0.5 * (hess + hess.transpose());

  const double dmax = info.diagonal().maxCoeff();
  if (!(dmax > 0.0)) return out;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < na; ++i) {
    if (info(i, i) > 1e-8 * dmax) keep.push_back(i);
  }
  const auto nk = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd sub(nk, nk);
  for (Eigen::Index i = 0; i < nk; ++i) {
    for (Eigen::Index j = 0; j < nk; ++j) sub(i, j) = info(keep[i], keep[j]);
  }

  Eigen::MatrixXd inv;
  std::vector<bool> unreliable(nk, false);
  Eigen::LLT<Eigen::MatrixXd> llt(sub);
  if (llt.info() == Eigen::Success) {
    inv = llt.solve(Eigen::MatrixXd::Identity(nk, nk));
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const Eigen::MatrixXd& V = es.eigenvectors();
    const double tol = 1e-10 * ev.cwiseAbs().maxCoeff();
    inv = Eigen::MatrixXd::Zero(nk, nk);
    for (Eigen::Index e = 0; e < nk; ++e) {
      if (ev[e] > tol) {
        inv += V.col(e) * V.col(e).transpose() / ev[e];
      } else {
        for (Eigen::Index i = 0; i < nk; ++i) {
          if (V(i, e) * V(i, e) > 1e-6) unreliable[i] = true;
        }
      }
    }
  }
  for (Eigen::Index i = 0; i < nk; ++i) {
    if (!unreliable[i] && inv(i, i) > 0.0 && std::isfinite(inv(i, i))) {
      out[static_cast<std::size_t>(idx[keep[i]])] = std::sqrt(inv(i, i));
    }
  }
  return out;
}

std::vector<std::optional<double>> standard_errors(const Theta& theta_hat,
                                                   std::span<const ChoiceSet> sets,
                                                   const Market& market) {
  LikelihoodProblem problem(market, sets, layout_for(market, sets));
  return standard_errors(problem, problem.layout().pack(theta_hat), problem.identified());
}

void write_parameter_table(std::ostream& out, const EstimationResult& full,
                           const EstimationResult* individual) {
  out << "parameter,full_estimate,full_se";
  if (individual) out << ",individual_estimate,individual_se";
  out << '\n';
  auto cell = [&out](const std::optional<double>& v) {
    out << ',';
    if (v) out << format_real(*v);
  };
  for (std::size_t i = 0; i < full.names.size(); ++i) {
    out << full.names[i] << ',' << format_real(full.estimates[i]);
    cell(full.standard_errors[i]);
    if (individual) {
      auto it = std::find(individual->names.begin(), individual->names.end(), full.names[i]);
      if (it == individual->names.end()) {
        out << ",0,";
      } else {
        const auto j = static_cast<std::size_t>(it - individual->names.begin());
        out << ',' << format_real(individual->estimates[j]);
        cell(individual->standard_errors[j]);
      }
    }
    out << '\n';
  }
}

void write_convergence_log(std::ostream& out, const EstimationResult& result) {
  for (const auto& line : result.log) out << line << '\n';
  out << "converged=" << (result.converged ? "true" : "false") << " iterations=" << result.iterations
      << " loglik=" << format_real(result.loglik) << " grad_max=" << sci(result.gradient_norm)
      << " reason=" << result.stop_reason << '\n';
}

}  // namespace daycare
