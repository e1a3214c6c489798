#include "daycare/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "daycare/geo.hpp"

namespace daycare {
namespace {

enum Stream : std::uint64_t { kStructure = 0, kEffects = 1, kPreferences = 2 };

std::mt19937_64 substream(std::uint64_t seed, Stream stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

std::size_t exact_count(std::size_t n, double share) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * share));
}

/// Marks exactly `k` of the candidate positions, chosen uniformly.
std::vector<std::size_t> choose(std::vector<std::size_t> candidates, std::size_t k,
                                std::mt19937_64& rng) {
  std::shuffle(candidates.begin(), candidates.end(), rng);
  candidates.resize(std::min(k, candidates.size()));
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

struct Scored {
  AssignmentTuple tuple;
  double u = 0.0;
};

/// Licensed and outside options open to one applying slot.
struct SlotOptions {
  std::vector<FacilityId> licensed;
  std::vector<FacilityId> outside;
};

SlotOptions slot_options(const Market& market, std::size_t family) {
  SlotOptions o;
  for (std::size_t d : market.licensed()) o.licensed.push_back(market.daycares()[d].id);
  o.outside.push_back(kHome);
  for (FacilityKind kind : {FacilityKind::Nonlicensed, FacilityKind::Kindergarten}) {
    if (auto d = market.nearest_of_kind(family, kind)) o.outside.push_back(market.daycares()[*d].id);
  }
  return o;
}

bool is_outside(const SlotOptions& o, FacilityId d) {
  return std::find(o.outside.begin(), o.outside.end(), d) != o.outside.end();
}

std::vector<FacilityId> truncate_ranked(std::vector<std::pair<double, FacilityId>> ranked,
                                        double threshold, std::size_t length) {
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  std::vector<FacilityId> out;
  for (const auto& [u, d] : ranked) {
    if (u <= threshold || out.size() == length) break;
    out.push_back(d);
  }
  return out;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (num_families == 0) throw ConfigError("num_families must be positive");
  if (num_licensed == 0) throw ConfigError("at least one licensed facility is required");
  if (!(lat_min < lat_max) || !(lon_min < lon_max)) throw ConfigError("empty bounding box");
  try {
    check_point({lat_min, lon_min});
    check_point({lat_max, lon_max});
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  double total = 0.0;
  for (double s : status_shares) {
    if (!(s >= 0.0)) throw ConfigError("status shares must be non-negative");
    total += s;
  }
  if (!(total > 0.0)) throw ConfigError("status shares sum to zero");
  for (double c : capacity_mean) {
    if (!(c >= 0.0)) throw ConfigError("capacity means must be non-negative");
  }
  int positive_grades = 0;
  for (double w : grade_weights) {
    if (!(w >= 0.0)) throw ConfigError("grade weights must be non-negative");
    if (w > 0.0) ++positive_grades;
  }
  if (positive_grades == 0) throw ConfigError("grade weights sum to zero");
  const bool siblings = status_shares[1] > 0.0 || status_shares[2] > 0.0;
  if (siblings && positive_grades < 2) {
    throw ConfigError("sibling families need at least two grades with positive weight");
  }
  for (double s : covariate_share) {
    if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("covariate shares must lie in [0,1]");
  }
  if (covariate_share[kMotherFullTime] + covariate_share[kMotherPartTime] > 1.0) {
    throw ConfigError("full-time and part-time shares exceed 1");
  }
  if (!(joint_share >= 0.0 && joint_share <= 1.0)) throw ConfigError("joint_share outside [0,1]");
  if (base_score_trials < 0 || !(base_score_p >= 0.0 && base_score_p <= 1.0)) {
    throw ConfigError("invalid base score distribution");
  }
  if (std::accumulate(list_length_weights.begin(), list_length_weights.end(), 0.0) <= 0.0 ||
      std::any_of(list_length_weights.begin(), list_length_weights.end(),
                  [](double w) { return !(w >= 0.0); })) {
    throw ConfigError("invalid list length weights");
  }
  if (!(facility_effect_sd >= 0.0)) throw ConfigError("facility_effect_sd must be non-negative");
  if (observation_policy.simultaneous_points < 0 || observation_policy.incumbent_points < 0) {
    throw ConfigError("observation policy points must be non-negative");
  }
}

Theta default_true_theta() {
  Theta t = reference_theta();
  t.alpha_nonlicensed = 0.0;
  t.alpha_kindergarten = -0.5;
  return t;
}

SyntheticMarket generate_synthetic_market(const SyntheticConfig& config, const Theta& theta_true,
                                          std::uint64_t seed) {
  config.validate();
  if (!(theta_true.kappa > 0.0)) throw ConfigError("theta_true.kappa must be positive");
  std::mt19937_64 rng = substream(seed, kStructure, 0);
  std::uniform_real_distribution<double> lat(config.lat_min, config.lat_max);
  std::uniform_real_distribution<double> lon(config.lon_min, config.lon_max);

  // Facilities: home, licensed, nonlicensed, kindergartens with consecutive ids.
  std::vector<Daycare> daycares;
  daycares.push_back({kHome, FacilityKind::Home, 0.0, 0.0, {}});
  std::int64_t next_facility = 1;
  auto add_facilities = [&](FacilityKind kind, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      Daycare d{FacilityId{next_facility++}, kind, 0.0, 0.0, {}};
      d.lat = lat(rng);
      d.lon = lon(rng);
      if (kind == FacilityKind::Licensed) d.capacity.fill(0);
      daycares.push_back(d);
    }
  };
  add_facilities(FacilityKind::Licensed, config.num_licensed);
  add_facilities(FacilityKind::Nonlicensed, config.num_nonlicensed);
  add_facilities(FacilityKind::Kindergarten, config.num_kindergartens);

  std::uniform_int_distribution<std::size_t> pick_licensed(1, config.num_licensed);
  for (int g = 0; g < kNumGrades; ++g) {
    const std::size_t seats = exact_count(config.num_licensed, config.capacity_mean[g]);
    for (std::size_t s = 0; s < seats; ++s) ++*daycares[pick_licensed(rng)].capacity[g];
  }

  // Family statuses and covariates with exact counts.
  const std::size_t n = config.num_families;
  const double share_total =
      std::accumulate(config.status_shares.begin(), config.status_shares.end(), 0.0);
  const std::size_t n_sim = exact_count(n, config.status_shares[1] / share_total);
  const std::size_t n_inc = std::min(n - n_sim, exact_count(n, config.status_shares[2] / share_total));
  std::vector<SiblingStatus> status(n, SiblingStatus::NoSiblings);
  std::fill_n(status.begin(), n_sim, SiblingStatus::Simultaneous);
  std::fill_n(status.begin() + n_sim, n_inc, SiblingStatus::Incumbent);
  std::shuffle(status.begin(), status.end(), rng);

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::vector<Covariates> z(n, Covariates{});
  for (int k = 0; k < kNumCovariates; ++k) {
    std::vector<std::size_t> pool;
    for (std::size_t f : all) {
      if (k == kMotherPartTime && z[f][kMotherFullTime]) continue;
      pool.push_back(f);
    }
    for (std::size_t f : choose(pool, exact_count(n, config.covariate_share[k]), rng)) z[f][k] = true;
  }

  std::vector<std::size_t> sims;
  for (std::size_t f = 0; f < n; ++f) {
    if (status[f] == SiblingStatus::Simultaneous) sims.push_back(f);
  }
  std::vector<bool> joint(n, false);
  for (std::size_t f : choose(sims, exact_count(sims.size(), config.joint_share), rng)) joint[f] = true;

  std::binomial_distribution<int> score_draw(config.base_score_trials, config.base_score_p);
  std::discrete_distribution<int> grade_draw(config.grade_weights.begin(),
                                             config.grade_weights.end());
  auto other_grade = [&](int g) {
    auto w = config.grade_weights;
    w[g] = 0.0;
    std::discrete_distribution<int> d(w.begin(), w.end());
    return d(rng);
  };

  std::vector<Family> families;
  std::vector<Child> children;
  std::int64_t next_child = 1;
  for (std::size_t f = 0; f < n; ++f) {
    Family fam;
    fam.id = FamilyId{static_cast<std::int64_t>(f) + 1};
    fam.z = z[f];
    fam.joint_required = joint[f];
    fam.lat = lat(rng);
    fam.lon = lon(rng);
    fam.base_score = config.base_score_min + config.base_score_step * score_draw(rng);

    const int g0 = grade_draw(rng);
    auto add_child = [&](int grade, FacilityId placement) {
      Child c{ChildId{next_child++}, fam.id, Grade(grade), placement};
      fam.children.push_back(c.id);
      children.push_back(c);
    };
    add_child(g0, kHome);
    if (status[f] == SiblingStatus::Simultaneous) {
      add_child(other_grade(g0), kHome);
    } else if (status[f] == SiblingStatus::Incumbent) {
      add_child(other_grade(g0), daycares[pick_licensed(rng)].id);
    }
    families.push_back(std::move(fam));
  }

  Theta theta = theta_true;
  {
    std::mt19937_64 effects = substream(seed, kEffects, 0);
    std::normal_distribution<double> effect(config.facility_effect_mean, config.facility_effect_sd);
    for (std::size_t d = 1; d <= config.num_licensed; ++d) {
      const double draw = effect(effects);
      theta.facility.try_emplace(daycares[d].id, draw);
    }
  }

  // True utilities over each family's tuple space, then reported lists.
  const Market skeleton(daycares, children, families, seed);
  std::discrete_distribution<std::size_t> length_draw(config.list_length_weights.begin(),
                                                      config.list_length_weights.end());
  std::vector<std::vector<Scored>> utilities(n);
  for (std::size_t f = 0; f < n; ++f) {
    std::mt19937_64 prng = substream(seed, kPreferences, f);
    std::extreme_value_distribution<double> gumbel(0.0, 1.0);
    const SlotOptions opts = slot_options(skeleton, f);
    std::vector<FacilityId> every = opts.licensed;
    every.insert(every.end(), opts.outside.begin(), opts.outside.end());
    const auto& kids = skeleton.family_children(f);
    auto& scored = utilities[f];
    auto score = [&](const AssignmentTuple& t) {
      scored.push_back({t, systematic_utility(skeleton, f, t, theta).V + gumbel(prng)});
    };
    if (kids.size() == 1) {
      for (FacilityId d : every) score(AssignmentTuple{d});
    } else if (status[f] == SiblingStatus::Incumbent) {
      const FacilityId fixed = children[kids[1]].current_placement;
      for (FacilityId d : every) score(AssignmentTuple{d, fixed});
    } else {
      for (FacilityId a : every) {
        for (FacilityId b : every) score(AssignmentTuple{a, b});
      }
    }

    Family& fam = families[f];
    if (status[f] != SiblingStatus::Simultaneous) {
      double best_outside = -std::numeric_limits<double>::infinity();
      std::vector<std::pair<double, FacilityId>> ranked;
      for (const Scored& s : scored) {
        if (is_outside(opts, s.tuple[0])) {
          best_outside = std::max(best_outside, s.u);
        } else {
          ranked.emplace_back(s.u, s.tuple[0]);
        }
      }
      fam.rols[fam.children[0]] = truncate_ranked(ranked, best_outside, length_draw(prng) + 1);
    } else {
      double best_outside = -std::numeric_limits<double>::infinity();
      std::array<std::map<FacilityId, double>, 2> best;
      for (const Scored& s : scored) {
        const bool out0 = is_outside(opts, s.tuple[0]);
        const bool out1 = is_outside(opts, s.tuple[1]);
        if (out0 && out1) best_outside = std::max(best_outside, s.u);
        for (std::size_t slot = 0; slot < 2; ++slot) {
          if (slot == 0 ? out0 : out1) continue;
          auto [it, fresh] = best[slot].try_emplace(s.tuple[slot], s.u);
          if (!fresh) it->second = std::max(it->second, s.u);
        }
      }
      for (std::size_t slot = 0; slot < 2; ++slot) {
        std::vector<std::pair<double, FacilityId>> ranked;
        for (const auto& [d, u] : best[slot]) ranked.emplace_back(u, d);
        fam.rols[fam.children[slot]] = truncate_ranked(ranked, best_outside, length_draw(prng) + 1);
      }
    }
  }

  // Observed matching: serial dictatorship on true utilities.
  Market market(std::move(daycares), std::move(children), std::move(families), seed);
  std::vector<Priority> priority(n);
  for (std::size_t f = 0; f < n; ++f) {
    priority[f] = family_priority(market, f, config.observation_policy);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return outranks(priority[a], priority[b]); });

  std::vector<int> remaining(market.daycares().size() * kNumGrades,
                             std::numeric_limits<int>::max());
  for (std::size_t d : market.licensed()) {
    for (int g = 0; g < kNumGrades; ++g) {
      remaining[d * kNumGrades + g] = *market.daycares()[d].capacity[g];
    }
  }
  Matching observed = Matching::initial(market);
  for (std::size_t f : order) {
    const auto& kids = market.family_children(f);
    const Scored* best = nullptr;
    std::array<std::int64_t, 2> best_cells{-1, -1};
    for (const Scored& s : utilities[f]) {
      if (best && s.u <= best->u) continue;
      std::array<std::int64_t, 2> cells{-1, -1};
      bool fits = true;
      for (std::size_t slot = 0; slot < s.tuple.size && fits; ++slot) {
        if (!market.is_applying(kids[slot])) continue;
        const std::size_t d = market.facility_index(s.tuple[slot]);
        if (market.daycares()[d].kind != FacilityKind::Licensed) continue;
        cells[slot] = static_cast<std::int64_t>(d * kNumGrades +
                                                market.children()[kids[slot]].grade.value());
        const int need = (slot == 1 && cells[0] == cells[1]) ? 2 : 1;
        fits = remaining[cells[slot]] >= need;
      }
      if (fits) {
        best = &s;
        best_cells = cells;
      }
    }
    for (std::int64_t x : best_cells) {
      if (x >= 0) --remaining[x];
    }
    for (std::size_t slot = 0; slot < kids.size(); ++slot) {
      if (market.is_applying(kids[slot])) observed.assign(kids[slot], best->tuple[slot]);
    }
  }
  return {std::move(market), std::move(theta), std::move(observed)};
}

}  // namespace daycare
