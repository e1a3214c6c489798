#include "daycare/market.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <string>

#include "daycare/geo.hpp"

namespace daycare {

std::string_view to_string(FacilityKind kind) {
  switch (kind) {
    case FacilityKind::Licensed: return "licensed";
    case FacilityKind::Nonlicensed: return "nonlicensed";
    case FacilityKind::Kindergarten: return "kindergarten";
    case FacilityKind::Home: return "home";
  }
  return "unknown";
}

FacilityKind facility_kind_from_string(std::string_view text) {
  if (text == "licensed") return FacilityKind::Licensed;
  if (text == "nonlicensed") return FacilityKind::Nonlicensed;
  if (text == "kindergarten") return FacilityKind::Kindergarten;
  if (text == "home") return FacilityKind::Home;
  throw DataError("unknown facility kind '" + std::string(text) + "'");
}

std::string_view to_string(SiblingStatus status) {
  switch (status) {
    case SiblingStatus::NoSiblings: return "no_siblings";
    case SiblingStatus::Simultaneous: return "simultaneous";
    case SiblingStatus::Incumbent: return "incumbent";
  }
  return "unknown";
}

std::optional<SiblingStatus> derive_sibling_status(std::size_t num_children,
                                                   std::size_t num_applicants) {
  if (num_children == 1 && num_applicants == 1) return SiblingStatus::NoSiblings;
  if (num_children == 2 && num_applicants == 2) return SiblingStatus::Simultaneous;
  if (num_children == 2 && num_applicants == 1) return SiblingStatus::Incumbent;
  return std::nullopt;
}

Market::Market(std::vector<Daycare> daycares, std::vector<Child> children,
               std::vector<Family> families, std::optional<std::uint64_t> rng_seed)
    : daycares_(std::move(daycares)),
      children_(std::move(children)),
      families_(std::move(families)),
      rng_seed_(rng_seed) {
  for (std::size_t i = 0; i < daycares_.size(); ++i) {
    facility_by_id_.emplace(daycares_[i].id, i);
    if (daycares_[i].kind == FacilityKind::Licensed) licensed_.push_back(i);
  }
  if (auto home = find_facility(kHome)) home_index_ = *home;
  for (std::size_t i = 0; i < children_.size(); ++i) child_by_id_.emplace(children_[i].id, i);
  for (std::size_t i = 0; i < families_.size(); ++i) family_by_id_.emplace(families_[i].id, i);

  static const std::vector<FacilityId> kEmptyRol;
  child_family_.assign(children_.size(), std::numeric_limits<std::size_t>::max());
  child_rol_.assign(children_.size(), &kEmptyRol);
  family_children_.resize(families_.size());
  status_.resize(families_.size());
  nearest_nonlicensed_.resize(families_.size());
  nearest_kindergarten_.resize(families_.size());

  for (std::size_t f = 0; f < families_.size(); ++f) {
    const Family& fam = families_[f];
    std::size_t applicants = 0;
    bool resolved = true;
    for (ChildId cid : fam.children) {
      auto c = find_child(cid);
      if (!c) {
        resolved = false;
        continue;
      }
      family_children_[f].push_back(*c);
      child_family_[*c] = f;
      if (is_applying(*c)) ++applicants;
    }
    for (const auto& [cid, list] : fam.rols) {
      if (auto c = find_child(cid)) child_rol_[*c] = &list;
    }
    if (resolved) status_[f] = derive_sibling_status(family_children_[f].size(), applicants);

    double best_nl = std::numeric_limits<double>::infinity();
    double best_k = best_nl;
    const GeoPoint home{fam.lat, fam.lon};
    for (std::size_t d = 0; d < daycares_.size(); ++d) {
      const Daycare& dc = daycares_[d];
      if (dc.kind != FacilityKind::Nonlicensed && dc.kind != FacilityKind::Kindergarten) continue;
      double dist;
      try {
        dist = haversine_km(home, {dc.lat, dc.lon});
      } catch (const DomainError&) {
        continue;
      }
      if (dc.kind == FacilityKind::Nonlicensed && dist < best_nl) {
        best_nl = dist;
        nearest_nonlicensed_[f] = d;
      } else if (dc.kind == FacilityKind::Kindergarten && dist < best_k) {
        best_k = dist;
        nearest_kindergarten_[f] = d;
      }
    }
  }
}

std::optional<std::size_t> Market::find_facility(FacilityId id) const {
  auto it = facility_by_id_.find(id);
  if (it == facility_by_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Market::find_child(ChildId id) const {
  auto it = child_by_id_.find(id);
  if (it == child_by_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Market::find_family(FamilyId id) const {
  auto it = family_by_id_.find(id);
  if (it == family_by_id_.end()) return std::nullopt;
  return it->second;
}

std::size_t Market::facility_index(FacilityId id) const {
  if (auto i = find_facility(id)) return *i;
  throw LookupError("unknown facility id " + std::to_string(id.value));
}

std::size_t Market::child_index(ChildId id) const {
  if (auto i = find_child(id)) return *i;
  throw LookupError("unknown child id " + std::to_string(id.value));
}

std::size_t Market::family_index(FamilyId id) const {
  if (auto i = find_family(id)) return *i;
  throw LookupError("unknown family id " + std::to_string(id.value));
}

bool Market::is_applying(std::size_t child) const {
  auto d = find_facility(children_[child].current_placement);
  return !d || daycares_[*d].kind != FacilityKind::Licensed;
}

SiblingStatus Market::status(std::size_t family) const {
  if (status_[family]) return *status_[family];
  throw DataError("family " + std::to_string(families_[family].id.value) +
                  " has no valid sibling status");
}

std::optional<std::size_t> Market::nearest_of_kind(std::size_t family, FacilityKind kind) const {
  if (kind == FacilityKind::Nonlicensed) return nearest_nonlicensed_[family];
  if (kind == FacilityKind::Kindergarten) return nearest_kindergarten_[family];
  return std::nullopt;
}

const std::vector<FacilityId>& Market::rol(std::size_t child) const { return *child_rol_[child]; }

std::vector<Violation> validate_market(const Market& market) {
  std::vector<Violation> out;
  auto add = [&out](std::string entity, std::string rule) {
    out.push_back({std::move(entity), std::move(rule)});
  };

  std::set<FacilityId> seen_fac;
  std::size_t homes = 0;
  for (const Daycare& d : market.daycares()) {
    const std::string name = "facility " + std::to_string(d.id.value);
    if (!seen_fac.insert(d.id).second) add(name, "duplicate facility id");
    if (d.kind == FacilityKind::Home) {
      ++homes;
      if (d.id != kHome) add(name, "home facility must have id 0");
    } else {
      if (d.id == kHome) add(name, "id 0 is reserved for home");
      try {
        check_point({d.lat, d.lon});
      } catch (const DomainError&) {
        add(name, "coordinates out of range");
      }
    }
    for (int g = 0; g < kNumGrades; ++g) {
      const auto& cap = d.capacity[g];
      if (d.kind == FacilityKind::Licensed) {
        if (!cap) add(name, "licensed capacity must be finite");
        else if (*cap < 0) add(name, "capacity must be non-negative");
      } else if (cap) {
        add(name, "capacity must be unbounded for non-licensed kinds");
      }
    }
  }
  if (homes != 1) add("market", "exactly one home facility required");

  std::set<ChildId> seen_child;
  for (const Child& c : market.children()) {
    const std::string name = "child " + std::to_string(c.id.value);
    if (!seen_child.insert(c.id).second) add(name, "duplicate child id");
    if (!market.find_facility(c.current_placement)) add(name, "unknown current placement");
    auto f = market.find_family(c.family_id);
    if (!f) {
      add(name, "unknown family id");
    } else {
      const auto& kids = market.families()[*f].children;
      if (std::find(kids.begin(), kids.end(), c.id) == kids.end()) {
        add(name, "child not listed by its family");
      }
    }
  }

  std::set<FamilyId> seen_family;
  for (std::size_t f = 0; f < market.families().size(); ++f) {
    const Family& fam = market.families()[f];
    const std::string name = "family " + std::to_string(fam.id.value);
    if (!seen_family.insert(fam.id).second) add(name, "duplicate family id");
    if (fam.children.empty()) add(name, "family has no children");
    if (fam.children.size() > 2) add(name, "family size > 2");
    for (ChildId cid : fam.children) {
      auto c = market.find_child(cid);
      if (!c) {
        add(name, "unknown child id " + std::to_string(cid.value));
      } else if (market.children()[*c].family_id != fam.id) {
        add(name, "child " + std::to_string(cid.value) + " belongs to another family");
      }
    }
    try {
      check_point({fam.lat, fam.lon});
    } catch (const DomainError&) {
      add(name, "coordinates out of range");
    }
    if (fam.z[kMotherFullTime] && fam.z[kMotherPartTime]) {
      add(name, "mother_full_time and mother_part_time are exclusive");
    }
    if (fam.children.size() <= 2 && !market.sibling_status(f)) {
      add(name, "no applying child or unsupported sibling configuration");
    }
    if (fam.joint_required && market.sibling_status(f) &&
        *market.sibling_status(f) != SiblingStatus::Simultaneous) {
      add(name, "joint_required only meaningful for simultaneous applicants");
    }
    for (const auto& [cid, list] : fam.rols) {
      const std::string who = name + " child " + std::to_string(cid.value);
      auto c = market.find_child(cid);
      if (!c || market.children()[*c].family_id != fam.id) {
        add(who, "ROL for a child outside the family");
        continue;
      }
      if (!market.is_applying(*c)) add(who, "ROL for a non-applying child");
      if (list.size() > 10) add(who, "ROL longer than 10");
      for (FacilityId d : list) {
        auto di = market.find_facility(d);
        if (!di || market.daycares()[*di].kind != FacilityKind::Licensed) {
          add(who, "ROL must list licensed facilities");
          break;
        }
      }
    }
  }
  return out;
}

std::int64_t effective_score(int base_score, SiblingStatus status, const Covariates& z,
                             bool joint_required, const PolicyScenario& policy) {
  if (policy.simultaneous_points < 0 || policy.incumbent_points < 0) {
    throw ConfigError("sibling priority points must be non-negative");
  }
  std::int64_t score = base_score;
  if (status == SiblingStatus::Simultaneous) score += policy.simultaneous_points;
  if (status == SiblingStatus::Incumbent) score += policy.incumbent_points;
  for (const ScoreRule& rule : policy.extra_rules) {
    bool holds = false;
    if (rule.attribute == "joint_required") {
      holds = joint_required;
    } else {
      auto it = std::find(kCovariateNames.begin(), kCovariateNames.end(), rule.attribute);
      if (it == kCovariateNames.end()) {
        throw ConfigError("unknown score rule attribute '" + rule.attribute + "'");
      }
      holds = z[static_cast<std::size_t>(it - kCovariateNames.begin())];
    }
    if (holds) score += rule.points;
  }
  return score;
}

std::int64_t effective_score(const Market& market, std::size_t family,
                             const PolicyScenario& policy) {
  const Family& f = market.families()[family];
  return effective_score(f.base_score, market.status(family), f.z, f.joint_required, policy);
}

Priority family_priority(const Market& market, std::size_t family, const PolicyScenario& policy) {
  return {effective_score(market, family, policy), market.families()[family].id};
}

}  // namespace daycare
