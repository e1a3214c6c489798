#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "daycare/core.hpp"

namespace daycare {

struct Daycare {
  FacilityId id;
  FacilityKind kind = FacilityKind::Licensed;
  double lat = 0.0;
  double lon = 0.0;
  /// Seats per grade; nullopt means unbounded.
  std::array<std::optional<int>, kNumGrades> capacity{};
};

struct Child {
  ChildId id;
  FamilyId family_id;
  Grade grade;
  FacilityId current_placement = kHome;
};

struct Family {
  FamilyId id;
  std::vector<ChildId> children;
  Covariates z{};
  int base_score = 0;
  bool joint_required = false;
  /// Rank-ordered list per applying child, most preferred first.
  std::map<ChildId, std::vector<FacilityId>> rols;
  double lat = 0.0;
  double lon = 0.0;
};

/// Additive points granted when a family attribute holds. `attribute` is a
/// covariate name from kCovariateNames or "joint_required".
struct ScoreRule {
  std::string attribute;
  int points = 0;
};

struct PolicyScenario {
  int simultaneous_points = 0;
  int incumbent_points = 0;
  std::vector<ScoreRule> extra_rules;

  static PolicyScenario before_reform() { return {0, 25, {}}; }
  static PolicyScenario after_reform() { return {160, 160, {}}; }
};

/// Strict priority used by the mechanism and by every cutoff comparison:
/// higher score first, ties to the lower family id.
struct Priority {
  std::int64_t score = 0;
  FamilyId family;

  friend bool outranks(const Priority& a, const Priority& b) {
    return a.score > b.score || (a.score == b.score && a.family < b.family);
  }
  friend bool operator==(const Priority&, const Priority&) = default;
};

struct Violation {
  std::string entity;
  std::string rule;
};

/// Immutable market. Construction never throws on invariant violations;
/// run validate_market before handing a market to the algorithms.
class Market {
 public:
  Market() = default;
  Market(std::vector<Daycare> daycares, std::vector<Child> children, std::vector<Family> families,
         std::optional<std::uint64_t> rng_seed = std::nullopt);

  std::span<const Daycare> daycares() const { return daycares_; }
  std::span<const Child> children() const { return children_; }
  std::span<const Family> families() const { return families_; }
  std::optional<std::uint64_t> rng_seed() const { return rng_seed_; }

  std::optional<std::size_t> find_facility(FacilityId id) const;
  std::optional<std::size_t> find_child(ChildId id) const;
  std::optional<std::size_t> find_family(FamilyId id) const;
  std::size_t facility_index(FacilityId id) const;
  std::size_t child_index(ChildId id) const;
  std::size_t family_index(FamilyId id) const;
  const Daycare& facility(FacilityId id) const { return daycares_[facility_index(id)]; }

  /// Child indices of a family, in the family's listed order (tuple slot order).
  const std::vector<std::size_t>& family_children(std::size_t family) const {
    return family_children_[family];
  }
  std::size_t child_family(std::size_t child) const { return child_family_[child]; }

  /// A child applies iff its current placement is not a licensed facility.
  bool is_applying(std::size_t child) const;

  std::optional<SiblingStatus> sibling_status(std::size_t family) const {
    return status_[family];
  }
  /// Throws DataError when the family fits none of the three groups.
  SiblingStatus status(std::size_t family) const;

  std::span<const std::size_t> licensed() const { return licensed_; }
  std::size_t home_index() const { return home_index_; }
  /// Family-nearest facility of an unbounded kind, if any exists.
  std::optional<std::size_t> nearest_of_kind(std::size_t family, FacilityKind kind) const;

  /// Empty list for children without an ROL.
  const std::vector<FacilityId>& rol(std::size_t child) const;

 private:
  std::vector<Daycare> daycares_;
  std::vector<Child> children_;
  std::vector<Family> families_;
  std::optional<std::uint64_t> rng_seed_;

  std::unordered_map<FacilityId, std::size_t> facility_by_id_;
  std::unordered_map<ChildId, std::size_t> child_by_id_;
  std::unordered_map<FamilyId, std::size_t> family_by_id_;
  std::vector<std::vector<std::size_t>> family_children_;
  std::vector<std::size_t> child_family_;
  std::vector<std::optional<SiblingStatus>> status_;
  std::vector<std::size_t> licensed_;
  std::size_t home_index_ = 0;
  std::vector<std::optional<std::size_t>> nearest_nonlicensed_;
  std::vector<std::optional<std::size_t>> nearest_kindergarten_;
  std::vector<const std::vector<FacilityId>*> child_rol_;
};

/// Group a family belongs to, from child and applicant counts alone.
std::optional<SiblingStatus> derive_sibling_status(std::size_t num_children,
                                                   std::size_t num_applicants);

std::vector<Violation> validate_market(const Market& market);

std::int64_t effective_score(int base_score, SiblingStatus status, const Covariates& z,
                             bool joint_required, const PolicyScenario& policy);
std::int64_t effective_score(const Market& market, std::size_t family,
                             const PolicyScenario& policy);
Priority family_priority(const Market& market, std::size_t family, const PolicyScenario& policy);

}  // namespace daycare
