#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "daycare/market.hpp"
#include "daycare/utility.hpp"

namespace daycare {

/// Version tag of the auxiliary tuple-ordering rule, written into output metadata.
inline constexpr std::string_view kOrderingRuleVersion = "rank-sum-v1";

/// Strict order over a family's acceptable tuples, ending with the tuple that
/// leaves every applicant at home. Unlisted tuples rank below all listed ones.
struct ReportedOrder {
  FamilyId family;
  std::vector<AssignmentTuple> tuples;
};

/// Child (by market index) -> facility. Unassigned applicants sit at Home;
/// non-applicants stay at their current placement.
class Matching {
 public:
  Matching() = default;
  explicit Matching(std::vector<FacilityId> placements) : placements_(std::move(placements)) {}

  /// Every applicant at home, every non-applicant at its current placement.
  static Matching initial(const Market& market);

  FacilityId operator[](std::size_t child) const { return placements_[child]; }
  void assign(std::size_t child, FacilityId facility) { placements_[child] = facility; }
  std::span<const FacilityId> placements() const { return placements_; }
  std::size_t size() const { return placements_.size(); }

  AssignmentTuple family_tuple(const Market& market, std::size_t family) const;

  friend bool operator==(const Matching&, const Matching&) = default;

 private:
  std::vector<FacilityId> placements_;
};

struct CutoffCell {
  bool full = false;
  /// Minimum assigned applicant score; meaningful only when full.
  std::int64_t score = 0;
  /// Family holding the minimum priority in the cell (tie-break witness).
  FamilyId marginal{};
  /// Zero-capacity cell: the minimum over an empty set, nobody clears it.
  bool closed = false;
};

class CutoffTable {
 public:
  CutoffTable() = default;
  explicit CutoffTable(std::size_t num_facilities)
      : cells_(num_facilities * kNumGrades) {}

  const CutoffCell& cell(std::size_t facility, int grade) const {
    return cells_[facility * kNumGrades + grade];
  }
  CutoffCell& cell(std::size_t facility, int grade) { return cells_[facility * kNumGrades + grade]; }

  /// P_{d,g}: 0 when slack, minimum assigned score when full, int64 max when closed.
  std::int64_t cutoff(const Market& market, FacilityId facility, Grade grade) const;

  /// Whether a family with priority `p` clears the cell. Unbounded kinds always
  /// clear. Equal scores fall back to the family-id tie-break.
  bool clears(const Market& market, std::size_t facility, int grade, const Priority& p) const;

  friend bool operator==(const CutoffTable&, const CutoffTable&) = default;

 private:
  std::vector<CutoffCell> cells_;
};

struct BlockingCoalition {
  FamilyId family;
  AssignmentTuple tuple;
  std::string witness;
};

struct ReportedPreferences {};
/// Preferences ranked by systematic utility V under a parameter vector.
struct SystematicPreferences {
  const Theta* theta = nullptr;
};
using PreferenceSource = std::variant<ReportedPreferences, SystematicPreferences>;

struct MechanismResult {
  Matching matching;
  CutoffTable cutoffs;
  /// Index of each family's assigned tuple within its reported order.
  std::vector<std::size_t> positions;
  int repair_iterations = 0;
};

ReportedOrder induce_reported_order(const Market& market, std::size_t family);
std::vector<ReportedOrder> induce_reported_orders(const Market& market);

/// Throws CapacityViolation when a licensed cell holds more applicants than seats.
CutoffTable compute_cutoffs(const Matching& matching, const Market& market,
                            const PolicyScenario& policy);

/// Every (family, tuple) pair that blocks `matching`: the tuple is preferred,
/// respects fixed sibling slots, and every applicant slot clears its cutoff.
std::vector<BlockingCoalition> verify_stability(const Matching& matching, const Market& market,
                                                const PolicyScenario& policy,
                                                const PreferenceSource& source);

/// Reported orders with every tuple resolved to its capacity cells
/// (facility index * kNumGrades + grade, or -1 when the slot consumes no seat).
/// Independent of the policy, so one instance serves a whole scenario grid.
struct CompiledOrders {
  std::vector<ReportedOrder> orders;
  std::vector<std::vector<std::array<std::int32_t, 2>>> cells;
};

CompiledOrders compile_orders(const Market& market, std::vector<ReportedOrder> orders);

/// Family-level serial dictatorship by priority, followed by a bounded repair
/// loop. Throws NoStableMatching when the loop cannot clear every coalition.
MechanismResult run_mechanism(const Market& market, const PolicyScenario& policy);
MechanismResult run_mechanism(const Market& market, const PolicyScenario& policy,
                              const CompiledOrders& orders);

/// Share of families with at least one applicant placed at a licensed facility.
struct GroupRates {
  std::array<std::optional<double>, 3> rate{};
  std::array<std::size_t, 3> families{};

  std::optional<double> operator[](SiblingStatus s) const { return rate[static_cast<int>(s)]; }
};

GroupRates assignment_rates(const Matching& matching, const Market& market);

/// 1-based rank of the child's placement in its ROL, if listed.
std::optional<int> rank_in_rol(const Market& market, std::size_t child, FacilityId facility);

void write_matching(std::ostream& out, const Matching& matching, const Market& market);
void write_cutoffs(std::ostream& out, const CutoffTable& cutoffs, const Market& market);

}  // namespace daycare
