#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "daycare/market.hpp"
#include "daycare/matching.hpp"
#include "daycare/utility.hpp"

namespace daycare {

/// Row order of the welfare tables.
enum class WelfareGroup { All, Incumbent, NoSiblings, Simultaneous };
inline constexpr std::array<WelfareGroup, 4> kWelfareGroups = {
    WelfareGroup::All, WelfareGroup::Incumbent, WelfareGroup::NoSiblings,
    WelfareGroup::Simultaneous};
std::string_view to_string(WelfareGroup group);

/// Group means in km: V = U - Gamma - dist_km.
struct GroupWelfare {
  std::size_t n = 0;
  double V = 0.0;
  double U = 0.0;
  double Gamma = 0.0;
  double dist_km = 0.0;
};

struct ScenarioResult {
  PolicyScenario policy;
  double mean_welfare_km = 0.0;
  GroupRates rates;
  std::optional<double> inequality_sd;
  std::array<GroupWelfare, 4> welfare{};
  bool failed = false;
  std::string failure;

  const GroupWelfare& group(WelfareGroup g) const { return welfare[static_cast<int>(g)]; }
};

/// Population SD (divisor 3) of the three group rates; missing if any rate is.
std::optional<double> inequality_sd(const std::array<std::optional<double>, 3>& rates);
double inequality_sd(std::array<double, 3> rates);

/// Per-family breakdown in km units (every component divided by kappa except distance).
std::vector<UtilityBreakdown> family_welfare(const Market& market, const Theta& theta,
                                             const Matching& matching);

ScenarioResult summarize_scenario(const Market& market, const PolicyScenario& policy,
                                  const Matching& matching,
                                  std::span<const UtilityBreakdown> welfare);

/// One policy run end to end, keeping the matching and the per-family welfare.
struct ScenarioEvaluation {
  ScenarioResult summary;
  MechanismResult mechanism;
  std::vector<UtilityBreakdown> welfare;
};

ScenarioEvaluation evaluate_scenario(const Market& market, const Theta& theta,
                                     const PolicyScenario& policy);

/// Inclusive square grid of (simultaneous, incumbent) points.
struct GridSpec {
  int min = 0;
  int max = 400;
  int step = 5;

  /// "MIN:MAX:STEP"; throws ConfigError.
  static GridSpec parse(std::string_view text);
  std::vector<PolicyScenario> policies() const;
};

/// Runs every policy against the reported orders induced once from the market.
/// Results come back sorted by (x, y); failed scenarios are flagged, not thrown.
std::vector<ScenarioResult> simulate_policy_grid(const Market& market, const Theta& theta,
                                                 std::span<const PolicyScenario> policies,
                                                 int threads = 0);

struct WelfareRow {
  WelfareGroup group;
  std::size_t n = 0;
  double before = 0.0;
  double after = 0.0;
  double dV = 0.0;
  double dU = 0.0;
  double dGamma = 0.0;
  double dDist = 0.0;
};

/// Throws DataError when group sizes differ and NumericError when a row
/// fails dV = dU - dGamma - dDist.
std::vector<WelfareRow> welfare_decomposition_table(const ScenarioResult& before,
                                                    const ScenarioResult& after);

struct QuantileFit {
  double tau = 0.5;
  std::optional<double> intercept;
  std::optional<double> slope;
  std::optional<double> se_intercept;
  std::optional<double> se_slope;
  std::size_t n = 0;
  double loss = 0.0;
};

double pinball_loss(std::span<const double> y, std::span<const double> x, double intercept,
                    double slope, double tau);

/// Lower empirical quantile, averaging the two middle values for even-count medians.
double empirical_quantile(std::vector<double> values, double tau);

inline constexpr std::uint64_t kBootstrapSeed = 20240601;

/// Binary regressor: within-group quantiles. Throws DomainError when n < 10
/// or x is not 0/1.
QuantileFit quantile_regression(std::span<const double> y, std::span<const bool> x, double tau,
                                int bootstrap_reps = 0, std::uint64_t seed = kBootstrapSeed);

/// Continuous regressor: exact pinball minimizer over lines through two observations.
QuantileFit quantile_regression_line(std::span<const double> y, std::span<const double> x,
                                     double tau);

inline constexpr double kFrontierTau = 0.01;

/// Inequality on welfare at tau = 0.01 over the non-failed scenarios.
QuantileFit frontier_slope(std::span<const ScenarioResult> results);

struct SplitFamilyEffect {
  FamilyId family;
  double percentile = 0.0;
  /// Slot moved to its first choice.
  std::size_t moved_slot = 0;
  AssignmentTuple baseline;
  AssignmentTuple counterfactual;
  double dU = 0.0;
  double dGamma = 0.0;
  double dDist = 0.0;
};

struct SplitBin {
  int lower = 0;
  int upper = 10;
  std::size_t n = 0;
  double dU = 0.0;
  double dGamma = 0.0;
  double dDist = 0.0;
};

struct SplitCounterfactual {
  std::vector<SplitFamilyEffect> families;
  std::vector<SplitBin> bins;
};

/// Joint-preferring simultaneous families placed together with some child
/// below its first choice: the worse-ranked child moves to its first choice.
/// Contributions in km, signed as they enter V (dGamma <= 0, dDist = -change in km).
SplitCounterfactual split_reassignment_counterfactual(const Market& market, const Theta& theta,
                                                      const Matching& matching,
                                                      const PolicyScenario& policy);

/// Mid-rank percentile (0-100) of each value within the sample.
std::vector<double> percentile_ranks(std::span<const std::int64_t> values);

struct HeterogeneityRow {
  SiblingStatus status;
  int quartile = 1;
  std::size_t n = 0;
  std::optional<double> percentile_before;
  std::optional<double> percentile_after;
  std::optional<double> welfare_before;
  std::optional<double> welfare_after;
};

/// Quartiles by after-policy score within sibling status; percentiles use
/// the overall score distribution under each policy.
std::vector<HeterogeneityRow> heterogeneity_table(const Market& market,
                                                  const ScenarioEvaluation& before,
                                                  const ScenarioEvaluation& after);

inline constexpr std::array<double, 3> kDispersionTaus = {0.25, 0.5, 0.75};

struct DispersionValue {
  std::string group;
  FamilyId family;
  double dispersion_km = 0.0;
};

struct DispersionAnalysis {
  std::vector<DispersionValue> values;
  std::vector<QuantileFit> fits;
};

/// Mean pairwise distance over the union of a family's listed facilities,
/// for families listing at least two.
DispersionAnalysis dispersion_analysis(const Market& market, int bootstrap_reps = 0,
                                       std::uint64_t seed = kBootstrapSeed);

struct HeatmapCell {
  int x = 0;
  int y = 0;
  std::size_t n = 0;
  double mean_welfare_km = 0.0;
};

std::vector<HeatmapCell> welfare_heatmap(std::span<const ScenarioResult> results, int bin_width = 20);

void write_grid(std::ostream& out, std::span<const ScenarioResult> results);
void write_decomposition(std::ostream& out, std::span<const WelfareRow> rows);
void write_heterogeneity(std::ostream& out, std::span<const HeterogeneityRow> rows);
void write_split_counterfactual(std::ostream& out, const SplitCounterfactual& result);
void write_quantile_fits(std::ostream& out, std::span<const QuantileFit> fits);
void write_dispersion_values(std::ostream& out, std::span<const DispersionValue> values);
void write_heatmap(std::ostream& out, std::span<const HeatmapCell> cells);

}  // namespace daycare
