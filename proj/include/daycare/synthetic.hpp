#pragma once

#include <array>
#include <cstdint>

#include "daycare/market.hpp"
#include "daycare/matching.hpp"
#include "daycare/utility.hpp"

namespace daycare {

struct SyntheticConfig {
  std::size_t num_families = 1273;
  /// Shares of NoSiblings, Simultaneous and Incumbent families.
  std::array<double, 3> status_shares = {0.73, 0.10, 0.17};
  std::size_t num_licensed = 60;
  std::size_t num_nonlicensed = 31;
  std::size_t num_kindergartens = 32;
  double lat_min = 37.35;
  double lat_max = 37.45;
  double lon_min = 140.30;
  double lon_max = 140.45;
  /// Mean seats per licensed facility, by grade.
  std::array<double, kNumGrades> capacity_mean = {6.14, 5.32, 3.5, 4.39, 2.96, 2.67};
  /// Relative frequency of applicant grades.
  std::array<double, kNumGrades> grade_weights = {296, 609, 173, 259, 64, 21};
  std::array<double, kNumCovariates> covariate_share = {0.778, 0.093, 0.13, 0.046, 0.481};
  /// Share of simultaneous families that require joint assignment.
  double joint_share = 0.73;
  int base_score_min = 400;
  int base_score_step = 10;
  int base_score_trials = 20;
  double base_score_p = 0.25;
  /// Weights for ROL lengths 1..10.
  std::array<double, 10> list_length_weights = {0.25, 0.2, 0.15, 0.12, 0.09,
                                                0.07, 0.05, 0.03, 0.02, 0.02};
  double facility_effect_mean = 1.0;
  double facility_effect_sd = 0.75;
  /// Policy in force when the observed matching was formed.
  PolicyScenario observation_policy = PolicyScenario::after_reform();

  /// Throws ConfigError on infeasible settings.
  void validate() const;
};

/// Reference parameters with the outside options filled in; facility effects
/// are drawn by the generator.
Theta default_true_theta();

struct SyntheticMarket {
  Market market;
  /// Input theta with any missing licensed-facility effects filled in.
  Theta theta_true;
  /// Serial dictatorship on true utilities under the observation policy;
  /// stable with respect to true preferences.
  Matching observed;
};

SyntheticMarket generate_synthetic_market(const SyntheticConfig& config, const Theta& theta_true,
                                          std::uint64_t seed);

}  // namespace daycare
