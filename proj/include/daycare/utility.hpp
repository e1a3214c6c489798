#pragma once

#include <array>
#include <initializer_list>
#include <map>
#include <span>
#include <string>

#include "daycare/core.hpp"

namespace daycare {

class Market;

/// Preference parameters. age[0] is the normalized grade-0 effect and stays 0;
/// home carries no facility effect.
struct Theta {
  std::array<double, kNumGrades> age{};
  /// One effect per licensed facility.
  std::map<FacilityId, double> facility;
  double alpha_nonlicensed = 0.0;
  double alpha_kindergarten = 0.0;
  std::array<double, kNumCovariates> beta{};
  double gamma0 = 0.0;
  std::array<double, kNumCovariates> gamma{};
  double kappa = 0.5;

  friend bool operator==(const Theta&, const Theta&) = default;
};

/// Reference full-model values for the non-facility parameters; facility
/// effects are left empty for the caller (or the generator) to fill.
Theta reference_theta();

/// Per-child facility ids in the family's child order (1 or 2 slots).
struct AssignmentTuple {
  std::array<FacilityId, 2> slots{kHome, kHome};
  std::size_t size = 1;

  AssignmentTuple() = default;
  AssignmentTuple(std::initializer_list<FacilityId> ids);

  FacilityId operator[](std::size_t i) const { return slots[i]; }
  FacilityId& operator[](std::size_t i) { return slots[i]; }
  std::span<const FacilityId> view() const { return {slots.data(), size}; }
  bool is_diagonal() const { return size < 2 || slots[0] == slots[1]; }

  friend bool operator==(const AssignmentTuple& a, const AssignmentTuple& b) {
    return a.size == b.size && a.slots[0] == b.slots[0] && (a.size < 2 || a.slots[1] == b.slots[1]);
  }
};

std::string to_string(const AssignmentTuple& tuple);

/// V = U - Gamma - kappa * dist_km, computed once from the three parts.
struct UtilityBreakdown {
  double U = 0.0;
  double Gamma = 0.0;
  double dist_km = 0.0;
  double V = 0.0;
};

double facility_effect(const Market& market, FacilityId facility, const Theta& theta);
double covariate_shift(const Covariates& z, const std::array<double, kNumCovariates>& coef);
/// Gamma-bar: fixed cost of splitting siblings, gamma0 + Z'gamma.
double split_cost(const Covariates& z, const Theta& theta);

double flow_utility(const Market& market, std::size_t child, FacilityId facility,
                    const Theta& theta);
double split_penalty(const Market& market, std::size_t family, const AssignmentTuple& tuple,
                     const Theta& theta);
double tuple_distance_km(const Market& market, std::size_t family, const AssignmentTuple& tuple);
UtilityBreakdown systematic_utility(const Market& market, std::size_t family,
                                    const AssignmentTuple& tuple, const Theta& theta);

/// Utility expressed in commuting kilometers (value / kappa).
double km_equivalent(double value, const Theta& theta);

/// Flat key=value text, one parameter per line, shortest round-trip decimals.
std::string theta_to_text(const Theta& theta);
Theta theta_from_text(const std::string& text);

}  // namespace daycare
