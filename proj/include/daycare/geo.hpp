#pragma once

#include <span>

#include "daycare/core.hpp"

namespace daycare {

class Market;

/// IUGG mean Earth radius.
inline constexpr double kEarthRadiusKm = 6371.0088;

struct GeoPoint {
  double lat = 0.0;  ///< degrees, [-90, 90]
  double lon = 0.0;  ///< degrees, (-180, 180]

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Throws DomainError for out-of-range coordinates.
void check_point(const GeoPoint& p);

double haversine_km(const GeoPoint& a, const GeoPoint& b);

/// Shortest home -> d -> d2 route over both visit orders. Equals
/// haversine_km(home, d) when d == d2.
double trip_chain_km(const GeoPoint& home, const GeoPoint& d, const GeoPoint& d2);

/// Mean haversine distance over all unordered pairs of listed facilities.
/// Repeated entries contribute zero-distance pairs. Throws DomainError for
/// fewer than two entries and LookupError for unknown ids.
double rol_mean_pairwise_dispersion(std::span<const FacilityId> rol, const Market& market);

}  // namespace daycare
