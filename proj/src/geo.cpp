#include "daycare/geo.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "daycare/market.hpp"

namespace daycare {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

void check_point(const GeoPoint& p) {
  if (!(p.lat >= -90.0 && p.lat <= 90.0) || !(p.lon > -180.0 && p.lon <= 180.0)) {
    throw DomainError("coordinate out of range: (" + std::to_string(p.lat) + ", " +
                      std::to_string(p.lon) + ")");
  }
}

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
  check_point(a);
  check_point(b);
  if (a == b) return 0.0;
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::min(1.0, h)));
}

double trip_chain_km(const GeoPoint& home, const GeoPoint& d, const GeoPoint& d2) {
  if (d == d2) return haversine_km(home, d);
  const double between = haversine_km(d, d2);
  return std::min(haversine_km(home, d) + between, haversine_km(home, d2) + between);
}

double rol_mean_pairwise_dispersion(std::span<const FacilityId> rol, const Market& market) {
  if (rol.size() < 2) {
    throw DomainError("dispersion needs at least two listed facilities");
  }
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < rol.size(); ++i) {
    const Daycare& a = market.facility(rol[i]);
    for (std::size_t j = i + 1; j < rol.size(); ++j) {
      const Daycare& b = market.facility(rol[j]);
      total += haversine_km({a.lat, a.lon}, {b.lat, b.lon});
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

}  // namespace daycare
