#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "daycare/geo.hpp"
#include "toy_market.hpp"

using namespace daycare;

namespace {

// Spherical law of cosines; accurate enough away from tiny separations.
double cosine_law_km(GeoPoint a, GeoPoint b) {
  const double r = std::numbers::pi / 180.0;
  const double c = std::sin(a.lat * r) * std::sin(b.lat * r) +
                   std::cos(a.lat * r) * std::cos(b.lat * r) * std::cos((a.lon - b.lon) * r);
  return kEarthRadiusKm * std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace

TEST_CASE("haversine agrees with closed forms") {
  const double per_degree = kEarthRadiusKm * std::numbers::pi / 180.0;
  CHECK(haversine_km({37.0, 140.0}, {38.0, 140.0}) == doctest::Approx(per_degree).epsilon(1e-12));
  CHECK(haversine_km({37.4, 140.4}, {37.4, 140.4}) == 0.0);

  const GeoPoint a{37.35, 140.31}, b{37.44, 140.42}, c{-33.9, 151.2};
  CHECK(haversine_km(a, b) == doctest::Approx(cosine_law_km(a, b)).epsilon(1e-9));
  CHECK(haversine_km(a, c) == doctest::Approx(cosine_law_km(a, c)).epsilon(1e-9));
  CHECK(haversine_km(a, b) == haversine_km(b, a));
}

TEST_CASE("coordinates are range checked") {
  CHECK_THROWS_AS(check_point({91.0, 0.0}), DomainError);
  CHECK_THROWS_AS(check_point({0.0, -180.0}), DomainError);
  CHECK_NOTHROW(check_point({-90.0, 180.0}));
  CHECK_THROWS_AS(haversine_km({100.0, 0.0}, {0.0, 0.0}), DomainError);
}

TEST_CASE("trip chain takes the shorter visiting order") {
  const GeoPoint home{37.40, 140.40}, d{37.41, 140.40}, e{37.40, 140.45};
  const double via_d = haversine_km(home, d) + haversine_km(d, e);
  const double via_e = haversine_km(home, e) + haversine_km(e, d);
  CHECK(trip_chain_km(home, d, e) == std::min(via_d, via_e));
  CHECK(trip_chain_km(home, e, d) == trip_chain_km(home, d, e));
  CHECK(trip_chain_km(home, d, d) == haversine_km(home, d));
}

TEST_CASE("mean pairwise dispersion of listed facilities") {
  daycare::testing::MarketBuilder b;
  const auto d1 = b.licensed(37.40, 140.40, daycare::testing::seats(1));
  const auto d2 = b.licensed(37.42, 140.40, daycare::testing::seats(1));
  const auto d3 = b.licensed(37.40, 140.43, daycare::testing::seats(1));
  const Market m = b.build();
  const GeoPoint p1{37.40, 140.40}, p2{37.42, 140.40}, p3{37.40, 140.43};
  const double expect =
      (haversine_km(p1, p2) + haversine_km(p1, p3) + haversine_km(p2, p3)) / 3.0;
  const FacilityId list[] = {d1, d2, d3};
  CHECK(rol_mean_pairwise_dispersion(list, m) == doctest::Approx(expect).epsilon(1e-14));

  const FacilityId repeated[] = {d1, d1};
  CHECK(rol_mean_pairwise_dispersion(repeated, m) == 0.0);
  const FacilityId single[] = {d1};
  CHECK_THROWS_AS(rol_mean_pairwise_dispersion(single, m), DomainError);
  const FacilityId unknown[] = {d1, FacilityId{99}};
  CHECK_THROWS_AS(rol_mean_pairwise_dispersion(unknown, m), LookupError);
}
