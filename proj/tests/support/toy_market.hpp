#pragma once

#include <array>
#include <vector>

#include "daycare/market.hpp"

namespace daycare::testing {

/// Incremental market assembly for hand-built fixtures. Home is always id 0.
class MarketBuilder {
 public:
  MarketBuilder() { daycares_.push_back({kHome, FacilityKind::Home, 0.0, 0.0, {}}); }

  FacilityId licensed(double lat, double lon, std::array<int, kNumGrades> capacity) {
    Daycare d{next_facility(), FacilityKind::Licensed, lat, lon, {}};
    for (int g = 0; g < kNumGrades; ++g) d.capacity[g] = capacity[g];
    daycares_.push_back(d);
    return d.id;
  }

  FacilityId unbounded(FacilityKind kind, double lat, double lon) {
    daycares_.push_back({next_facility(), kind, lat, lon, {}});
    return daycares_.back().id;
  }

  FamilyId family(int base_score, double lat = 37.4, double lon = 140.4, Covariates z = {},
                  bool joint = false) {
    Family f;
    f.id = FamilyId{static_cast<std::int64_t>(families_.size()) + 1};
    f.base_score = base_score;
    f.lat = lat;
    f.lon = lon;
    f.z = z;
    f.joint_required = joint;
    families_.push_back(f);
    return f.id;
  }

  ChildId child(FamilyId family, int grade, std::vector<FacilityId> rol = {},
                FacilityId current = kHome) {
    const ChildId id{static_cast<std::int64_t>(children_.size()) + 1};
    children_.push_back({id, family, Grade(grade), current});
    Family& f = families_[static_cast<std::size_t>(family.value - 1)];
    f.children.push_back(id);
    if (!rol.empty() || current == kHome) f.rols[id] = std::move(rol);
    return id;
  }

  Market build() const { return Market(daycares_, children_, families_, 1); }

 private:
  FacilityId next_facility() const {
    return FacilityId{static_cast<std::int64_t>(daycares_.size())};
  }

  std::vector<Daycare> daycares_;
  std::vector<Child> children_;
  std::vector<Family> families_;
};

/// Same capacity for every grade.
inline std::array<int, kNumGrades> seats(int n) { return {n, n, n, n, n, n}; }

}  // namespace daycare::testing
