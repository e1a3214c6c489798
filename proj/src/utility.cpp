#include "daycare/utility.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "daycare/geo.hpp"
#include "daycare/market.hpp"

namespace daycare {

Theta reference_theta() {
  Theta t;
  t.age = {0.0, -2.886, 0.085, -1.096, -1.367, 0.564};
  t.beta = {1.218, 0.957, -0.261, 1.422, -1.195};
  t.gamma0 = 3.485;
  t.gamma = {0.192, 1.127, 2.029, 6.753, 0.315};
  t.kappa = 0.7230;
  return t;
}

AssignmentTuple::AssignmentTuple(std::initializer_list<FacilityId> ids) {
  if (ids.size() < 1 || ids.size() > 2) throw DomainError("tuples hold one or two slots");
  size = ids.size();
  std::size_t i = 0;
  for (FacilityId id : ids) slots[i++] = id;
}

std::string to_string(const AssignmentTuple& tuple) {
  std::string out = "(";
  for (std::size_t i = 0; i < tuple.size; ++i) {
    if (i) out += ",";
    out += std::to_string(tuple[i].value);
  }
  return out + ")";
}

double facility_effect(const Market& market, FacilityId facility, const Theta& theta) {
  const Daycare& d = market.facility(facility);
  switch (d.kind) {
    case FacilityKind::Home: return 0.0;
    case FacilityKind::Nonlicensed: return theta.alpha_nonlicensed;
    case FacilityKind::Kindergarten: return theta.alpha_kindergarten;
    case FacilityKind::Licensed: {
      auto it = theta.facility.find(facility);
      if (it == theta.facility.end()) {
        throw LookupError("theta has no effect for facility " + std::to_string(facility.value));
      }
      return it->second;
    }
  }
  return 0.0;
}

double covariate_shift(const Covariates& z, const std::array<double, kNumCovariates>& coef) {
  double s = 0.0;
  for (int k = 0; k < kNumCovariates; ++k) {
    if (z[k]) s += coef[k];
  }
  return s;
}

double split_cost(const Covariates& z, const Theta& theta) {
  return theta.gamma0 + covariate_shift(z, theta.gamma);
}

double flow_utility(const Market& market, std::size_t child, FacilityId facility,
                    const Theta& theta) {
  const double effect = facility_effect(market, facility, theta);
  if (facility == kHome) return 0.0;
  const Child& c = market.children()[child];
  const Family& f = market.families()[market.child_family(child)];
  return theta.age[c.grade.value()] + effect + covariate_shift(f.z, theta.beta);
}

double split_penalty(const Market& market, std::size_t family, const AssignmentTuple& tuple,
                     const Theta& theta) {
  if (tuple.size < 2 || tuple.is_diagonal()) return 0.0;
  return split_cost(market.families()[family].z, theta);
}

double tuple_distance_km(const Market& market, std::size_t family, const AssignmentTuple& tuple) {
  const Family& f = market.families()[family];
  const GeoPoint home{f.lat, f.lon};
  auto where = [&](FacilityId id) {
    const Daycare& d = market.facility(id);
    return GeoPoint{d.lat, d.lon};
  };
  if (tuple.size == 1) {
    return tuple[0] == kHome ? 0.0 : haversine_km(home, where(tuple[0]));
  }
  const bool home0 = tuple[0] == kHome;
  const bool home1 = tuple[1] == kHome;
  if (home0 && home1) return 0.0;
  if (home0) return haversine_km(home, where(tuple[1]));
  if (home1) return haversine_km(home, where(tuple[0]));
  return trip_chain_km(home, where(tuple[0]), where(tuple[1]));
}

UtilityBreakdown systematic_utility(const Market& market, std::size_t family,
                                    const AssignmentTuple& tuple, const Theta& theta) {
  const auto& kids = market.family_children(family);
  if (kids.size() != tuple.size) {
    throw DomainError("tuple size " + std::to_string(tuple.size) + " does not match family " +
                      std::to_string(market.families()[family].id.value));
  }
  UtilityBreakdown b;
  for (std::size_t s = 0; s < tuple.size; ++s) {
    b.U += flow_utility(market, kids[s], tuple[s], theta);
  }
  b.Gamma = split_penalty(market, family, tuple, theta);
  b.dist_km = tuple_distance_km(market, family, tuple);
  b.V = b.U - b.Gamma - theta.kappa * b.dist_km;
  return b;
}

double km_equivalent(double value, const Theta& theta) {
  if (!(theta.kappa > 0.0)) throw DomainError("kappa must be positive for km conversion");
  return value / theta.kappa;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DataError("bad value for " + key + ": '" + text + "'");
  }
  return v;
}

}  // namespace

std::string theta_to_text(const Theta& theta) {
  std::ostringstream out;
  for (int g = 1; g < kNumGrades; ++g) {
    out << "alpha_age_" << g << '=' << format_double(theta.age[g]) << '\n';
  }
  for (const auto& [id, v] : theta.facility) {
    out << "alpha_fac_" << id.value << '=' << format_double(v) << '\n';
  }
  out << "alpha_nonlicensed=" << format_double(theta.alpha_nonlicensed) << '\n';
  out << "alpha_kindergarten=" << format_double(theta.alpha_kindergarten) << '\n';
  for (int k = 0; k < kNumCovariates; ++k) {
    out << "beta_" << kCovariateNames[k] << '=' << format_double(theta.beta[k]) << '\n';
  }
  out << "gamma_0=" << format_double(theta.gamma0) << '\n';
  for (int k = 0; k < kNumCovariates; ++k) {
    out << "gamma_" << kCovariateNames[k] << '=' << format_double(theta.gamma[k]) << '\n';
  }
  out << "kappa=" << format_double(theta.kappa) << '\n';
  return out.str();
}

Theta theta_from_text(const std::string& text) {
  Theta t;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("theta line without '=': " + line);
    const std::string key = line.substr(0, eq);
    const double v = parse_double(key, line.substr(eq + 1));

    auto covariate = [&](std::string_view prefix) -> int {
      if (key.rfind(prefix, 0) != 0) return -1;
      const std::string_view rest = std::string_view(key).substr(prefix.size());
      for (int k = 0; k < kNumCovariates; ++k) {
        if (kCovariateNames[k] == rest) return k;
      }
      return -1;
    };

    if (key.rfind("alpha_age_", 0) == 0) {
      const int g = static_cast<int>(parse_double(key, key.substr(10)));
      if (g < 1 || g >= kNumGrades) throw DataError("bad age key " + key);
      t.age[g] = v;
    } else if (key.rfind("alpha_fac_", 0) == 0) {
      t.facility[FacilityId{static_cast<std::int64_t>(parse_double(key, key.substr(10)))}] = v;
    } else if (key == "alpha_nonlicensed") {
      t.alpha_nonlicensed = v;
    } else if (key == "alpha_kindergarten") {
      t.alpha_kindergarten = v;
    } else if (key == "gamma_0") {
      t.gamma0 = v;
    } else if (key == "kappa") {
      t.kappa = v;
    } else if (int k = covariate("beta_"); k >= 0) {
      t.beta[k] = v;
    } else if (int k2 = covariate("gamma_"); k2 >= 0) {
      t.gamma[k2] = v;
    } else {
      throw DataError("unknown theta key " + key);
    }
  }
  return t;
}

}  // namespace daycare
