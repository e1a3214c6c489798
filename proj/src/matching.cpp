#include "daycare/matching.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <ostream>
#include <tuple>

namespace daycare {
namespace {

constexpr int kUnbounded = std::numeric_limits<int>::max();

std::vector<FacilityId> dedup(const std::vector<FacilityId>& rol) {
  std::vector<FacilityId> out;
  for (FacilityId d : rol) {
    if (std::find(out.begin(), out.end(), d) == out.end()) out.push_back(d);
  }
  return out;
}

int rank_of(const std::vector<FacilityId>& list, FacilityId d) {
  if (d == kHome) return static_cast<int>(list.size()) + 1;
  auto it = std::find(list.begin(), list.end(), d);
  return static_cast<int>(it - list.begin()) + 1;
}

std::vector<Priority> priorities(const Market& market, const PolicyScenario& policy) {
  std::vector<Priority> p(market.families().size());
  for (std::size_t f = 0; f < p.size(); ++f) p[f] = family_priority(market, f, policy);
  return p;
}

std::vector<std::size_t> priority_order(const std::vector<Priority>& p) {
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return outranks(p[a], p[b]); });
  return order;
}

bool is_licensed(const Market& market, FacilityId d) {
  return market.facility(d).kind == FacilityKind::Licensed;
}

std::string describe_cell(const Market& market, const CutoffTable& cutoffs, std::size_t fac,
                          int grade) {
  const Daycare& d = market.daycares()[fac];
  std::string out = "facility " + std::to_string(d.id.value) + " grade " + std::to_string(grade);
  if (d.kind != FacilityKind::Licensed) return out + " unbounded";
  const CutoffCell& c = cutoffs.cell(fac, grade);
  if (c.closed) return out + " closed";
  if (!c.full) return out + " has a vacancy";
  return out + " cutoff " + std::to_string(c.score) + " (marginal family " +
         std::to_string(c.marginal.value) + ")";
}

/// Mutable mechanism state over compiled orders.
class Mechanism {
 public:
  Mechanism(const Market& market, const PolicyScenario& policy, const CompiledOrders& orders)
      : market_(market),
        orders_(orders),
        priority_(priorities(market, policy)),
        by_priority_(priority_order(priority_)),
        capacity_(market.daycares().size() * kNumGrades, kUnbounded),
        used_(capacity_.size(), 0),
        position_(market.families().size(), kUnplaced) {
    if (orders.orders.size() != market.families().size()) {
      throw DomainError("one reported order per family required");
    }
    for (std::size_t d : market.licensed()) {
      for (int g = 0; g < kNumGrades; ++g) {
        capacity_[d * kNumGrades + g] = market.daycares()[d].capacity[g].value_or(kUnbounded);
      }
    }
  }

  int run() {
    for (std::size_t f : by_priority_) place_first_fit(f);
    const std::size_t bound = 10 * market_.families().size();
    for (std::size_t iter = 0;; ++iter) {
      auto blocking = find_blocking();
      if (!blocking) return static_cast<int>(iter);
      if (iter >= bound) {
        throw NoStableMatching("no reported-stable matching found after " + std::to_string(iter) +
                               " repair iterations");
      }
      grant(blocking->first, blocking->second);
    }
  }

  Matching matching() const {
    Matching m = Matching::initial(market_);
    for (std::size_t f = 0; f < position_.size(); ++f) {
      const AssignmentTuple& t = orders_.orders[f].tuples[position_[f]];
      const auto& kids = market_.family_children(f);
      for (std::size_t s = 0; s < kids.size(); ++s) {
        if (market_.is_applying(kids[s])) m.assign(kids[s], t[s]);
      }
    }
    return m;
  }

  const std::vector<std::size_t>& positions() const { return position_; }

 private:
  static constexpr std::size_t kUnplaced = std::numeric_limits<std::size_t>::max();

  using Cells = std::array<std::int32_t, 2>;

  bool fits(const Cells& c) const {
    if (c[0] >= 0 && c[0] == c[1]) return capacity_[c[0]] - used_[c[0]] >= 2;
    for (std::int32_t x : c) {
      if (x >= 0 && capacity_[x] - used_[x] < 1) return false;
    }
    return true;
  }

  void occupy(std::size_t f, std::size_t t, int sign) {
    for (std::int32_t x : orders_.cells[f][t]) {
      if (x >= 0) used_[x] += sign;
    }
  }

  void place(std::size_t f, std::size_t t) {
    position_[f] = t;
    occupy(f, t, +1);
  }

  void release(std::size_t f) {
    if (position_[f] == kUnplaced) return;
    occupy(f, position_[f], -1);
    position_[f] = kUnplaced;
  }

  void place_first_fit(std::size_t f) {
    const auto& cells = orders_.cells[f];
    for (std::size_t t = 0; t < cells.size(); ++t) {
      if (fits(cells[t])) {
        place(f, t);
        return;
      }
    }
    throw DomainError("reported order without a feasible tuple for family " +
                      std::to_string(market_.families()[f].id.value));
  }

  /// Lowest-priority occupant of each cell; -1 when empty.
  std::vector<std::int64_t> marginal_occupants() const {
    std::vector<std::int64_t> marginal(capacity_.size(), -1);
    for (std::size_t f = 0; f < position_.size(); ++f) {
      if (position_[f] == kUnplaced) continue;
      for (std::int32_t x : orders_.cells[f][position_[f]]) {
        if (x < 0) continue;
        if (marginal[x] < 0 || outranks(priority_[marginal[x]], priority_[f])) marginal[x] = f;
      }
    }
    return marginal;
  }

  std::optional<std::pair<std::size_t, std::size_t>> find_blocking() const {
    const auto marginal = marginal_occupants();
    auto clears = [&](std::int32_t x, const Priority& p) {
      if (x < 0) return true;
      if (capacity_[x] == 0) return false;
      if (used_[x] < capacity_[x]) return true;
      const Priority& m = priority_[marginal[x]];
      return p == m || outranks(p, m);
    };
    for (std::size_t f : by_priority_) {
      const auto& cells = orders_.cells[f];
      for (std::size_t t = 0; t < position_[f]; ++t) {
        if (clears(cells[t][0], priority_[f]) && clears(cells[t][1], priority_[f])) {
          return std::pair{f, t};
        }
      }
    }
    return std::nullopt;
  }

  void grant(std::size_t f, std::size_t t) {
    const Cells cells = orders_.cells[f][t];
    const std::string who = "family " + std::to_string(market_.families()[f].id.value);
    release(f);
    std::vector<std::size_t> evicted;
    for (std::size_t k = 0; k < 2; ++k) {
      const std::int32_t x = cells[k];
      if (x < 0 || (k == 1 && x == cells[0])) continue;
      const int need = (cells[0] == cells[1]) ? 2 : 1;
      if (capacity_[x] < need) {
        throw NoStableMatching(who + " blocks with a tuple exceeding cell capacity");
      }
      while (capacity_[x] - used_[x] < need) {
        std::optional<std::size_t> victim;
        for (std::size_t g = 0; g < position_.size(); ++g) {
          if (g == f || position_[g] == kUnplaced) continue;
          const Cells& held = orders_.cells[g][position_[g]];
          if (held[0] != x && held[1] != x) continue;
          if (!victim || outranks(priority_[*victim], priority_[g])) victim = g;
        }
        if (!victim) throw NoStableMatching(who + " cannot be seated by evicting other families");
        release(*victim);
        evicted.push_back(*victim);
      }
    }
    place(f, t);
    std::sort(evicted.begin(), evicted.end(), [&](std::size_t a, std::size_t b) {
      return outranks(priority_[a], priority_[b]);
    });
    for (std::size_t g : evicted) place_first_fit(g);
  }

  const Market& market_;
  const CompiledOrders& orders_;
  std::vector<Priority> priority_;
  std::vector<std::size_t> by_priority_;
  std::vector<int> capacity_;
  std::vector<int> used_;
  std::vector<std::size_t> position_;
};

}  // namespace

Matching Matching::initial(const Market& market) {
  std::vector<FacilityId> placements(market.children().size(), kHome);
  for (std::size_t c = 0; c < placements.size(); ++c) {
    if (!market.is_applying(c)) placements[c] = market.children()[c].current_placement;
  }
  return Matching(std::move(placements));
}

AssignmentTuple Matching::family_tuple(const Market& market, std::size_t family) const {
  const auto& kids = market.family_children(family);
  AssignmentTuple t;
  t.size = kids.size();
  for (std::size_t s = 0; s < kids.size(); ++s) t[s] = placements_[kids[s]];
  return t;
}

std::int64_t CutoffTable::cutoff(const Market& market, FacilityId facility, Grade grade) const {
  const std::size_t d = market.facility_index(facility);
  if (market.daycares()[d].kind != FacilityKind::Licensed) return 0;
  const CutoffCell& c = cell(d, grade.value());
  if (c.closed) return std::numeric_limits<std::int64_t>::max();
  return c.full ? c.score : 0;
}

bool CutoffTable::clears(const Market& market, std::size_t facility, int grade,
                         const Priority& p) const {
  if (market.daycares()[facility].kind != FacilityKind::Licensed) return true;
  const CutoffCell& c = cell(facility, grade);
  if (c.closed) return false;
  if (!c.full) return true;
  return p.score > c.score || (p.score == c.score && p.family <= c.marginal);
}

ReportedOrder induce_reported_order(const Market& market, std::size_t family) {
  const Family& fam = market.families()[family];
  const auto& kids = market.family_children(family);
  ReportedOrder out{fam.id, {}};

  if (market.status(family) != SiblingStatus::Simultaneous) {
    AssignmentTuple base;
    base.size = kids.size();
    std::size_t slot = 0;
    for (std::size_t s = 0; s < kids.size(); ++s) {
      if (market.is_applying(kids[s])) {
        slot = s;
      } else {
        base[s] = market.children()[kids[s]].current_placement;
      }
    }
    base[slot] = kHome;
    for (FacilityId d : dedup(market.rol(kids[slot]))) {
      AssignmentTuple t = base;
      t[slot] = d;
      out.tuples.push_back(t);
    }
    out.tuples.push_back(base);
    return out;
  }

  const std::array<std::vector<FacilityId>, 2> lists = {dedup(market.rol(kids[0])),
                                                        dedup(market.rol(kids[1]))};
  const std::size_t older =
      market.children()[kids[1]].grade > market.children()[kids[0]].grade ? 1 : 0;

  using Key = std::tuple<int, int, int, std::int64_t, std::int64_t>;
  std::vector<std::pair<Key, AssignmentTuple>> ranked;
  auto add = [&](FacilityId a, FacilityId b) {
    const int r0 = rank_of(lists[0], a);
    const int r1 = rank_of(lists[1], b);
    const int older_rank = older == 0 ? r0 : r1;
    ranked.push_back({Key{r0 + r1, a == b ? 0 : 1, older_rank, a.value, b.value}, {a, b}});
  };

  if (fam.joint_required) {
    for (FacilityId d : lists[0]) {
      if (std::find(lists[1].begin(), lists[1].end(), d) != lists[1].end()) add(d, d);
    }
  } else {
    std::array<std::vector<FacilityId>, 2> options = lists;
    for (auto& o : options) o.push_back(kHome);
    for (FacilityId a : options[0]) {
      for (FacilityId b : options[1]) {
        if (a != kHome || b != kHome) add(a, b);
      }
    }
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  for (const auto& [key, t] : ranked) out.tuples.push_back(t);
  out.tuples.push_back(AssignmentTuple{kHome, kHome});
  return out;
}

std::vector<ReportedOrder> induce_reported_orders(const Market& market) {
  std::vector<ReportedOrder> out;
  out.reserve(market.families().size());
  for (std::size_t f = 0; f < market.families().size(); ++f) {
    out.push_back(induce_reported_order(market, f));
  }
  return out;
}

CompiledOrders compile_orders(const Market& market, std::vector<ReportedOrder> orders) {
  CompiledOrders out;
  out.cells.resize(orders.size());
  for (std::size_t f = 0; f < orders.size(); ++f) {
    const auto& kids = market.family_children(f);
    for (const AssignmentTuple& t : orders[f].tuples) {
      if (t.size != kids.size()) throw DomainError("tuple size does not match family size");
      std::array<std::int32_t, 2> cells{-1, -1};
      for (std::size_t s = 0; s < t.size; ++s) {
        if (!market.is_applying(kids[s])) {
          if (t[s] != market.children()[kids[s]].current_placement) {
            throw DomainError("reported tuple moves a non-applying child");
          }
          continue;
        }
        const std::size_t d = market.facility_index(t[s]);
        if (market.daycares()[d].kind == FacilityKind::Licensed) {
          cells[s] = static_cast<std::int32_t>(d * kNumGrades +
                                               market.children()[kids[s]].grade.value());
        }
      }
      out.cells[f].push_back(cells);
    }
  }
  out.orders = std::move(orders);
  return out;
}

CutoffTable compute_cutoffs(const Matching& matching, const Market& market,
                            const PolicyScenario& policy) {
  CutoffTable table(market.daycares().size());
  std::vector<int> count(market.daycares().size() * kNumGrades, 0);
  std::vector<std::optional<Priority>> lowest(count.size());
  std::vector<std::optional<Priority>> family_p(market.families().size());

  for (std::size_t c = 0; c < market.children().size(); ++c) {
    if (!market.is_applying(c)) continue;
    const std::size_t d = market.facility_index(matching[c]);
    if (market.daycares()[d].kind != FacilityKind::Licensed) continue;
    const std::size_t f = market.child_family(c);
    if (!family_p[f]) family_p[f] = family_priority(market, f, policy);
    const std::size_t x = d * kNumGrades + market.children()[c].grade.value();
    ++count[x];
    if (!lowest[x] || outranks(*lowest[x], *family_p[f])) lowest[x] = family_p[f];
  }

  for (std::size_t d : market.licensed()) {
    const Daycare& dc = market.daycares()[d];
    for (int g = 0; g < kNumGrades; ++g) {
      const std::size_t x = d * kNumGrades + g;
      const int cap = dc.capacity[g].value_or(0);
      if (count[x] > cap) {
        throw CapacityViolation("facility " + std::to_string(dc.id.value) + " grade " +
                                std::to_string(g) + " holds " + std::to_string(count[x]) +
                                " applicants for " + std::to_string(cap) + " seats");
      }
      CutoffCell& cell = table.cell(d, g);
      cell.closed = cap == 0;
      cell.full = cap > 0 && count[x] == cap;
      if (cell.full) {
        cell.score = lowest[x]->score;
        cell.marginal = lowest[x]->family;
      }
    }
  }
  return table;
}

std::vector<BlockingCoalition> verify_stability(const Matching& matching, const Market& market,
                                                const PolicyScenario& policy,
                                                const PreferenceSource& source) {
  const CutoffTable cutoffs = compute_cutoffs(matching, market, policy);
  std::vector<BlockingCoalition> out;

  for (std::size_t f = 0; f < market.families().size(); ++f) {
    const Priority p = family_priority(market, f, policy);
    const auto& kids = market.family_children(f);
    const AssignmentTuple current = matching.family_tuple(market, f);

    auto slot_clears = [&](std::size_t s, FacilityId d) {
      return cutoffs.clears(market, market.facility_index(d), market.children()[kids[s]].grade.value(),
                            p);
    };
    auto record = [&](const AssignmentTuple& t, const std::string& reason) {
      std::string witness = reason;
      for (std::size_t s = 0; s < t.size; ++s) {
        if (!market.is_applying(kids[s])) continue;
        witness += "; " + describe_cell(market, cutoffs, market.facility_index(t[s]),
                                        market.children()[kids[s]].grade.value());
      }
      out.push_back({market.families()[f].id, t, std::move(witness)});
    };

    if (std::holds_alternative<ReportedPreferences>(source)) {
      const ReportedOrder order = induce_reported_order(market, f);
      const auto pos = std::find(order.tuples.begin(), order.tuples.end(), current);
      for (auto it = order.tuples.begin(); it != pos; ++it) {
        bool ok = true;
        for (std::size_t s = 0; s < it->size && ok; ++s) {
          if (market.is_applying(kids[s])) ok = slot_clears(s, (*it)[s]);
        }
        if (ok) {
          record(*it, "reported order ranks " + to_string(*it) + " above " + to_string(current));
        }
      }
      continue;
    }

    const Theta* theta = std::get<SystematicPreferences>(source).theta;
    if (!theta) throw DomainError("systematic preferences need a theta");
    const double v_current = systematic_utility(market, f, current, *theta).V;

    std::array<std::vector<FacilityId>, 2> options;
    for (std::size_t s = 0; s < kids.size(); ++s) {
      if (!market.is_applying(kids[s])) {
        options[s] = {market.children()[kids[s]].current_placement};
        continue;
      }
      for (const Daycare& d : market.daycares()) {
        if (slot_clears(s, d.id)) options[s].push_back(d.id);
      }
    }
    auto consider = [&](const AssignmentTuple& t) {
      if (t == current) return;
      const double v = systematic_utility(market, f, t, *theta).V;
      if (v > v_current) {
        record(t, "V " + std::to_string(v) + " exceeds " + std::to_string(v_current));
      }
    };
    if (kids.size() == 1) {
      for (FacilityId a : options[0]) consider(AssignmentTuple{a});
    } else {
      for (FacilityId a : options[0]) {
        for (FacilityId b : options[1]) consider(AssignmentTuple{a, b});
      }
    }
  }
  return out;
}

MechanismResult run_mechanism(const Market& market, const PolicyScenario& policy) {
  const CompiledOrders orders = compile_orders(market, induce_reported_orders(market));
  return run_mechanism(market, policy, orders);
}

MechanismResult run_mechanism(const Market& market, const PolicyScenario& policy,
                              const CompiledOrders& orders) {
  Mechanism mech(market, policy, orders);
  MechanismResult out;
  out.repair_iterations = mech.run();
  out.matching = mech.matching();
  out.positions = mech.positions();
  out.cutoffs = compute_cutoffs(out.matching, market, policy);
  return out;
}

GroupRates assignment_rates(const Matching& matching, const Market& market) {
  GroupRates out;
  std::array<std::size_t, 3> assigned{};
  for (std::size_t f = 0; f < market.families().size(); ++f) {
    const int g = static_cast<int>(market.status(f));
    ++out.families[g];
    for (std::size_t c : market.family_children(f)) {
      if (market.is_applying(c) && is_licensed(market, matching[c])) {
        ++assigned[g];
        break;
      }
    }
  }
  for (int g = 0; g < 3; ++g) {
    if (out.families[g] > 0) {
      out.rate[g] = static_cast<double>(assigned[g]) / static_cast<double>(out.families[g]);
    }
  }
  return out;
}

std::optional<int> rank_in_rol(const Market& market, std::size_t child, FacilityId facility) {
  const auto& rol = market.rol(child);
  auto it = std::find(rol.begin(), rol.end(), facility);
  if (it == rol.end()) return std::nullopt;
  return static_cast<int>(it - rol.begin()) + 1;
}

void write_matching(std::ostream& out, const Matching& matching, const Market& market) {
  out << "child_id,facility_id,rank_in_rol\n";
  for (std::size_t c = 0; c < market.children().size(); ++c) {
    out << market.children()[c].id.value << ',' << matching[c].value << ',';
    if (auto r = rank_in_rol(market, c, matching[c])) out << *r;
    out << '\n';
  }
}

void write_cutoffs(std::ostream& out, const CutoffTable& cutoffs, const Market& market) {
  out << "facility_id,grade,cutoff,marginal_family_id\n";
  for (std::size_t d : market.licensed()) {
    for (int g = 0; g < kNumGrades; ++g) {
      const CutoffCell& c = cutoffs.cell(d, g);
      out << market.daycares()[d].id.value << ',' << g << ',';
      if (c.closed) {
        out << "inf,";
      } else if (c.full) {
        out << c.score << ',' << c.marginal.value;
      } else {
        out << "0,";
      }
      out << '\n';
    }
  }
}

}  // namespace daycare
