#include <doctest.h>

#include <sstream>

#include "daycare/matching.hpp"
#include "toy_market.hpp"

using namespace daycare;
using daycare::testing::MarketBuilder;
using daycare::testing::seats;

namespace {

std::vector<std::string> tuples_of(const ReportedOrder& order) {
  std::vector<std::string> out;
  for (const auto& t : order.tuples) out.push_back(to_string(t));
  return out;
}

}  // namespace

TEST_CASE("single applicants keep their ROL order, deduplicated, then home") {
  MarketBuilder b;
  const auto a = b.licensed(37.40, 140.40, seats(1));
  const auto c = b.licensed(37.41, 140.40, seats(1));
  const auto f = b.family(400);
  b.child(f, 1, {c, a, c});
  const Market m = b.build();
  CHECK(tuples_of(induce_reported_order(m, 0)) ==
        std::vector<std::string>{"(" + std::to_string(c.value) + ")",
                                 "(" + std::to_string(a.value) + ")", "(0)"});
}

TEST_CASE("incumbent orders vary the applying slot only") {
  MarketBuilder b;
  const auto a = b.licensed(37.40, 140.40, seats(1));
  const auto c = b.licensed(37.41, 140.40, seats(1));
  const auto f = b.family(400);
  b.child(f, 1, {c});
  b.child(f, 4, {}, a);
  const Market m = b.build();
  CHECK(tuples_of(induce_reported_order(m, 0)) == std::vector<std::string>{"(2,1)", "(0,1)"});
}

TEST_CASE("joint families list shared facilities by rank sum, older child breaking ties") {
  MarketBuilder b;
  const auto a = b.licensed(37.40, 140.40, seats(2));
  const auto c = b.licensed(37.41, 140.40, seats(2));
  const auto x = b.licensed(37.42, 140.40, seats(2));
  const auto f = b.family(400, 37.4, 140.4, {}, true);
  b.child(f, 1, {a, c, x});
  b.child(f, 3, {c, a});
  const Market m = b.build();
  // (1,1) and (2,2) both sum to 3; the older child (slot 1) ranks facility 2 first.
  CHECK(tuples_of(induce_reported_order(m, 0)) ==
        std::vector<std::string>{"(2,2)", "(1,1)", "(0,0)"});
}

TEST_CASE("non-joint families enumerate every split and partial tuple") {
  MarketBuilder b;
  const auto a = b.licensed(37.40, 140.40, seats(2));
  const auto c = b.licensed(37.41, 140.40, seats(2));
  const auto f = b.family(400);
  b.child(f, 1, {a});
  b.child(f, 3, {c});
  const Market m = b.build();
  CHECK(tuples_of(induce_reported_order(m, 0)) ==
        std::vector<std::string>{"(1,2)", "(0,2)", "(1,0)", "(0,0)"});
}

TEST_CASE("higher score wins a contested seat; equal scores go to the lower id") {
  MarketBuilder b;
  const auto a = b.licensed(37.40, 140.40, {0, 1, 0, 0, 0, 0});
  const auto f1 = b.family(400);
  b.child(f1, 1, {a});
  const auto f2 = b.family(400);
  b.child(f2, 1, {a});
  const auto f3 = b.family(390);
  b.child(f3, 1, {a});
  const Market m = b.build();

  const MechanismResult r = run_mechanism(m, PolicyScenario::before_reform());
  CHECK(r.matching[0] == a);
  CHECK(r.matching[1] == kHome);
  CHECK(r.matching[2] == kHome);
  CHECK(r.repair_iterations == 0);
  CHECK(r.positions == std::vector<std::size_t>{0, 1, 1});

  const CutoffCell& cell = r.cutoffs.cell(m.facility_index(a), 1);
  CHECK(cell.full);
  CHECK(cell.score == 400);
  CHECK(cell.marginal == f1);
  CHECK(r.cutoffs.cutoff(m, a, Grade(1)) == 400);
  CHECK(r.cutoffs.cutoff(m, a, Grade(2)) == std::numeric_limits<std::int64_t>::max());
  CHECK(verify_stability(r.matching, m, PolicyScenario::before_reform(), ReportedPreferences{})
            .empty());
}

TEST_CASE("sibling points move priority between groups") {
  MarketBuilder b;
  const auto a = b.licensed(37.40, 140.40, {0, 1, 1, 0, 0, 0});
  const auto solo = b.family(500);
  b.child(solo, 1, {a});
  const auto sim = b.family(400, 37.4, 140.4, {}, true);
  b.child(sim, 1, {a});
  b.child(sim, 2, {a});
  const Market m = b.build();

  const auto before = run_mechanism(m, PolicyScenario::before_reform());
  CHECK(before.matching[0] == a);
  CHECK(before.matching[1] == kHome);
  CHECK(before.matching[2] == kHome);

  const auto after = run_mechanism(m, PolicyScenario::after_reform());
  CHECK(after.matching[0] == kHome);
  CHECK(after.matching[1] == a);
  CHECK(after.matching[2] == a);
  CHECK(verify_stability(after.matching, m, PolicyScenario::after_reform(), ReportedPreferences{})
            .empty());

  const GroupRates rates = assignment_rates(after.matching, m);
  CHECK(rates[SiblingStatus::NoSiblings] == 0.0);
  CHECK(rates[SiblingStatus::Simultaneous] == 1.0);
  CHECK_FALSE(rates[SiblingStatus::Incumbent]);
}

TEST_CASE("same-grade siblings can leave no reported-stable matching") {
  MarketBuilder b;
  const auto a = b.licensed(37.40, 140.40, {2, 0, 0, 0, 0, 0});
  const auto h = b.family(500);
  b.child(h, 0, {a});
  const auto twins = b.family(450, 37.4, 140.4, {}, true);
  b.child(twins, 0, {a});
  b.child(twins, 0, {a});
  const auto g = b.family(400);
  b.child(g, 0, {a});
  const Market m = b.build();
  CHECK_THROWS_AS(run_mechanism(m, PolicyScenario::before_reform()), NoStableMatching);

  // Every capacity-feasible outcome is blocked by someone.
  const std::vector<std::vector<FacilityId>> outcomes = {
      {a, kHome, kHome, a}, {kHome, a, a, kHome}, {a, kHome, kHome, kHome},
      {kHome, kHome, kHome, a}, {kHome, kHome, kHome, kHome}};
  for (const auto& placements : outcomes) {
    const Matching mu(placements);
    CHECK_FALSE(
        verify_stability(mu, m, PolicyScenario::before_reform(), ReportedPreferences{}).empty());
  }
}

TEST_CASE("stability verifier flags a family shut out of a slack seat") {
  MarketBuilder b;
  const auto a = b.licensed(37.40, 140.40, seats(1));
  const auto f = b.family(400);
  b.child(f, 1, {a});
  const Market m = b.build();
  const Matching empty = Matching::initial(m);
  const auto coalitions =
      verify_stability(empty, m, PolicyScenario::before_reform(), ReportedPreferences{});
  REQUIRE(coalitions.size() == 1);
  CHECK(coalitions[0].family == f);
  CHECK(coalitions[0].tuple == AssignmentTuple{a});

  Theta theta;
  theta.facility = {{a, 2.0}};
  theta.kappa = 0.5;
  CHECK(verify_stability(empty, m, PolicyScenario::before_reform(), SystematicPreferences{&theta})
            .size() == 1);
  theta.facility = {{a, -5.0}};
  CHECK(verify_stability(empty, m, PolicyScenario::before_reform(), SystematicPreferences{&theta})
            .empty());
}

TEST_CASE("cutoffs reject over-full cells and export closed cells as infinite") {
  MarketBuilder b;
  const auto a = b.licensed(37.40, 140.40, {1, 0, 0, 0, 0, 0});
  const auto f1 = b.family(400);
  b.child(f1, 0, {a});
  const auto f2 = b.family(410);
  b.child(f2, 0, {a});
  const Market m = b.build();
  CHECK_THROWS_AS(compute_cutoffs(Matching({a, a}), m, PolicyScenario::before_reform()),
                  CapacityViolation);

  const CutoffTable t = compute_cutoffs(Matching({kHome, a}), m, PolicyScenario::before_reform());
  std::ostringstream os;
  write_cutoffs(os, t, m);
  CHECK(os.str() ==
        "facility_id,grade,cutoff,marginal_family_id\n"
        "1,0,410,2\n1,1,inf,\n1,2,inf,\n1,3,inf,\n1,4,inf,\n1,5,inf,\n");

  std::ostringstream mo;
  write_matching(mo, Matching({kHome, a}), m);
  CHECK(mo.str() == "child_id,facility_id,rank_in_rol\n1,0,\n2,1,1\n");
}
