#include <random>

#include "doctest.h"
#include "quasidiff/errors.hpp"
#include "quasidiff/lattice.hpp"

using namespace quasidiff;

namespace {

constexpr double kTol = 1e-9;

NearlyClosedSet unit() { return NearlyClosedSet::interval(0, 1); }
NearlyClosedSet fat() { return NearlyClosedSet::svc(SVCSet({0.0, 1.0}, RemovalSchedule{1.0, 4.0})); }
NearlyClosedSet cantor() { return NearlyClosedSet::svc(SVCSet({0.0, 1.0}, RemovalSchedule{1.0, 3.0})); }
NearlyClosedSet two_thirds() {
  return NearlyClosedSet({NearlyClosedSet::interval_piece(0, 1.0 / 3), NearlyClosedSet::interval_piece(2.0 / 3, 1)});
}

MeasurableSubset ubiq(double a, double b) { return MeasurableSubset::ubiquitous(UbiquitousSet({a, b})); }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidInput;
}

}  // namespace

TEST_CASE("compare") {
  const auto lam = StieltjesMeasure::restricted_lebesgue(fat());
  const auto d0 = make_subspace(fat(), MeasurableSubset::empty(), lam, kTol);
  const auto full = full_subspace(fat(), lam);
  CHECK(compare(d0, full, kTol).order == Order::Subset);
  CHECK(compare(full, d0, kTol).order == Order::Superset);
  CHECK(compare(full, full, kTol).order == Order::Equal);

  const auto mu = StieltjesMeasure::lebesgue({0, 1});
  const auto a = make_subspace(unit(), ubiq(0, 0.5) | MeasurableSubset::interval(0.5, 1), mu, kTol);
  const auto b = make_subspace(unit(), MeasurableSubset::interval(0, 0.5) | ubiq(0.5, 1), mu, kTol);
  const auto c = compare(a, b, kTol);
  CHECK(c.order == Order::Incomparable);
  // Each difference is the half-interval minus a budget-1/2 ubiquitous set.
  CHECK(c.a_minus_b.contains(0.25, 1e-6));
  CHECK(c.b_minus_a.contains(0.25, 1e-6));

  CHECK(code_of([&] { compare(a, full, kTol); }) == ErrorCode::MismatchedBase);
}

TEST_CASE("is_proper") {
  const auto mu = StieltjesMeasure::lebesgue({0, 1});
  CHECK(is_proper(full_subspace(unit(), mu), kTol).decision == Decision::No);
  const auto u = is_proper(make_subspace(unit(), ubiq(0, 1), mu, kTol), kTol);
  CHECK(u.decision == Decision::Yes);
  CHECK(u.defect.lo >= 0.5 - 1e-6);
  const auto c = make_subspace(cantor(), MeasurableSubset::empty(), StieltjesMeasure{}, kTol);
  CHECK(is_proper(c, kTol).decision == Decision::No);
}

TEST_CASE("existence and minimality") {
  CHECK(has_proper_subspaces(unit(), kTol) == Decision::Yes);
  CHECK(has_proper_subspaces(cantor(), kTol) == Decision::No);
  CHECK(has_proper_subspaces(fat(), kTol) == Decision::Yes);

  CHECK_FALSE(minimal_subspace(unit(), StieltjesMeasure::lebesgue({0, 1})).has_value());
  const auto lam = StieltjesMeasure::restricted_lebesgue(fat());
  const auto d0 = minimal_subspace(fat(), lam);
  REQUIRE(d0.has_value());
  const auto h = TestFunction::scale_of(d0->scale);
  const auto en = energy_detailed(d0->form, h, h, 1e-9);
  CHECK(en.local.hi == 0.0);
  CHECK(en.value.contains(0.25, 1e-12));

  const auto pts = NearlyClosedSet::points({0, 1});
  const auto pair = minimal_subspace(pts, StieltjesMeasure::atomic({{0, 1}, {1, 1}}));
  REQUIRE(pair.has_value());
  CHECK(is_proper(*pair, kTol).decision == Decision::No);
  CHECK(compare(*pair, full_subspace(pts, pair->form.mu), kTol).order == Order::Equal);
}

TEST_CASE("construct_proper") {
  CHECK_FALSE(construct_proper(cantor(), StieltjesMeasure{}).has_value());
  const auto lam = StieltjesMeasure::restricted_lebesgue(fat());
  const auto f = construct_proper(fat(), lam);
  REQUIRE(f.has_value());
  CHECK(is_proper(*f, kTol).decision == Decision::Yes);
  const auto u = construct_proper(unit(), StieltjesMeasure::lebesgue({0, 1}));
  REQUIRE(u.has_value());
  CHECK(is_proper(*u, kTol).decision == Decision::Yes);
  CHECK(compare(*u, full_subspace(unit(), u->form.mu), kTol).order == Order::Subset);
  const auto t = construct_proper(two_thirds(), StieltjesMeasure::restricted_lebesgue(two_thirds()));
  REQUIRE(t.has_value());
  CHECK(is_proper(*t, kTol).decision == Decision::Yes);
}

TEST_CASE("classification matrix") {
  struct Row {
    NearlyClosedSet e;
    Decision proper;
    std::string minimal;
  };
  const std::vector<Row> rows{{unit(), Decision::Yes, "no"},
                              {two_thirds(), Decision::Yes, "no"},
                              {cantor(), Decision::No, "trivially-unique"},
                              {fat(), Decision::Yes, "yes"},
                              {NearlyClosedSet::points({0, 1}), Decision::No, "trivially-unique"}};
  for (const auto& r : rows) {
    const auto c = classify(r.e, kTol);
    CHECK(c.proper_subspaces == r.proper);
    CHECK(c.minimal == r.minimal);
  }
}

TEST_CASE("order implies domain inclusion") {
  const auto mu = StieltjesMeasure::lebesgue({0, 1});
  const auto small = make_subspace(unit(), ubiq(0, 0.5) | ubiq(0.5, 0.75) | MeasurableSubset::interval(0.75, 1), mu, kTol);
  const auto big = make_subspace(unit(), MeasurableSubset::interval(0, 0.5) | MeasurableSubset::interval(0.75, 1) |
                                             ubiq(0.5, 0.75), mu, kTol);
  REQUIRE(compare(small, big, kTol).order == Order::Subset);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(0, 1), slope(-2, 2);
  for (int i = 0; i < 5; ++i) {
    std::vector<double> knots{0, pos(rng), pos(rng), 1};
    std::sort(knots.begin(), knots.end());
    std::vector<double> slopes{slope(rng), slope(rng), slope(rng)};
    const auto f = TestFunction::in_scale(small.scale, knots, slopes, 0.0);
    CHECK(in_domain(small.form, f, kTol).outcome == DomainVerdict::Outcome::Yes);
    CHECK(in_domain(big.form, f, kTol).outcome == DomainVerdict::Outcome::Yes);
    const auto es = energy(small.form, f, f, 1e-8);
    const auto eb = energy(big.form, f, f, 1e-8);
    CHECK(std::abs(es.mid() - eb.mid()) <= 1e-8);
  }
}

TEST_CASE("general base scale") {
  const auto mu = StieltjesMeasure::lebesgue({0, 1});
  const auto nat = ScaleFunction::natural(unit());
  const auto id = to_natural({unit(), nat, mu, nat}, kTol);
  CHECK(id.e == unit());
  CHECK(is_proper(id, kTol).decision == Decision::No);

  const auto twice = ScaleFunction::general_pl(unit(), PLFunction({0, 1}, {0, 2}));
  const auto t = to_natural({unit(), twice, mu, twice}, kTol);
  CHECK(t.e == NearlyClosedSet::interval(0, 2));
  CHECK(t.form.mu.total_mass(kTol).contains(1.0, 1e-12));
  CHECK(is_proper(t, kTol).decision == Decision::No);
  // Slope 1 against base slope 2 has density 1/2.
  CHECK(code_of([&] { to_natural({unit(), twice, mu, nat}, kTol); }) == ErrorCode::NotInSs);

  const auto base = ScaleFunction::charset(unit(), ubiq(0, 1));
  const auto half = ScaleFunction::general_pl(unit(), PLFunction({0, 1}, {0, 0.5}));
  CHECK(code_of([&] { to_natural({unit(), base, mu, half}, kTol); }) == ErrorCode::NotInSs);
}
