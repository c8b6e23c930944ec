#include "doctest.h"
#include "quasidiff/errors.hpp"
#include "quasidiff/scale.hpp"

using namespace quasidiff;

namespace {

SVCSet fourths() { return SVCSet({0.0, 1.0}, RemovalSchedule{1.0, 4.0}); }

NearlyClosedSet two_thirds() {
  return NearlyClosedSet({NearlyClosedSet::interval_piece(0, 1.0 / 3), NearlyClosedSet::interval_piece(2.0 / 3, 1)});
}

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

TEST_CASE("extended scale") {
  const auto nat = extend_scale(ScaleFunction::natural(two_thirds()));
  for (double x : {0.0, 0.2, 0.5, 0.9, 1.0}) CHECK(nat(x, 0).mid() == doctest::Approx(x));

  const auto pair = ScaleFunction::charset(NearlyClosedSet::points({0.0, 1.0}), MeasurableSubset::empty());
  CHECK(pair.extended(0.3, 1e-12).mid() == doctest::Approx(0.3));
  CHECK(pair.extended(1.0, 1e-12).mid() == doctest::Approx(1.0));

  // s(1/3) = 1, s(2/3) = 2, normalized so that s(0) = 0.
  const PLFunction f({0.0, 1.0 / 3, 2.0 / 3, 1.0}, {0.0, 1.0, 2.0, 3.0});
  const auto pl = extend_scale(ScaleFunction::general_pl(two_thirds(), f));
  CHECK(pl.gap_slope({1.0 / 3, 2.0 / 3}, 0).mid() == doctest::Approx(3.0));
  CHECK(pl(0.5, 0).mid() == doctest::Approx(1.5));
  CHECK(pl(1.0, 0).mid() == doctest::Approx(3.0));
}

TEST_CASE("chord across a gap hit by a break") {
  const PLFunction f({0.0, 0.5, 1.0}, {0.0, 0.25, 1.0});
  const auto s = ScaleFunction::general_pl(two_thirds(), f);
  // The break at 1/2 sits in the gap, so the gap is crossed at its chord slope.
  const double chord = (f(2.0 / 3) - f(1.0 / 3)) / (1.0 / 3);
  CHECK(s.extended(0.5, 0).mid() == doctest::Approx(f(1.0 / 3) + chord / 6));
  bool found = false;
  for (const auto& seg : s.segments())
    if (seg.chord) {
      found = true;
      CHECK(seg.lo == doctest::Approx(1.0 / 3));
      CHECK(seg.hi == doctest::Approx(2.0 / 3));
      CHECK(seg.slope == doctest::Approx(chord));
    }
  CHECK(found);
}

TEST_CASE("scale from a characteristic set") {
  const double tol = 1e-6;
  const auto whole = NearlyClosedSet::interval(0, 1);
  try {
    scale_from_charset(whole, MeasurableSubset::empty(), 0.0, tol);
    FAIL("expected NotMeasureDense");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotMeasureDense);
  }
  const auto cert = certify_measure_dense(whole, MeasurableSubset::empty(), tol);
  CHECK(cert.outcome == DensityCertificate::Outcome::NotDense);
  REQUIRE(cert.witness);
  CHECK(cert.witness->lo == 0.0);
  CHECK(cert.witness->hi == 1.0);

  const auto pair = scale_from_charset(NearlyClosedSet::points({0.0, 1.0}), MeasurableSubset::empty(), 0.0, tol);
  CHECK(pair.certified());
  CHECK(pair.increment(0.0, 1.0, tol).mid() == doctest::Approx(1.0));

  // Two ubiquitous halves: |G| = 2 * (1/2) * (1/3) by construction.
  const auto g = MeasurableSubset::ubiquitous(UbiquitousSet({0, 1.0 / 3})) |
                 MeasurableSubset::ubiquitous(UbiquitousSet({2.0 / 3, 1}));
  const auto gm = measure_query(g, 1e-4);
  CHECK(gm.value.contains(1.0 / 3, 1e-12));
  const auto s = scale_from_charset(two_thirds(), g, 0.0, 1e-4);
  const auto total = s.increment(0.0, 1.0, 1e-4);
  CHECK(total.contains(2.0 / 3, 1e-12));
  CHECK(total.lo > 1.0 / 3);
  CHECK(total.hi < 1.0);

  CHECK(code_of([&] { scale_from_charset(two_thirds(), g, 0.5, tol); }) == ErrorCode::InvalidInput);
}

TEST_CASE("a partial interval charset is refuted with a witness") {
  const auto e = NearlyClosedSet::interval(0, 1);
  const auto g = MeasurableSubset::interval(0, 0.5);
  const auto cert = certify_measure_dense(e, g, 1e-6);
  CHECK(cert.outcome == DensityCertificate::Outcome::NotDense);
  REQUIRE(cert.witness);
  CHECK(cert.witness->lo >= 0.5);
  CHECK(cert.witness_measure.hi < 1e-6);
}

TEST_CASE("membership in the family S") {
  const auto unit = NearlyClosedSet::interval(0, 1);
  CHECK(is_in_S(ScaleFunction::natural(unit), 0).outcome == SVerdict::Outcome::Yes);

  const auto half = is_in_S(ScaleFunction::general_pl(unit, PLFunction({0, 1}, {0, 0.5})), 0);
  CHECK(half.outcome == SVerdict::Outcome::No);
  REQUIRE(half.witness);
  CHECK(half.witness->lo == 0.0);
  CHECK(half.witness->hi == 1.0);

  // Slope 1 on E, slope 2 across the gap.
  const PLFunction steep({0.0, 1.0 / 3, 2.0 / 3, 1.0}, {0.0, 1.0 / 3, 1.0, 4.0 / 3});
  const auto v = is_in_S(ScaleFunction::general_pl(two_thirds(), steep), 0);
  CHECK(v.outcome == SVerdict::Outcome::No);
  CHECK(v.reason.find("gap slope") != std::string::npos);

  // Flat on the fat SVC set, slope 1 on its gaps: the characteristic set is null.
  const auto fat = NearlyClosedSet::svc(fourths());
  const auto flat = ScaleFunction::general_pl(fat, PLFunction({0, 1}, {0, 0}));
  CHECK(is_in_S(flat, 0).outcome == SVerdict::Outcome::No);

  const auto g = MeasurableSubset::ubiquitous(UbiquitousSet({0, 1}));
  CHECK(is_in_S(ScaleFunction::charset(unit, g), 1e-6).outcome == SVerdict::Outcome::Yes);
  CHECK(is_in_S(ScaleFunction::charset(unit, MeasurableSubset::interval(0, 0.5)), 1e-6).outcome ==
        SVerdict::Outcome::No);
}

TEST_CASE("characteristic sets") {
  const auto unit = NearlyClosedSet::interval(0, 1);
  const auto g_nat = characteristic_set_of(ScaleFunction::natural(two_thirds()), 0);
  CHECK(measure_query(g_nat, 1e-9).value.contains(2.0 / 3, 1e-9));

  const auto g0 = MeasurableSubset::ubiquitous(UbiquitousSet({0, 1.0 / 3})) |
                  MeasurableSubset::ubiquitous(UbiquitousSet({2.0 / 3, 1}));
  const auto s = scale_from_charset(two_thirds(), g0, 0.0, 1e-4);
  CHECK(characteristic_set_of(s, 1e-4).same_expression(g0));

  const auto bent = ScaleFunction::general_pl(unit, PLFunction({0, 0.5, 1}, {0, 0.5, 0.5}));
  CHECK(code_of([&] { characteristic_set_of(bent, 0); }) == ErrorCode::NotInS);

}

TEST_CASE("defect cumulative") {
  const auto unit = NearlyClosedSet::interval(0, 1);
  for (double y : {0.0, 0.25, 0.5, 1.0}) {
    CHECK(defect_cumulative(ScaleFunction::natural(unit), y, 0).mid() == 0.0);
    CHECK(defect_cumulative(ScaleFunction::general_pl(unit, PLFunction({0, 1}, {0, 0.5})), y, 0).mid() ==
          doctest::Approx(-y / 4));
    CHECK(defect_cumulative(ScaleFunction::general_pl(unit, PLFunction({0, 1}, {0, 2})), y, 0).mid() ==
          doctest::Approx(2 * y));
  }
}

TEST_CASE("scale values are increasing on E and exact across gaps") {
  const auto g0 = MeasurableSubset::ubiquitous(UbiquitousSet({0, 1.0 / 3})) |
                  MeasurableSubset::ubiquitous(UbiquitousSet({2.0 / 3, 1}));
  const auto s = scale_from_charset(two_thirds(), g0, 0.0, 1e-4);
  double prev = -1.0;
  for (double x : {0.0, 0.05, 0.1, 0.2, 1.0 / 3, 2.0 / 3, 0.8, 1.0}) {
    const auto v = s.extended(x, 1e-4);
    CHECK(v.lo > prev - 1e-12);
    prev = v.hi;
  }
  CHECK(s.increment(1.0 / 3, 2.0 / 3, 1e-4).contains(1.0 / 3, 1e-12));
}

TEST_CASE("pushforward") {
  const auto unit = NearlyClosedSet::interval(0, 1);
  const auto doubling = ScaleFunction::general_pl(unit, PLFunction({0, 1}, {0, 2}));

  const auto atoms = pushforward(StieltjesMeasure::atomic({{0, 1}, {1, 1}}), doubling, 0);
  REQUIRE(atoms.atoms.size() == 2);
  CHECK(atoms.atoms[0].x == 0.0);
  CHECK(atoms.atoms[1].x == 2.0);
  CHECK(atoms.total_mass(0).mid() == 2.0);

  const auto leb = pushforward(StieltjesMeasure::lebesgue({0, 1}), doubling, 0);
  REQUIRE(leb.densities.size() == 1);
  CHECK(leb.densities[0].support.lo == 0.0);
  CHECK(leb.densities[0].support.hi == 2.0);
  CHECK(leb.densities[0].at(1.3) == doctest::Approx(0.5));

  const double a = 0.2, b = 0.7;
  const auto pair = ScaleFunction::charset(NearlyClosedSet::points({a, b}), MeasurableSubset::empty());
  const auto img = pushforward(StieltjesMeasure::atomic({{a, 1.5}, {b, 0.5}}), pair, 1e-12);
  REQUIRE(img.atoms.size() == 2);
  CHECK(img.atoms[1].x - img.atoms[0].x == doctest::Approx(b - a));
  CHECK(img.total_mass(0).mid() == 2.0);

  const auto flat = ScaleFunction::general_pl(unit, PLFunction({0, 0.5, 1}, {0, 0.5, 0.5}));
  CHECK(code_of([&] { pushforward(StieltjesMeasure::lebesgue({0, 1}), flat, 0); }) == ErrorCode::NotInjective);
  CHECK(code_of([&] { pushforward(StieltjesMeasure::atomic({{0.6, 1}, {0.9, 1}}), flat, 0); }) ==
        ErrorCode::NotInjective);
}

TEST_CASE("S membership survives an affine change of scale") {
  const auto e = NearlyClosedSet::interval(0, 1);
  const auto s = ScaleFunction::natural(e.affine(2, 0));
  CHECK(is_in_S(s, 0).outcome == SVerdict::Outcome::Yes);
  CHECK(s.extended(2, 0).mid() == 2.0);
}
