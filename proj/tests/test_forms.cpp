#include <random>

#include "doctest.h"
#include "quasidiff/errors.hpp"
#include "quasidiff/forms.hpp"

using namespace quasidiff;

namespace {

SVCSet fourths() { return SVCSet({0.0, 1.0}, RemovalSchedule{1.0, 4.0}); }

NearlyClosedSet two_thirds() {
  return NearlyClosedSet({NearlyClosedSet::interval_piece(0, 1.0 / 3), NearlyClosedSet::interval_piece(2.0 / 3, 1)});
}

MeasurableSubset two_ubiquitous() {
  return MeasurableSubset::ubiquitous(UbiquitousSet({0, 1.0 / 3})) |
         MeasurableSubset::ubiquitous(UbiquitousSet({2.0 / 3, 1}));
}

PLFunction random_pl(std::mt19937_64& rng, double lo, double hi, int n = 5) {
  std::uniform_real_distribution<double> pos(lo, hi), val(-2.0, 2.0);
  std::vector<double> b{lo, hi};
  for (int i = 0; i < n; ++i) b.push_back(pos(rng));
  std::sort(b.begin(), b.end());
  std::vector<double> v;
  for (std::size_t i = 0; i < b.size(); ++i) v.push_back(val(rng));
  return PLFunction(b, v);
}

TestFunction id01() { return TestFunction::natural(PLFunction::identity(0, 1)); }

}  // namespace

TEST_CASE("domain membership") {
  const auto half_open = NearlyClosedSet::interval(0, 1, false, true);
  const auto f1 = TestFunction::natural(PLFunction::constant(1, 0, 1));
  const auto v = in_domain(FormDescriptor::natural(half_open), f1, 1e-12);
  CHECK(v.outcome == DomainVerdict::Outcome::No);
  CHECK(v.reason.find("boundary") != std::string::npos);

  const auto fat = NearlyClosedSet::svc(fourths());
  const auto minimal = FormDescriptor::make(fat, ScaleFunction::charset(fat, MeasurableSubset::empty()),
                                            StieltjesMeasure::restricted_lebesgue(fat));
  const auto w = in_domain(minimal, id01(), 1e-9);
  CHECK(w.outcome == DomainVerdict::Outcome::No);
  CHECK(w.reason.find("absolutely continuous") != std::string::npos);
  CHECK(in_domain(minimal, TestFunction::scale_of(minimal.s), 1e-9).outcome == DomainVerdict::Outcome::Yes);

  std::mt19937_64 rng(11);
  const auto unit = FormDescriptor::natural(NearlyClosedSet::interval(0, 1));
  for (int i = 0; i < 5; ++i)
    CHECK(in_domain(unit, TestFunction::natural(random_pl(rng, 0, 1)), 1e-12).outcome == DomainVerdict::Outcome::Yes);

  CHECK_THROWS_AS(energy(FormDescriptor::natural(half_open), f1, f1, 1e-9, true), Error);
}

TEST_CASE("energy examples") {
  CHECK(energy(FormDescriptor::natural(NearlyClosedSet::interval(0, 1)), id01(), id01(), 0).mid() ==
        doctest::Approx(0.5));
  // 1/2 (1/3 + 1/3) + 1/2 (1/3)^2 / (1/3)
  const auto e = energy(FormDescriptor::natural(two_thirds()), id01(), id01(), 0);
  CHECK(e.exact());
  CHECK(e.mid() == doctest::Approx(0.5));
}

TEST_CASE("minimal form on the fat SVC set") {
  const auto fat = NearlyClosedSet::svc(fourths());
  const auto s = ScaleFunction::charset(fat, MeasurableSubset::empty());
  const auto form = FormDescriptor::make(fat, s, StieltjesMeasure::restricted_lebesgue(fat));
  const auto h = TestFunction::scale_of(s);

  // Oracle: 1/2 sum of gap lengths by explicit enumeration.
  const auto g = gaps(fat, 1 << 18);
  double sum = 0.0;
  for (const auto& iv : g.gaps) sum += iv.length();
  const Bracket oracle{0.5 * sum, 0.5 * (sum + g.tail)};
  CHECK(oracle.contains(0.25, 1e-15));

  const auto r = energy_detailed(form, h, h, 1e-6);
  CHECK(r.local.lo == 0.0);
  CHECK(r.local.hi == 0.0);
  CHECK(r.value.width() <= 1e-6);
  CHECK(r.value.contains(0.25, 1e-15));
  CHECK(r.value.hi >= oracle.lo);
  CHECK(r.value.lo <= oracle.hi);
}

TEST_CASE("jump weights") {
  const auto w = jump_weights(two_thirds(), 10);
  REQUIRE(w.size() == 1);
  CHECK(w[0].gap.lo == doctest::Approx(1.0 / 3));
  CHECK(w[0].weight == doctest::Approx(0.75));
  CHECK(jump_weights(NearlyClosedSet::interval(0, 1), 10).empty());
  const auto p = jump_weights(NearlyClosedSet::points({0, 1}), 10);
  REQUIRE(p.size() == 1);
  CHECK(p[0].weight == doctest::Approx(0.25));

  // Both ordered pairs together reproduce the gap term of the energy.
  std::mt19937_64 rng(5);
  const auto f = random_pl(rng, 0, 1);
  const auto sym = 2.0 * w[0].weight * std::pow(f(2.0 / 3) - f(1.0 / 3), 2);
  const auto tf = TestFunction::natural(f);
  CHECK(energy_detailed(FormDescriptor::natural(two_thirds()), tf, tf, 0).jump.mid() == doctest::Approx(sym));
}

TEST_CASE("trace identity") {
  const auto t1 = trace_energy_identity(two_thirds(), PLFunction::identity(0, 1), 0);
  CHECK(t1.lhs.mid() == doctest::Approx(0.5));
  CHECK(t1.rhs.mid() == doctest::Approx(0.5));

  const PLFunction step({0, 1.0 / 3, 2.0 / 3, 1}, {0, 0, 1, 1});
  const auto t2 = trace_energy_identity(two_thirds(), step, 0);
  CHECK(t2.lhs.mid() == doctest::Approx(1.5));
  CHECK(t2.rhs.mid() == doctest::Approx(1.5));

  const auto t3 = trace_energy_identity(NearlyClosedSet::points({0, 1}), PLFunction::identity(0, 1), 0);
  CHECK(t3.lhs.mid() == doctest::Approx(0.5));
  CHECK(t3.gap <= 1e-15);

  std::mt19937_64 rng(9);
  const auto fat = NearlyClosedSet::svc(fourths());
  for (int i = 0; i < 5; ++i) {
    const auto f = random_pl(rng, 0, 1);
    const auto t = trace_energy_identity(fat, f, 1e-3);
    CHECK(t.lhs.hi >= t.rhs.lo - 1e-12);
    CHECK(t.rhs.hi >= t.lhs.lo - 1e-12);
  }
}

TEST_CASE("form invariants") {
  std::mt19937_64 rng(21);
  const std::vector<NearlyClosedSet> sets{
      NearlyClosedSet::interval(0, 1), two_thirds(), NearlyClosedSet::svc(fourths()),
      NearlyClosedSet({NearlyClosedSet::point_piece(-0.5), NearlyClosedSet::generator_piece(fourths())})};
  const double tol = 1e-8;
  for (const auto& e : sets) {
    const auto form = FormDescriptor::natural(e);
    const auto id = TestFunction::natural(PLFunction::identity(e.l(), e.r()));
    CHECK(energy(form, id, id, tol).contains(0.5 * (e.r() - e.l()), tol));
    for (int i = 0; i < 4; ++i) {
      const auto f = TestFunction::natural(random_pl(rng, e.l(), e.r()));
      const auto g = TestFunction::natural(random_pl(rng, e.l(), e.r()));
      const auto fg = energy(form, f, g, tol), gf = energy(form, g, f, tol);
      const auto ff = energy(form, f, f, tol), gg = energy(form, g, g, tol);
      CHECK(std::abs(fg.mid() - gf.mid()) <= tol);
      CHECK(ff.lo >= -tol);
      CHECK(fg.mid() * fg.mid() <= ff.mid() * gg.mid() + tol);
      CHECK(energy(form, f.clamped(0, 1), f.clamped(0, 1), tol).mid() <= ff.mid() + tol);
      const auto lin = energy(form, f.scaled(2.0), g, tol);
      CHECK(lin.mid() == doctest::Approx(2.0 * fg.mid()).epsilon(1e-9));
    }
  }
}

TEST_CASE("subspace with a ubiquitous characteristic set") {
  const auto e = two_thirds();
  const auto g = two_ubiquitous();
  const auto sc = scale_from_charset(e, g, 0.0, 1e-8);
  const auto mu = StieltjesMeasure::restricted_lebesgue(e);
  const auto child = FormDescriptor::make(e, sc, mu);
  const auto parent = FormDescriptor::make(e, ScaleFunction::natural(e), mu);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> pos(0, 1), val(-2, 2);
  std::vector<TestFunction> probes;
  for (int i = 0; i < 20; ++i) {
    std::vector<double> k{0, 1, pos(rng), pos(rng), pos(rng)};
    std::sort(k.begin(), k.end());
    probes.push_back(TestFunction::in_scale(sc, k, {val(rng), val(rng), val(rng), val(rng)}, val(rng)));
  }
  const auto rep = verify_subspace(child, parent, probes, 1e-8);
  CHECK(rep.membership.outcome == SVerdict::Outcome::Yes);
  CHECK(rep.pass);
  for (const auto& row : rep.rows) {
    CHECK(row.child_domain.outcome == DomainVerdict::Outcome::Yes);
    CHECK(std::abs(row.scale_integral.mid() - row.x_integral.mid()) <= 1e-10);
  }
  CHECK(to_csv(rep).find("PASS") != std::string::npos);
}

TEST_CASE("slope one-half scale fails with the defect prediction") {
  // For h = x: parent 1/2, child 1/2 int (dh/dsbar)^2 dsbar = 1/2 * 4 * 1/2 = 1,
  // and 1/2 int (dh/dsbar)^2 dnu = 1/2 * 4 * (-1/4) = -1/2 = parent - child.
  const auto e = NearlyClosedSet::interval(0, 1);
  const auto mu = StieltjesMeasure::restricted_lebesgue(e);
  const auto child = FormDescriptor::make(e, ScaleFunction::general_pl(e, PLFunction({0, 1}, {0, 0.5})), mu);
  const auto parent = FormDescriptor::natural(e);
  const auto rep = verify_subspace(child, parent, {id01()}, 1e-10);
  CHECK_FALSE(rep.pass);
  REQUIRE(rep.rows.size() == 1);
  const auto& row = rep.rows[0];
  CHECK(row.parent_energy.mid() == doctest::Approx(0.5));
  CHECK(row.child_energy.mid() == doctest::Approx(1.0));
  REQUIRE(row.predicted);
  CHECK(row.predicted->mid() == doctest::Approx(-0.5));
  CHECK(to_csv(rep).find("FAIL") != std::string::npos);
}

TEST_CASE("a form is a subspace of itself") {
  const auto parent = FormDescriptor::natural(two_thirds());
  std::mt19937_64 rng(2);
  std::vector<TestFunction> probes;
  for (int i = 0; i < 5; ++i) probes.push_back(TestFunction::natural(random_pl(rng, 0, 1)));
  CHECK(verify_subspace(parent, parent, probes, 1e-12).pass);
  CHECK_THROWS_AS(verify_subspace(FormDescriptor::natural(NearlyClosedSet::interval(0, 1)), parent, probes, 1e-9),
                  Error);
}
