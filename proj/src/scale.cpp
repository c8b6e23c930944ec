#include "quasidiff/scale.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "quasidiff/errors.hpp"

namespace quasidiff {

namespace {

constexpr double kSlopeEps = 1e-12;

bool is_one(double k) { return std::abs(k - 1.0) <= kSlopeEps; }
bool is_zero(double k) { return std::abs(k) <= kSlopeEps; }

// Exact |E cap [a,b]|: interval and generator leaves clip exactly.
double set_measure(const NearlyClosedSet& e, double a, double b) {
  if (!(b > a)) return 0.0;
  const auto q = measure_query(e.as_subset(), Interval{a, b}, 1e-15);
  return q.value.mid();
}

Bracket subset_measure(const MeasurableSubset& g, double a, double b, double tol) {
  if (!(b > a)) return Bracket(0.0);
  const auto q = measure_query(g, Interval{a, b}, tol);
  if (!q.converged) {
    std::ostringstream os;
    os << "measure of a characteristic set on [" << a << ", " << b << "] stuck at " << q.value;
    fail(ErrorCode::TolNotAchievable, os.str());
  }
  return q.value;
}

std::string interval_text(double a, double b) {
  std::ostringstream os;
  os << '(' << a << ", " << b << ')';
  return os.str();
}

}  // namespace

ScaleFunction ScaleFunction::natural(NearlyClosedSet e) {
  e.require_bounded("natural scale");
  ScaleFunction s(Variant::Natural, std::move(e));
  s.certified_ = true;
  return s;
}

ScaleFunction ScaleFunction::charset(NearlyClosedSet e, MeasurableSubset g) {
  e.require_bounded("charset scale");
  ScaleFunction s(Variant::CharSet, std::move(e));
  s.g_ = std::move(g);
  return s;
}

ScaleFunction ScaleFunction::general_pl(NearlyClosedSet e, PLFunction f) {
  e.require_bounded("PL scale");
  if (f.breaks().front() > e.l() || f.breaks().back() < e.r())
    fail(ErrorCode::InvalidInput, "PL scale breaks must cover [l, r]");
  for (std::size_t i = 0; i < f.pieces(); ++i)
    if (f.slope(i) < 0.0) fail(ErrorCode::InvalidInput, "PL scale must be nondecreasing");
  ScaleFunction s(Variant::PL, std::move(e));
  s.pl_ = std::move(f);
  return s;
}

Bracket ScaleFunction::increment(double a, double b, double tol) const {
  const double l = e_.l(), r = e_.r();
  a = std::clamp(a, l, r);
  b = std::clamp(b, l, r);
  if (!(b > a)) return Bracket(0.0);
  switch (variant_) {
    case Variant::Natural:
      return Bracket(b - a);
    case Variant::CharSet: {
      // |Gbar cap (a,b]| = |G cap (a,b]| + (b - a) - |E cap (a,b]| for G in E.
      const double gaps = (b - a) - set_measure(e_, a, b);
      return subset_measure(g_, a, b, tol) + Bracket(std::max(0.0, gaps));
    }
    case Variant::PL:
      break;
  }
  return extended(b, tol) - extended(a, tol);
}

Bracket ScaleFunction::extended(double x, double tol) const {
  const double l = e_.l(), r = e_.r();
  x = std::clamp(x, l, r);
  switch (variant_) {
    case Variant::Natural:
      return Bracket(x - l);
    case Variant::CharSet:
      return increment(l, x, tol);
    case Variant::PL: {
      const double base = (*pl_)(l);
      if (const auto gap = e_.gap_containing(x)) {
        const double sa = (*pl_)(gap->lo), sb = (*pl_)(gap->hi);
        return Bracket(sa - base + (sb - sa) * (x - gap->lo) / gap->length());
      }
      return Bracket((*pl_)(x) - base);
    }
  }
  return Bracket(0.0);
}

std::vector<ScaleSegment> ScaleFunction::segments() const {
  const double l = e_.l(), r = e_.r();
  switch (variant_) {
    case Variant::Natural:
      return {{l, r, 1.0, false}};
    case Variant::CharSet:
      fail(ErrorCode::Unsupported, "a characteristic-set scale has no finite slope description");
    case Variant::PL:
      break;
  }
  const auto& f = *pl_;
  std::vector<Interval> broken;
  std::vector<double> cuts{l, r};
  for (double b : f.breaks()) {
    if (!(b > l && b < r)) continue;
    cuts.push_back(b);
    if (const auto gap = e_.gap_containing(b)) {
      if (broken.empty() || !(broken.back() == *gap)) broken.push_back(*gap);
    }
  }
  for (const auto& g : broken) {
    cuts.push_back(g.lo);
    cuts.push_back(g.hi);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<ScaleSegment> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    const double mid = 0.5 * (a + b);
    const auto in_gap = std::find_if(broken.begin(), broken.end(),
                                     [&](const Interval& g) { return mid > g.lo && mid < g.hi; });
    ScaleSegment seg{a, b, (f(b) - f(a)) / (b - a), false};
    if (in_gap != broken.end()) seg = {a, b, (f(in_gap->hi) - f(in_gap->lo)) / in_gap->length(), true};
    if (!out.empty() && out.back().hi == a && out.back().chord == seg.chord && out.back().slope == seg.slope)
      out.back().hi = b;
    else
      out.push_back(seg);
  }
  return out;
}

bool ScaleFunction::operator==(const ScaleFunction& o) const {
  if (variant_ != o.variant_ || !(e_ == o.e_)) return false;
  switch (variant_) {
    case Variant::Natural:
      return true;
    case Variant::CharSet:
      return g_.same_expression(o.g_);
    case Variant::PL:
      return *pl_ == *o.pl_;
  }
  return false;
}

Bracket ExtendedScale::gap_slope(Interval gap, double tol) const {
  if (s_.variant() != ScaleFunction::Variant::PL) return Bracket(1.0);
  (void)tol;
  return Bracket((s_.pl()(gap.hi) - s_.pl()(gap.lo)) / gap.length());
}

ExtendedScale extend_scale(const ScaleFunction& s) { return ExtendedScale(s); }

// ---------------------------------------------------------------- density certificate

namespace {

using IntervalList = std::vector<Interval>;  // open intervals, sorted, disjoint

IntervalList normalize_list(IntervalList v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](const Interval& i) { return !(i.hi > i.lo); }), v.end());
  std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  IntervalList out;
  for (const auto& i : v) {
    if (!out.empty() && i.lo <= out.back().hi)
      out.back().hi = std::max(out.back().hi, i.hi);
    else
      out.push_back(i);
  }
  return out;
}

IntervalList unite(const IntervalList& a, const IntervalList& b) {
  IntervalList v = a;
  v.insert(v.end(), b.begin(), b.end());
  return normalize_list(std::move(v));
}

IntervalList intersect(const IntervalList& a, const IntervalList& b) {
  IntervalList out;
  for (const auto& x : a)
    for (const auto& y : b) {
      const double lo = std::max(x.lo, y.lo), hi = std::min(x.hi, y.hi);
      if (hi > lo) out.push_back({lo, hi});
    }
  return normalize_list(std::move(out));
}

// Complement within the universe u; boundary points are null and dropped.
IntervalList complement(const IntervalList& a, const Interval& u) {
  IntervalList out;
  double cur = u.lo;
  for (const auto& x : a) {
    if (x.lo > cur) out.push_back({cur, std::min(x.lo, u.hi)});
    cur = std::max(cur, x.hi);
  }
  if (u.hi > cur) out.push_back({cur, u.hi});
  return normalize_list(std::move(out));
}

// Regions of a measurable set, each an open-interval list inside the universe:
// full: A is a.e. everything; dense: A meets every subinterval in positive
// measure; codense: the complement does; nonnull: A may be nonnull there
// (outside it A is a.e. empty).
struct Regions {
  IntervalList full, dense, codense, nonnull;
};

Regions complement_regions(const Regions& a, const Interval& u) {
  const auto empty_a = complement(a.nonnull, u);
  return {empty_a, unite(a.codense, empty_a), unite(a.dense, a.full), complement(a.full, u)};
}

Regions intersect_regions(const Regions& a, const Regions& b, const Interval& u) {
  Regions r;
  r.full = intersect(a.full, b.full);
  r.dense = unite(intersect(a.dense, b.full), intersect(a.full, b.dense));
  r.nonnull = intersect(a.nonnull, b.nonnull);
  r.codense = unite(unite(a.codense, b.codense), complement(r.nonnull, u));
  return r;
}

Regions regions_of(const MeasurableSubset::Node& node, const Interval& u) {
  using Composite = MeasurableSubset::Composite;
  using Op = MeasurableSubset::Op;
  if (const auto* iv = std::get_if<std::vector<Interval>>(&node.value)) {
    const auto l = normalize_list(*iv);
    return {l, l, complement(l, u), l};
  }
  if (const auto* s = std::get_if<SVCSet>(&node.value)) {
    // Its gaps are dense in the base.
    return {{}, {}, {u}, {{s->base().lo, s->base().hi}}};
  }
  if (const auto* g = std::get_if<UbiquitousSet>(&node.value)) {
    const IntervalList base{{g->base().lo, g->base().hi}};
    return {{}, base, {u}, base};
  }
  const auto& c = std::get<Composite>(node.value);
  if (c.operands.empty()) return {{}, {}, {u}, {}};
  Regions acc = regions_of(*c.operands.front(), u);
  for (std::size_t i = 1; i < c.operands.size(); ++i) {
    const Regions b = regions_of(*c.operands[i], u);
    switch (c.op) {
      case Op::Intersection:
        acc = intersect_regions(acc, b, u);
        break;
      case Op::Difference:
        acc = intersect_regions(acc, complement_regions(b, u), u);
        break;
      case Op::Union:
        // A u B is the complement of A^c cap B^c.
        acc = complement_regions(intersect_regions(complement_regions(acc, u), complement_regions(b, u), u), u);
        break;
    }
  }
  return acc;
}

}  // namespace

DensityCertificate certify_measure_dense(const NearlyClosedSet& e, const MeasurableSubset& g, double tol) {
  e.require_bounded("measure-density certificate");
  const Interval u{e.l(), e.r()};
  const Regions reg = regions_of(g.node(), u);
  // Gaps of E are full; generator pieces of E have dense gaps. Only interval
  // pieces of E must be covered by G's dense region, up to finitely many points.
  IntervalList uncovered;
  for (const auto& p : e.pieces()) {
    if (p.kind != NearlyClosedSet::Kind::Interval) continue;
    const auto rest = intersect(complement(reg.dense, u), {{p.lo, p.hi}});
    uncovered.insert(uncovered.end(), rest.begin(), rest.end());
  }
  if (uncovered.empty()) return {DensityCertificate::Outcome::Dense, std::nullopt, Bracket(0.0)};
  // Search dyadic subintervals for one where G is certifiably null.
  constexpr int kMaxQueries = 256;
  std::deque<Interval> queue(uncovered.begin(), uncovered.end());
  for (int q = 0; q < kMaxQueries && !queue.empty(); ++q) {
    const Interval j = queue.front();
    queue.pop_front();
    const auto m = measure_query(g, j, 0.25 * tol);
    if (m.value.hi < tol) return {DensityCertificate::Outcome::NotDense, j, m.value};
    const double mid = 0.5 * (j.lo + j.hi);
    queue.push_back({j.lo, mid});
    queue.push_back({mid, j.hi});
  }
  return {DensityCertificate::Outcome::Unknown, std::nullopt, Bracket(0.0)};
}

ScaleFunction scale_from_charset(const NearlyClosedSet& e, const MeasurableSubset& g, double anchor, double tol) {
  e.require_bounded("scale_from_charset");
  if (e.contains(anchor) == Tri::Out) fail(ErrorCode::InvalidInput, "the anchor must lie in E");
  const auto outside = measure_query(g - e.as_subset(), tol);
  if (outside.value.lo > 0.0) fail(ErrorCode::InvalidInput, "G must lie in E up to a null set");
  const auto cert = certify_measure_dense(e, g, tol);
  switch (cert.outcome) {
    case DensityCertificate::Outcome::Dense: {
      ScaleFunction s = ScaleFunction::charset(e, g);
      s.certified_ = true;
      return s;
    }
    case DensityCertificate::Outcome::NotDense: {
      std::ostringstream os;
      os << "G u (I \\ E) is null on " << interval_text(cert.witness->lo, cert.witness->hi) << ", |G cap J| in "
         << cert.witness_measure;
      fail(ErrorCode::NotMeasureDense, os.str());
    }
    case DensityCertificate::Outcome::Unknown:
      break;
  }
  fail(ErrorCode::CertificateUnknown, "could neither certify nor refute measure density of G u (I \\ E)");
}

// ---------------------------------------------------------------- family S

SVerdict is_in_S(const ScaleFunction& s, double tol) {
  using Outcome = SVerdict::Outcome;
  const auto& e = s.set();
  switch (s.variant()) {
    case ScaleFunction::Variant::Natural:
      return {Outcome::Yes, std::nullopt, "natural scale"};
    case ScaleFunction::Variant::CharSet: {
      if (s.certified()) return {Outcome::Yes, std::nullopt, "certified characteristic set"};
      const auto cert = certify_measure_dense(e, s.charset_g(), tol);
      if (cert.outcome == DensityCertificate::Outcome::Dense) return {Outcome::Yes, std::nullopt, "measure-dense"};
      if (cert.outcome == DensityCertificate::Outcome::NotDense)
        return {Outcome::No, cert.witness, "G u (I \\ E) is null on the witness, so s is flat there"};
      return {Outcome::Unknown, std::nullopt, "measure-density certificate undecided"};
    }
    case ScaleFunction::Variant::PL:
      break;
  }
  for (const auto& seg : s.segments()) {
    const double len = seg.hi - seg.lo;
    const double on_e = seg.chord ? 0.0 : set_measure(e, seg.lo, seg.hi);
    const double on_gaps = len - on_e;
    std::ostringstream why;
    if (on_gaps > 0.0 && !is_one(seg.slope)) {
      why << "gap slope " << seg.slope << " != 1";
      return {Outcome::No, Interval{seg.lo, seg.hi}, why.str()};
    }
    if (on_e > 0.0 && !is_one(seg.slope) && !is_zero(seg.slope)) {
      why << "slope " << seg.slope << " on a positive-measure part of E";
      return {Outcome::No, Interval{seg.lo, seg.hi}, why.str()};
    }
    if (is_zero(seg.slope)) {
      for (const auto& p : e.pieces()) {
        if (p.kind != NearlyClosedSet::Kind::Interval) continue;
        if (std::min(p.hi, seg.hi) > std::max(p.lo, seg.lo))
          return {Outcome::No, Interval{std::max(p.lo, seg.lo), std::min(p.hi, seg.hi)},
                  "scale is flat on an interval of E"};
      }
    }
  }
  return {Outcome::Yes, std::nullopt, "slopes in {0,1} on E and 1 on gaps"};
}

MeasurableSubset characteristic_set_of(const ScaleFunction& s, double tol) {
  const auto v = is_in_S(s, tol);
  if (v.outcome == SVerdict::Outcome::No) fail(ErrorCode::NotInS, v.reason);
  if (v.outcome == SVerdict::Outcome::Unknown) fail(ErrorCode::CertificateUnknown, v.reason);
  switch (s.variant()) {
    case ScaleFunction::Variant::Natural:
      return s.set().as_subset();
    case ScaleFunction::Variant::CharSet:
      return s.charset_g();
    case ScaleFunction::Variant::PL:
      break;
  }
  std::vector<Interval> ones;
  for (const auto& seg : s.segments())
    if (!seg.chord && is_one(seg.slope)) ones.push_back({seg.lo, seg.hi});
  if (ones.empty()) return MeasurableSubset::empty();
  return s.set().as_subset() & MeasurableSubset::intervals(ones);
}

Bracket defect_cumulative(const ScaleFunction& s, double y, double tol) {
  (void)tol;
  if (s.variant() != ScaleFunction::Variant::PL) return Bracket(0.0);
  double f = 0.0;
  for (const auto& seg : s.segments()) {
    const double hi = std::min(seg.hi, y);
    if (hi > seg.lo) f += (seg.slope * seg.slope - seg.slope) * (hi - seg.lo);
  }
  return Bracket(f);
}

// ---------------------------------------------------------------- pushforward

StieltjesMeasure pushforward(const StieltjesMeasure& mu, const ScaleFunction& s, double tol) {
  mu.validate();
  StieltjesMeasure out;
  auto map_point = [&](double x) {
    const auto v = s.extended(x, tol);
    if (v.width() > 2.0 * tol) fail(ErrorCode::TolNotAchievable, "scale value bracket too wide");
    return v.mid();
  };
  const double l = s.set().l(), r = s.set().r();
  auto in_range = [&](double x) { return x >= l && x <= r; };
  double prev_x = -kInf, prev_y = -kInf;
  for (const auto& a : mu.atoms) {
    if (!in_range(a.x)) fail(ErrorCode::DomainViolation, "atom outside the scale's domain [l, r]");
    const double y = map_point(a.x);
    if (a.x > prev_x && !(y > prev_y)) fail(ErrorCode::NotInjective, "scale identifies two atoms");
    out.atoms.push_back({y, a.w});
    prev_x = a.x;
    prev_y = y;
  }
  if (!mu.densities.empty() || !mu.indicators.empty()) {
    if (s.variant() == ScaleFunction::Variant::CharSet)
      fail(ErrorCode::Unsupported, "pushforward of non-atomic measures needs a piecewise-linear scale");
    for (const auto& seg : s.segments()) {
      const double y0 = s.extended(seg.lo, tol).mid();
      const double k = seg.slope;
      for (const auto& d : mu.densities) {
        const double lo = std::max(seg.lo, d.support.lo), hi = std::min(seg.hi, d.support.hi);
        if (!(hi > lo)) continue;
        if (is_zero(k)) fail(ErrorCode::NotInjective, "scale is flat on the support of a density");
        // x = seg.lo + (y - y0) / k and dy = k dx.
        const double c1 = d.c1 / (k * k);
        const double c0 = (d.c0 + d.c1 * (seg.lo - y0 / k)) / k;
        out.densities.push_back({{y0 + k * (lo - seg.lo), y0 + k * (hi - seg.lo)}, c0, c1});
      }
      for (const auto& ind : mu.indicators) {
        const auto piece = ind.set & MeasurableSubset::interval(seg.lo, seg.hi);
        if (is_zero(k)) {
          if (measure_query(piece, tol).value.hi > 0.0)
            fail(ErrorCode::NotInjective, "scale is flat on the support of an indicator component");
          continue;
        }
        out.indicators.push_back({piece.affine(k, y0 - k * seg.lo), ind.coef / k});
      }
    }
  }
  for (double* end : {&out.l0, &out.r0}) (void)end;
  if (std::isfinite(mu.l0)) {
    if (!in_range(mu.l0)) fail(ErrorCode::Unsupported, "l0 outside [l, r]");
    out.l0 = map_point(mu.l0);
  }
  if (std::isfinite(mu.r0)) {
    if (!in_range(mu.r0)) fail(ErrorCode::Unsupported, "r0 outside [l, r]");
    out.r0 = map_point(mu.r0);
  }
  if (mu.anchor && in_range(*mu.anchor)) out.anchor = map_point(*mu.anchor);
  out.anchor_value = mu.anchor_value;
  return out;
}

}  // namespace quasidiff
