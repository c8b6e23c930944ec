#include "quasidiff/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "quasidiff/errors.hpp"

namespace quasidiff {

namespace {

constexpr double kSlopeEps = 1e-12;

void union_terms(const MeasurableSubset::NodePtr& n, std::vector<MeasurableSubset>& out) {
  if (const auto* c = std::get_if<MeasurableSubset::Composite>(&n->value); c && c->op == MeasurableSubset::Op::Union) {
    for (const auto& o : c->operands) union_terms(o, out);
  } else if (const auto* iv = std::get_if<std::vector<Interval>>(&n->value)) {
    for (const auto& i : *iv) out.push_back(MeasurableSubset::interval(i.lo, i.hi));
  } else {
    out.push_back(MeasurableSubset(n));
  }
}

bool overlaps(const std::optional<Interval>& x, const std::optional<Interval>& y) {
  return x && y && x->lo < y->hi && y->lo < x->hi;
}

// |A \ B|. Union terms of A already inside B are dropped; when the remaining
// terms have disjoint hulls each is measured against the nearby terms of B
// only, which keeps unrelated generators out of the binned query.
Bracket difference_measure(const MeasurableSubset& a, const MeasurableSubset& b, double tol) {
  if (provably_subset(a, b)) return Bracket(0.0);
  std::vector<MeasurableSubset> at, bt;
  union_terms(a.node_ptr(), at);
  union_terms(b.node_ptr(), bt);
  std::erase_if(at, [&](const MeasurableSubset& t) { return t.is_empty_expression() || provably_subset(t, b); });
  if (at.empty()) return Bracket(0.0);
  std::vector<std::pair<Interval, std::size_t>> hulls;
  for (std::size_t i = 0; i < at.size(); ++i) hulls.emplace_back(*at[i].hull(), i);
  std::sort(hulls.begin(), hulls.end(), [](const auto& x, const auto& y) { return x.first.lo < y.first.lo; });
  for (std::size_t i = 0; i + 1 < hulls.size(); ++i)
    if (hulls[i].first.hi > hulls[i + 1].first.lo) return measure_query(a - b, tol).value;
  const double share = tol / static_cast<double>(at.size());
  Bracket total(0.0);
  for (const auto& t : at) {
    std::vector<MeasurableSubset> near;
    for (const auto& u : bt)
      if (overlaps(t.hull(), u.hull())) near.push_back(u);
    total += measure_query(near.empty() ? t : t - MeasurableSubset::unite(near), share).value;
  }
  return total;
}

bool null_at(const Bracket& b, double tol) { return b.hi <= tol; }


std::vector<ScaleSegment> slope_segments(const ScaleFunction& s) {
  if (s.variant() == ScaleFunction::Variant::PL) return s.segments();
  return {{s.set().l(), s.set().r(), 1.0, false}};
}

const ScaleSegment& segment_at(const std::vector<ScaleSegment>& segs, double x) {
  for (const auto& seg : segs)
    if (x > seg.lo && x < seg.hi) return seg;
  return segs.back();
}

[[noreturn]] void not_in_ss(double a, double b, const std::string& why) {
  std::ostringstream os;
  os << why << " on (" << a << ", " << b << ")";
  fail(ErrorCode::NotInSs, os.str());
}

// Density of the candidate with respect to the base scale, checked piecewise.
void check_density(const GeneralSubspace& d, double tol) {
  if (d.candidate.variant() == ScaleFunction::Variant::CharSet)
    fail(ErrorCode::Unsupported, "candidate scales on a general base must be natural or piecewise linear");
  const auto cand = slope_segments(d.candidate);
  const bool charset_base = d.base.variant() == ScaleFunction::Variant::CharSet;
  const auto base = charset_base ? std::vector<ScaleSegment>{} : slope_segments(d.base);
  std::vector<double> cuts{d.e.l(), d.e.r()};
  for (const auto& s : cand) cuts.push_back(s.lo);
  for (const auto& s : base) cuts.push_back(s.lo);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const auto e_set = d.e.as_subset();
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1], mid = 0.5 * (a + b);
    if (!(b > a)) continue;
    const auto& cs = segment_at(cand, mid);
    const double kc = cs.slope;
    const double on_e = cs.chord ? 0.0 : measure_query(e_set, Interval{a, b}, tol).value.mid();
    const double on_gaps = (b - a) - on_e;
    auto is01 = [](double r) { return std::abs(r) <= kSlopeEps || std::abs(r - 1.0) <= kSlopeEps; };
    if (charset_base) {
      if (on_gaps > 0.0 && std::abs(kc - 1.0) > kSlopeEps) not_in_ss(a, b, "density != 1 across gaps");
      if (on_e <= 0.0) continue;
      const auto& g = d.base.charset_g();
      const auto on_g = measure_query(e_set & g & MeasurableSubset::interval(a, b), tol).value;
      const auto off_g = difference_measure(e_set & MeasurableSubset::interval(a, b), g, tol);
      if (on_g.lo > 0.0 && !is01(kc)) not_in_ss(a, b, "density leaves {0,1}");
      if (off_g.lo > 0.0 && std::abs(kc) > kSlopeEps) not_in_ss(a, b, "candidate not absolutely continuous w.r.t. the base");
      continue;
    }
    const double kb = segment_at(base, mid).slope;
    if (kb <= kSlopeEps) {
      if (std::abs(kc) > kSlopeEps) not_in_ss(a, b, "candidate not absolutely continuous w.r.t. the base");
      continue;
    }
    const double density = kc / kb;
    if (on_gaps > 0.0 && std::abs(density - 1.0) > kSlopeEps) not_in_ss(a, b, "density != 1 across gaps");
    if (on_e > 0.0 && !is01(density)) not_in_ss(a, b, "density leaves {0,1}");
  }
}

}  // namespace

SubspaceDescriptor make_subspace(const NearlyClosedSet& e, const MeasurableSubset& g, const StieltjesMeasure& mu,
                                 double tol) {
  if (provably_subset(e.as_subset(), g)) return full_subspace(e, mu);
  auto s = scale_from_charset(e, g, e.member(), tol);
  auto form = FormDescriptor::make(e, s, mu);
  return {e, g, std::move(s), std::move(form)};
}

SubspaceDescriptor full_subspace(const NearlyClosedSet& e, const StieltjesMeasure& mu) {
  auto s = ScaleFunction::natural(e);
  auto form = FormDescriptor::make(e, s, mu);
  return {e, e.as_subset(), std::move(s), std::move(form)};
}

std::string to_string(Order o) {
  switch (o) {
    case Order::Equal: return "equal";
    case Order::Subset: return "subset";
    case Order::Superset: return "superset";
    case Order::Incomparable: return "incomparable";
    case Order::Unknown: break;
  }
  return "unknown";
}

std::string to_string(Decision d) {
  switch (d) {
    case Decision::Yes: return "yes";
    case Decision::No: return "no";
    case Decision::Unknown: break;
  }
  return "unknown";
}

Comparison compare(const SubspaceDescriptor& a, const SubspaceDescriptor& b, double tol) {
  if (!(a.e == b.e)) fail(ErrorCode::MismatchedBase, "descriptors live on different E");
  Comparison c{Order::Unknown, difference_measure(a.g, b.g, tol), difference_measure(b.g, a.g, tol)};
  const bool ab_null = null_at(c.a_minus_b, tol), ba_null = null_at(c.b_minus_a, tol);
  const bool ab_pos = c.a_minus_b.lo > 0.0, ba_pos = c.b_minus_a.lo > 0.0;
  if (ab_null && ba_null) c.order = Order::Equal;
  else if (ab_null && ba_pos) c.order = Order::Subset;
  else if (ab_pos && ba_null) c.order = Order::Superset;
  else if (ab_pos && ba_pos) c.order = Order::Incomparable;
  return c;
}

ProperVerdict is_proper(const SubspaceDescriptor& d, double tol) {
  const auto defect = difference_measure(d.e.as_subset(), d.g, tol);
  if (defect.lo > 0.0) return {Decision::Yes, defect};
  if (defect.hi < tol || defect.hi == 0.0) return {Decision::No, defect};
  return {Decision::Unknown, defect};
}

Decision has_proper_subspaces(const NearlyClosedSet& e, double tol) {
  const auto m = e.measure();
  if (m.lo > 0.0) return Decision::Yes;
  if (m.hi == 0.0) return Decision::No;
  std::ostringstream os;
  os << "|E| in " << m << " at tol " << tol;
  fail(ErrorCode::Undecided, os.str());
}

std::optional<SubspaceDescriptor> minimal_subspace(const NearlyClosedSet& e, const StieltjesMeasure& mu, double tol) {
  if (!is_nowhere_dense(e)) return std::nullopt;
  return make_subspace(e, MeasurableSubset::empty(), mu, tol);
}

std::optional<SubspaceDescriptor> construct_proper(const NearlyClosedSet& e, const StieltjesMeasure& mu, double tol) {
  if (has_proper_subspaces(e, tol) == Decision::No) return std::nullopt;
  if (is_nowhere_dense(e)) return make_subspace(e, MeasurableSubset::empty(), mu, tol);
  for (const auto& p : e.pieces()) {
    if (p.kind != NearlyClosedSet::Kind::Interval) continue;
    const auto g = MeasurableSubset::ubiquitous(UbiquitousSet({p.lo, p.hi})) |
                   (e.as_subset() - MeasurableSubset::interval(p.lo, p.hi));
    return make_subspace(e, g, mu, tol);
  }
  return std::nullopt;
}

Classification classify(const NearlyClosedSet& e, double tol) {
  Classification c{has_proper_subspaces(e, tol), "no", e.measure(), is_nowhere_dense(e)};
  if (c.measure.hi == 0.0) c.minimal = "trivially-unique";
  else if (c.nowhere_dense) c.minimal = "yes";
  return c;
}

SubspaceDescriptor to_natural(const GeneralSubspace& d, double tol) {
  if (!(d.base.set() == d.e) || !(d.candidate.set() == d.e))
    fail(ErrorCode::MismatchedBase, "base and candidate scales must live on E");
  check_density(d, tol);
  switch (d.base.variant()) {
    case ScaleFunction::Variant::Natural:
      return make_subspace(d.e, characteristic_set_of(d.candidate, tol), d.mu, tol);
    case ScaleFunction::Variant::CharSet:
      fail(ErrorCode::Unsupported, "s(E) is not representable for a characteristic-set base scale");
    case ScaleFunction::Variant::PL:
      break;
  }
  const auto segs = d.base.segments();
  const double alpha = segs.front().slope;
  for (const auto& s : segs)
    if (std::abs(s.slope - alpha) > kSlopeEps * std::max(1.0, alpha))
      fail(ErrorCode::Unsupported, "base scale must be affine on [l, r] to transport E");
  if (!(alpha > 0.0)) fail(ErrorCode::NotInjective, "base scale is flat");
  const double l = d.e.l();
  const auto et = d.e.affine(alpha, -alpha * l);
  const auto mut = pushforward(d.mu, d.base, tol);
  std::vector<double> breaks, values;
  if (d.candidate.variant() == ScaleFunction::Variant::Natural) {
    breaks = {d.e.l(), d.e.r()};
    values = breaks;
  } else {
    breaks = d.candidate.pl().breaks();
    values = d.candidate.pl().values();
  }
  for (double& x : breaks) x = alpha * (x - l);
  const auto cand = ScaleFunction::general_pl(et, PLFunction(breaks, values));
  return make_subspace(et, characteristic_set_of(cand, tol), mut, tol);
}

}  // namespace quasidiff
