#include "quasidiff/measures.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "quasidiff/errors.hpp"

namespace quasidiff {

StieltjesMeasure StieltjesMeasure::lebesgue(Interval iv, double density) {
  StieltjesMeasure m;
  m.densities.push_back({iv, density, 0.0});
  return m;
}

StieltjesMeasure StieltjesMeasure::atomic(std::vector<Atom> atoms) {
  StieltjesMeasure m;
  m.atoms = std::move(atoms);
  std::sort(m.atoms.begin(), m.atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
  return m;
}

StieltjesMeasure StieltjesMeasure::restricted_lebesgue(const NearlyClosedSet& e, double coef) {
  e.require_bounded("restricted_lebesgue");
  StieltjesMeasure m;
  for (const auto& p : e.pieces()) {
    switch (p.kind) {
      case NearlyClosedSet::Kind::Interval:
        m.densities.push_back({{p.lo, p.hi}, coef, 0.0});
        break;
      case NearlyClosedSet::Kind::Generator:
        if (!p.generator->null()) m.indicators.push_back({MeasurableSubset::svc(*p.generator), coef});
        break;
      case NearlyClosedSet::Kind::Point:
        break;
    }
  }
  return m;
}

void StieltjesMeasure::validate() const {
  for (const auto& a : atoms)
    if (!std::isfinite(a.x) || !(a.w > 0.0) || !std::isfinite(a.w))
      fail(ErrorCode::InvalidInput, "atoms need a finite location and a finite positive mass");
  for (const auto& d : densities) {
    if (!(std::isfinite(d.support.lo) && std::isfinite(d.support.hi) && d.support.lo < d.support.hi))
      fail(ErrorCode::InvalidInput, "density pieces need a bounded interval with positive length");
    if (d.at(d.support.lo) < 0.0 || d.at(d.support.hi) < 0.0)
      fail(ErrorCode::InvalidInput, "densities must be nonnegative");
  }
  for (const auto& ind : indicators) {
    if (!(ind.coef > 0.0) || !std::isfinite(ind.coef))
      fail(ErrorCode::InvalidInput, "indicator coefficients must be finite and positive");
    const auto h = ind.set.hull();
    if (h && !(std::isfinite(h->lo) && std::isfinite(h->hi)))
      fail(ErrorCode::InvalidInput, "indicator sets must be bounded");
  }
  if (!(l0 < r0)) fail(ErrorCode::InvalidInput, "need l0 < r0");
}

Bracket StieltjesMeasure::mass(double a, double b, double tol) const {
  if (!(b > a)) return Bracket(0.0);
  Bracket total(0.0);
  for (const auto& at : atoms)
    if (at.x > a && at.x <= b) total += Bracket(at.w);
  for (const auto& d : densities) {
    const double lo = std::max(a, d.support.lo), hi = std::min(b, d.support.hi);
    if (hi > lo) total += Bracket(d.at(0.5 * (lo + hi)) * (hi - lo));
  }
  const double each = tol / static_cast<double>(std::max<std::size_t>(1, indicators.size()));
  for (const auto& ind : indicators) {
    const auto h = ind.set.hull();
    if (!h) continue;
    const Interval w{std::max(a, h->lo), std::min(b, h->hi)};
    if (!(w.hi > w.lo)) continue;
    const auto q = measure_query(ind.set, w, each / ind.coef);
    if (!q.converged) {
      std::ostringstream os;
      os << "indicator mass bracket " << q.value << " cannot reach tol " << each;
      fail(ErrorCode::TolNotAchievable, os.str());
    }
    total += Bracket(ind.coef) * q.value;
  }
  return total;
}

std::optional<Interval> StieltjesMeasure::support_hull() const {
  double lo = kInf, hi = -kInf;
  for (const auto& a : atoms) {
    lo = std::min(lo, a.x);
    hi = std::max(hi, a.x);
  }
  for (const auto& d : densities) {
    lo = std::min(lo, d.support.lo);
    hi = std::max(hi, d.support.hi);
  }
  for (const auto& ind : indicators) {
    if (const auto h = ind.set.hull()) {
      lo = std::min(lo, h->lo);
      hi = std::max(hi, h->hi);
    }
  }
  if (lo > hi) return std::nullopt;
  return Interval{lo, hi};
}

double StieltjesMeasure::anchor_point() const {
  if (anchor) return *anchor;
  if (std::isfinite(l0)) return l0;
  const auto h = support_hull();
  return h ? h->lo - 1.0 : 0.0;
}

StieltjesMeasure StieltjesMeasure::scaled(double c) const {
  if (!(c > 0.0)) fail(ErrorCode::InvalidInput, "measures scale by positive factors only");
  StieltjesMeasure m = *this;
  for (auto& a : m.atoms) a.w *= c;
  for (auto& d : m.densities) {
    d.c0 *= c;
    d.c1 *= c;
  }
  for (auto& ind : m.indicators) ind.coef *= c;
  m.anchor_value *= c;
  return m;
}

StieltjesMeasure operator+(const StieltjesMeasure& a, const StieltjesMeasure& b) {
  StieltjesMeasure m = a;
  m.atoms.insert(m.atoms.end(), b.atoms.begin(), b.atoms.end());
  std::sort(m.atoms.begin(), m.atoms.end(), [](const Atom& x, const Atom& y) { return x.x < y.x; });
  m.densities.insert(m.densities.end(), b.densities.begin(), b.densities.end());
  m.indicators.insert(m.indicators.end(), b.indicators.begin(), b.indicators.end());
  return m;
}

Bracket cumulative(const StieltjesMeasure& m, double x, double tol) {
  if (x < m.l0 || x >= m.r0) {
    std::ostringstream os;
    os << "m(" << x << ") is infinite outside [l0, r0) = [" << m.l0 << ", " << m.r0 << ")";
    fail(ErrorCode::InfiniteValue, os.str());
  }
  const double e = m.anchor_point();
  if (x >= e) return Bracket(m.anchor_value) + m.mass(e, x, tol);
  return Bracket(m.anchor_value) - m.mass(x, e, tol);
}

// ---------------------------------------------------------------- support

namespace {

using Kind = NearlyClosedSet::Kind;
using Piece = NearlyClosedSet::Piece;

[[noreturn]] void unsupported_support(const std::string& why) {
  fail(ErrorCode::Unsupported, "support of this measure is not representable: " + why);
}

void support_of_set(const MeasurableSubset::Node& node, std::vector<Piece>& out) {
  using Composite = MeasurableSubset::Composite;
  if (const auto* iv = std::get_if<std::vector<Interval>>(&node.value)) {
    for (const auto& p : *iv)
      if (p.hi > p.lo) out.push_back(NearlyClosedSet::interval_piece(p.lo, p.hi));
  } else if (const auto* s = std::get_if<SVCSet>(&node.value)) {
    // A fat generator charges every one of its stage intervals.
    if (!s->null()) out.push_back(NearlyClosedSet::generator_piece(*s));
  } else if (const auto* u = std::get_if<UbiquitousSet>(&node.value)) {
    out.push_back(NearlyClosedSet::interval_piece(u->base().lo, u->base().hi));
  } else {
    const auto& c = std::get<Composite>(node.value);
    if (c.op != MeasurableSubset::Op::Union) unsupported_support("indicator sets must be unions of leaves");
    for (const auto& o : c.operands) support_of_set(*o, out);
  }
}

bool overlaps(const Piece& a, const Piece& b) { return std::min(a.hi, b.hi) > std::max(a.lo, b.lo); }

// Merge raw support pieces into the separated closure pieces of a nearly
// closed set.
std::vector<Piece> merge_support(std::vector<Piece> raw) {
  std::vector<Piece> intervals, gens, points;
  for (auto& p : raw) {
    if (p.kind == Kind::Interval) intervals.push_back(p);
    if (p.kind == Kind::Generator) gens.push_back(p);
    if (p.kind == Kind::Point) points.push_back(p);
  }
  auto by_lo = [](const Piece& a, const Piece& b) { return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi); };
  std::sort(intervals.begin(), intervals.end(), by_lo);
  std::vector<Piece> merged;
  for (const auto& p : intervals) {
    if (!merged.empty() && p.lo <= merged.back().hi)
      merged.back().hi = std::max(merged.back().hi, p.hi);
    else
      merged.push_back(p);
  }
  std::sort(gens.begin(), gens.end(), by_lo);
  std::vector<Piece> kept_gens;
  for (const auto& g : gens) {
    if (!kept_gens.empty() && kept_gens.back().generator == g.generator) continue;
    bool covered = false;
    for (const auto& iv : merged) {
      if (iv.lo <= g.lo && iv.hi >= g.hi) covered = true;
      else if (overlaps(iv, g)) unsupported_support("an interval partly overlaps a Cantor-type component");
    }
    if (covered) continue;
    if (!kept_gens.empty() && overlaps(kept_gens.back(), g))
      unsupported_support("overlapping Cantor-type components");
    kept_gens.push_back(g);
  }
  std::vector<Piece> out = merged;
  out.insert(out.end(), kept_gens.begin(), kept_gens.end());
  std::sort(out.begin(), out.end(), by_lo);
  // Intervals touching a generator stay separate pieces; both are closed.
  const std::size_t solid = out.size();
  for (const auto& pt : points) {
    bool absorbed = false;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto& p = out[i];
      if (pt.lo < p.lo || pt.lo > p.hi) continue;
      if (i < solid && p.kind == Kind::Generator && p.generator->contains(pt.lo, SVCSet::kMaxStage) == Tri::Out)
        unsupported_support("an atom sits inside a Cantor-type component's gap");
      absorbed = true;
    }
    if (!absorbed) out.push_back(pt);
  }
  std::sort(out.begin(), out.end(), by_lo);
  return out;
}

// Clip closure pieces to the open window (l0, r0); returns the closure of the
// clipped set.
std::vector<Piece> clip_support(const std::vector<Piece>& pieces, double l0, double r0) {
  std::vector<Piece> out;
  for (auto p : pieces) {
    if (p.hi < l0 || p.lo > r0) continue;
    switch (p.kind) {
      case Kind::Point:
        if (p.lo > l0 && p.lo < r0) out.push_back(p);
        break;
      case Kind::Interval:
        p.lo = std::max(p.lo, l0);
        p.hi = std::min(p.hi, r0);
        if (p.hi > p.lo) out.push_back(p);
        break;
      case Kind::Generator:
        if (p.hi <= l0 || p.lo >= r0) break;
        if (p.lo < l0 || p.hi > r0) unsupported_support("l0 or r0 cuts through a Cantor-type component");
        out.push_back(p);
        break;
    }
  }
  return out;
}

}  // namespace

StateSpaceDerivation derive_state_space(const StieltjesMeasure& m) {
  m.validate();
  std::vector<Piece> raw;
  for (const auto& a : m.atoms) raw.push_back(NearlyClosedSet::point_piece(a.x));
  for (const auto& d : m.densities) {
    if (d.c0 == 0.0 && d.c1 == 0.0) continue;
    raw.push_back(NearlyClosedSet::interval_piece(d.support.lo, d.support.hi));
  }
  for (const auto& ind : m.indicators) support_of_set(ind.set.node(), raw);
  const auto pieces = clip_support(merge_support(std::move(raw)), m.l0, m.r0);
  if (pieces.empty()) fail(ErrorCode::TrivialMeasure, "m is constant on (l0, r0)");
  const double l = pieces.front().lo, r = pieces.back().hi;
  if (!(l < r)) fail(ErrorCode::TrivialMeasure, "l >= r: m increases at a single point only");
  const bool l_in = l > m.l0, r_in = r < m.r0;
  StateSpaceDerivation out{m.l0, m.r0, l, r, NearlyClosedSet(pieces, l_in, r_in), true};
  if (std::isfinite(m.l0) && l != m.l0) out.qk_satisfied = false;
  if (std::isfinite(m.r0) && r != m.r0) out.qk_satisfied = false;
  return out;
}

// ---------------------------------------------------------------- integration

Bracket integrate(const PLFunction& f, const StieltjesMeasure& mu, double tol) {
  mu.validate();
  Bracket total(0.0);
  for (const auto& a : mu.atoms) total += Bracket(a.w * f(a.x));
  for (const auto& d : mu.densities) {
    // Simpson's rule is exact for the quadratic f * density on each piece.
    std::vector<double> xs{d.support.lo, d.support.hi};
    for (double b : f.breaks())
      if (b > d.support.lo && b < d.support.hi) xs.push_back(b);
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      const double a = xs[i], b = xs[i + 1], c = 0.5 * (a + b);
      total += Bracket((b - a) / 6.0 * (f(a) * d.at(a) + 4.0 * f(c) * d.at(c) + f(b) * d.at(b)));
    }
  }
  const double each = tol / static_cast<double>(std::max<std::size_t>(1, mu.indicators.size()));
  for (const auto& ind : mu.indicators) {
    const auto hull = ind.set.hull();
    if (!hull || !(hull->hi > hull->lo)) continue;
    Bracket best{-kInf, kInf};
    bool done = false;
    double h = hull->length();
    for (int iter = 0; iter < 24 && !done; ++iter, h *= 0.5) {
      Bracket sum(0.0);
      for (const auto& c : ind.set.approximate(*hull, h, f.breaks())) {
        // f is affine on every cell since the cells are cut at its breaks.
        const double fa = f(c.lo), fb = f(c.hi);
        const double beta = (fb - fa) / (c.hi - c.lo);
        const double alpha = fa - beta * c.lo;
        sum += Bracket(alpha) * Bracket(c.mass_lo, c.mass_hi) + Bracket(beta) * Bracket(c.moment_lo, c.moment_hi);
      }
      sum = Bracket(ind.coef) * sum;
      best = {std::max(best.lo, sum.lo), std::min(best.hi, sum.hi)};
      done = best.width() <= 2.0 * each;
    }
    if (!done) {
      std::ostringstream os;
      os << "integral bracket " << best << " against an indicator cannot reach tol " << each;
      fail(ErrorCode::TolNotAchievable, os.str());
    }
    total += best;
  }
  return total;
}

}  // namespace quasidiff
