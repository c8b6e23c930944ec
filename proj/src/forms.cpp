#include "quasidiff/forms.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "quasidiff/errors.hpp"

namespace quasidiff {

namespace {

constexpr double kFlat = 1e-12;

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Cuts clipped to [lo, hi], both ends included.
std::vector<double> clip_cuts(const std::vector<double>& v, double lo, double hi) {
  std::vector<double> out{lo, hi};
  for (double x : v)
    if (x > lo && x < hi) out.push_back(x);
  return sorted_unique(std::move(out));
}

bool has_inner(const std::vector<double>& sorted, double a, double b) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), a);
  return it != sorted.end() && *it < b;
}

bool is_pl(const ScaleFunction& s) { return s.variant() == ScaleFunction::Variant::PL; }

// Slope of the extended scale at an interior point of a segment.
double scale_slope_at(const ScaleFunction& s, const std::vector<ScaleSegment>& segs, double x, bool* chord = nullptr) {
  if (chord) *chord = false;
  if (!is_pl(s)) return 1.0;
  for (const auto& seg : segs)
    if (x > seg.lo && x < seg.hi) {
      if (chord) *chord = seg.chord;
      return seg.slope;
    }
  return 1.0;
}

std::vector<ScaleSegment> segments_or_empty(const ScaleFunction& s) {
  return is_pl(s) ? s.segments() : std::vector<ScaleSegment>{};
}

double chord(const ScaleFunction& s, double a, double b) {
  if (is_pl(s)) return s.pl()(b) - s.pl()(a);
  return b - a;
}

Bracket checked_measure(const MeasurableSubset& a, double lo, double hi, double tol) {
  if (!(hi > lo) || a.is_empty_expression()) return Bracket(0.0);
  return measure_query(a, Interval{lo, hi}, std::max(tol, 1e-300)).value;
}

void require_coordinate_on(const TestFunction& f, const NearlyClosedSet& e) {
  if (f.coordinate() && !(f.coordinate()->set() == e))
    fail(ErrorCode::MismatchedBase, "test function coordinate lives on a different E");
}

// E intersected with the sets on which f, g and the scale may vary.
MeasurableSubset local_support(const FormDescriptor& form, const TestFunction& f, const TestFunction& g) {
  std::vector<MeasurableSubset> parts;
  // Factors that provably contain another one are dropped, so nested
  // characteristic sets do not end up in the binned intersection path.
  auto add = [&](const MeasurableSubset& m) {
    for (const auto& p : parts)
      if (p.same_expression(m) || provably_subset(p, m)) return;
    std::erase_if(parts, [&](const MeasurableSubset& p) { return provably_subset(m, p); });
    parts.push_back(m);
  };
  add(form.e.as_subset());
  if (auto a = f.active_on_E()) add(*a);
  if (auto a = g.active_on_E()) add(*a);
  if (form.s.variant() == ScaleFunction::Variant::CharSet) add(form.s.charset_g());
  MeasurableSubset acc = parts.front();
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].is_empty_expression()) return MeasurableSubset::empty();
    if (i > 0) acc = acc & parts[i];
  }
  return acc;
}

}  // namespace

// ---------------------------------------------------------------- test functions

TestFunction TestFunction::natural(const PLFunction& f) {
  TestFunction t;
  t.knots_ = f.breaks();
  for (std::size_t i = 0; i < f.pieces(); ++i) t.slopes_.push_back(f.slope(i));
  t.v0_ = f.values().front();
  return t;
}

TestFunction TestFunction::in_scale(const ScaleFunction& coordinate, std::vector<double> knots,
                                    std::vector<double> slopes, double v0) {
  if (knots.empty() || slopes.size() + 1 != knots.size())
    fail(ErrorCode::InvalidInput, "need one slope per knot interval");
  if (!std::is_sorted(knots.begin(), knots.end())) fail(ErrorCode::InvalidInput, "knots must be sorted");
  TestFunction t;
  t.knots_ = std::move(knots);
  t.slopes_ = std::move(slopes);
  t.v0_ = v0;
  switch (coordinate.variant()) {
    case ScaleFunction::Variant::Natural:
      break;
    case ScaleFunction::Variant::CharSet:
      t.coord_ = coordinate;
      break;
    case ScaleFunction::Variant::PL:
      fail(ErrorCode::Unsupported, "test functions in a PL coordinate are written as natural PL functions");
  }
  return t;
}

TestFunction TestFunction::scale_of(const ScaleFunction& s) {
  const double l = s.set().l(), r = s.set().r();
  if (!is_pl(s)) return in_scale(s, {l, r}, {1.0});
  std::vector<double> knots{l};
  std::vector<double> slopes;
  for (const auto& seg : s.segments()) {
    knots.push_back(seg.hi);
    slopes.push_back(seg.slope);
  }
  TestFunction t;
  t.knots_ = std::move(knots);
  t.slopes_ = std::move(slopes);
  return t;
}

std::optional<MeasurableSubset> TestFunction::active_on_E() const {
  if (!coord_) return std::nullopt;
  return coord_->charset_g();
}

Bracket TestFunction::operator()(double x, double tol) const {
  Bracket v(v0_);
  for (std::size_t j = 0; j < slopes_.size(); ++j) {
    const double a = knots_[j], b = std::min(x, knots_[j + 1]);
    if (!(b > a)) break;
    if (slopes_[j] == 0.0) continue;
    const Bracket inc = coord_ ? coord_->increment(a, b, tol) : Bracket(b - a);
    v += Bracket(slopes_[j]) * inc;
  }
  return v;
}

double TestFunction::slope_at(double x) const {
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  if (it == knots_.begin() || it == knots_.end()) return 0.0;
  return slopes_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

double TestFunction::gap_increment(double a, double b) const {
  double d = 0.0;
  for (std::size_t j = 0; j < slopes_.size(); ++j) {
    const double lo = std::max(a, knots_[j]), hi = std::min(b, knots_[j + 1]);
    if (hi > lo) d += slopes_[j] * (hi - lo);
  }
  return d;
}

double TestFunction::lipschitz() const {
  double m = 0.0;
  for (double s : slopes_) m = std::max(m, std::abs(s));
  return m;
}

PLFunction TestFunction::as_pl() const {
  if (coord_) fail(ErrorCode::Unsupported, "not a piecewise-linear function of x");
  if (knots_.size() == 1) return PLFunction::constant(v0_, knots_[0], knots_[0] + 1.0);
  std::vector<double> values{v0_};
  for (std::size_t j = 0; j < slopes_.size(); ++j)
    values.push_back(values.back() + slopes_[j] * (knots_[j + 1] - knots_[j]));
  return PLFunction(knots_, values);
}

TestFunction TestFunction::clamped(double lo, double hi) const { return natural(as_pl().clamped(lo, hi)); }

TestFunction TestFunction::scaled(double c) const {
  TestFunction t = *this;
  t.v0_ *= c;
  for (double& s : t.slopes_) s *= c;
  return t;
}

// ---------------------------------------------------------------- descriptors

FormDescriptor FormDescriptor::make(NearlyClosedSet e, ScaleFunction s, StieltjesMeasure mu) {
  e.require_bounded("form");
  if (!(s.set() == e)) fail(ErrorCode::MismatchedBase, "scale lives on a different E");
  const bool has_mass = !mu.atoms.empty() || !mu.densities.empty() || !mu.indicators.empty();
  if (has_mass && !derive_state_space(mu).qk_satisfied)
    fail(ErrorCode::QKViolated, "speed measure violates (QK)");
  FormDescriptor f{std::move(e), std::move(s), std::move(mu)};
  f.dirichlet_l = !f.e.l_in_E();
  f.dirichlet_r = !f.e.r_in_E();
  return f;
}

FormDescriptor FormDescriptor::natural(const NearlyClosedSet& e) {
  auto mu = StieltjesMeasure::restricted_lebesgue(e);
  for (const auto& p : e.pieces())
    if (p.kind == NearlyClosedSet::Kind::Point) mu.atoms.push_back({p.lo, 1.0});
  return make(e, ScaleFunction::natural(e), std::move(mu));
}

// ---------------------------------------------------------------- domain

DomainVerdict in_domain(const FormDescriptor& form, const TestFunction& f, double tol) {
  using O = DomainVerdict::Outcome;
  require_coordinate_on(f, form.e);
  const double l = form.e.l(), r = form.e.r();
  for (auto [active, j] : {std::pair{form.dirichlet_l, l}, std::pair{form.dirichlet_r, r}}) {
    if (!active) continue;
    const auto v = f(j, tol);
    if (!v.contains(0.0, tol)) {
      std::ostringstream os;
      os << "boundary: f(" << j << ") = " << v.mid() << " != 0 at an excluded endpoint";
      return {O::No, os.str()};
    }
  }
  if (form.s.variant() == ScaleFunction::Variant::Natural) return {O::Yes, "in domain"};

  const auto on_e = f.active_on_E().has_value() ? form.e.as_subset() & *f.active_on_E() : form.e.as_subset();
  bool unknown = false;
  const auto cuts = clip_cuts(f.knots(), l, r);
  if (form.s.variant() == ScaleFunction::Variant::CharSet) {
    const auto& gs = form.s.charset_g();
    if (f.active_on_E() && provably_subset(*f.active_on_E(), gs)) return {O::Yes, "in domain"};
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double a = cuts[i], b = cuts[i + 1];
      if (f.slope_at(0.5 * (a + b)) == 0.0) continue;
      const auto piece = on_e & MeasurableSubset::interval(a, b);
      if (provably_subset(piece, gs)) continue;
      const auto rest = measure_query(piece - gs, tol).value;
      if (rest.lo > 0.0) {
        std::ostringstream os;
        os << "not absolutely continuous w.r.t. sbar: f varies on a set of measure " << rest
           << " in (" << a << ", " << b << ") where sbar is flat";
        return {O::No, os.str()};
      }
      if (rest.hi > tol) unknown = true;
    }
    if (unknown) return {O::Unknown, "could not bound the flat part of sbar"};
    return {O::Yes, "in domain"};
  }
  std::vector<double> all = f.knots();
  for (const auto& seg : form.s.segments()) all.push_back(seg.lo);
  const auto sub = clip_cuts(all, l, r);
  const auto segs = form.s.segments();
  for (std::size_t i = 0; i + 1 < sub.size(); ++i) {
    const double a = sub[i], b = sub[i + 1], mid = 0.5 * (a + b);
    if (f.slope_at(mid) == 0.0) continue;
    if (scale_slope_at(form.s, segs, mid) > kFlat) continue;
    const auto e_part = measure_query(on_e & MeasurableSubset::interval(a, b), tol).value;
    const auto full = measure_query(form.e.as_subset() & MeasurableSubset::interval(a, b), tol).value;
    std::ostringstream os;
    if ((b - a) - full.hi > 0.0 || e_part.lo > 0.0) {
      os << "not absolutely continuous w.r.t. sbar: f varies on (" << a << ", " << b << ") where sbar is flat";
      return {O::No, os.str()};
    }
    if (e_part.hi > tol) unknown = true;
  }
  if (unknown) return {O::Unknown, "could not bound the flat part of sbar"};
  return {O::Yes, "in domain"};
}

// ---------------------------------------------------------------- energy

namespace {

struct JumpSum {
  const FormDescriptor& form;
  const TestFunction& f;
  const TestFunction& g;
  std::vector<double> cuts;  // knots of f, g and breaks of the scale
  std::vector<ScaleSegment> segs;
  double bound_scale;        // Lip(f) Lip(g) / min positive gap slope
  double cutoff;
  EnergyResult* out;

  void explicit_gap(double a, double b) {
    const double df = f.gap_increment(a, b), dg = g.gap_increment(a, b);
    ++out->explicit_gaps;
    if (df == 0.0 || dg == 0.0) return;
    const double c = chord(form.s, a, b);
    if (c <= 0.0) return;  // flat across the gap: outside the domain
    out->jump += Bracket(0.5 * df * dg / c);
  }

  // Stage-n interval [a,b] of generator s.
  void stage(const SVCSet& s, double a, double b, int n) {
    const double rem = s.stage_length(n) - s.stage_mass(n);
    if (!(rem > 0.0)) return;
    if (!has_inner(cuts, a, b)) {
      const double mid = 0.5 * (a + b);
      const double k = scale_slope_at(form.s, segs, mid);
      const double sf = f.slope_at(mid), sg = g.slope_at(mid);
      ++out->aggregated_blocks;
      // Every gap inside gains sf*len and sg*len over a chord k*len.
      if (sf != 0.0 && sg != 0.0 && k > 0.0) out->jump += Bracket(0.5 * sf * sg * rem / k);
      return;
    }
    const double bound = 0.5 * bound_scale * rem;
    if (n >= SVCSet::kMaxStage || bound <= cutoff) {
      out->jump += Bracket(-bound, bound);
      out->tail_bound += bound;
      return;
    }
    const double child = s.stage_length(n + 1);
    explicit_gap(a + child, b - child);
    stage(s, a, a + child, n + 1);
    stage(s, b - child, b, n + 1);
  }
};

}  // namespace

EnergyResult energy_detailed(const FormDescriptor& form, const TestFunction& f, const TestFunction& g, double tol,
                             bool strict) {
  require_coordinate_on(f, form.e);
  require_coordinate_on(g, form.e);
  if (strict) {
    for (const TestFunction* h : {&f, &g}) {
      const auto v = in_domain(form, *h, tol);
      if (v.outcome == DomainVerdict::Outcome::No) fail(ErrorCode::DomainViolation, v.reason);
    }
  }
  EnergyResult out;
  const double l = form.e.l(), r = form.e.r();
  const auto segs = segments_or_empty(form.s);

  // Local part.
  std::vector<double> all = f.knots();
  all.insert(all.end(), g.knots().begin(), g.knots().end());
  for (const auto& seg : segs) all.push_back(seg.lo);
  const auto sub = clip_cuts(all, l, r);
  const auto support = local_support(form, f, g);
  if (!support.is_empty_expression()) {
    const double piece_tol = 0.25 * tol / static_cast<double>(sub.size());
    for (std::size_t i = 0; i + 1 < sub.size(); ++i) {
      const double a = sub[i], b = sub[i + 1], mid = 0.5 * (a + b);
      const double sf = f.slope_at(mid), sg = g.slope_at(mid);
      if (sf == 0.0 || sg == 0.0) continue;
      bool on_chord = false;
      const double k = scale_slope_at(form.s, segs, mid, &on_chord);
      if (on_chord || k <= kFlat) continue;
      out.local += Bracket(0.5 * sf * sg / k) * checked_measure(support, a, b, piece_tol);
    }
  }

  // Jump part.
  std::vector<double> cuts = f.knots();
  cuts.insert(cuts.end(), g.knots().begin(), g.knots().end());
  double kmin = 1.0;
  if (is_pl(form.s)) {
    cuts.insert(cuts.end(), form.s.pl().breaks().begin(), form.s.pl().breaks().end());
    kmin = kInf;
    for (const auto& seg : segs)
      if (seg.slope > kFlat) kmin = std::min(kmin, seg.slope);
  }
  JumpSum js{form, f, g, sorted_unique(std::move(cuts)), segs, f.lipschitz() * g.lipschitz() / kmin,
             std::ldexp(std::max(tol, 1e-300), -24), &out};
  const auto& pieces = form.e.pieces();
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (i > 0 && pieces[i].lo > pieces[i - 1].hi) js.explicit_gap(pieces[i - 1].hi, pieces[i].lo);
    if (pieces[i].kind == NearlyClosedSet::Kind::Generator) {
      const auto& s = *pieces[i].generator;
      js.stage(s, s.base().lo, s.base().hi, 0);
    }
  }

  out.value = out.local + out.jump;
  if (out.value.width() > tol) {
    std::ostringstream os;
    os << "energy bracket " << out.value << " wider than tol " << tol;
    fail(ErrorCode::TolNotAchievable, os.str());
  }
  return out;
}

Bracket energy(const FormDescriptor& form, const TestFunction& f, const TestFunction& g, double tol, bool strict) {
  return energy_detailed(form, f, g, tol, strict).value;
}

std::vector<JumpWeight> jump_weights(const NearlyClosedSet& e, std::size_t max_count) {
  std::vector<JumpWeight> out;
  for (const auto& gap : gaps(e, max_count).gaps) out.push_back({gap, 1.0 / (4.0 * gap.length())});
  return out;
}

// ---------------------------------------------------------------- subspaces

namespace {

// int over I of h'^2 dx and of (dh/dsbar)^2 dsbar, plus the defect prediction
// 1/2 int (dh/dsbar)^2 dnu for natural-coordinate probes.
struct ScaleIntegrals {
  Bracket x_integral;
  Bracket scale_integral;
  std::optional<Bracket> predicted;
};

ScaleIntegrals scale_integrals(const FormDescriptor& child, const TestFunction& h, double tol) {
  ScaleIntegrals out;
  const double l = child.e.l(), r = child.e.r();
  const auto segs = segments_or_empty(child.s);
  std::vector<double> all = h.knots();
  for (const auto& seg : segs) all.push_back(seg.lo);
  const auto sub = clip_cuts(all, l, r);
  const double piece_tol = 0.25 * tol / static_cast<double>(sub.size());
  Bracket pred(0.0);
  for (std::size_t i = 0; i + 1 < sub.size(); ++i) {
    const double a = sub[i], b = sub[i + 1], mid = 0.5 * (a + b);
    const double sigma = h.slope_at(mid);
    if (sigma == 0.0) continue;
    const Bracket s2(sigma * sigma);
    // |A_h cap (a,b)| with A_h the set where h moves.
    const Bracket moving = h.coordinate() ? h.coordinate()->increment(a, b, piece_tol) : Bracket(b - a);
    out.x_integral += s2 * moving;
    switch (child.s.variant()) {
      case ScaleFunction::Variant::Natural:
        out.scale_integral += s2 * moving;
        break;
      case ScaleFunction::Variant::CharSet: {
        auto on_g = child.e.as_subset() & child.s.charset_g();
        if (auto a_h = h.active_on_E(); a_h && !a_h->same_expression(child.s.charset_g())) on_g = on_g & *a_h;
        const double gap_part = (b - a) - measure_query(child.e.as_subset(), Interval{a, b}, piece_tol).value.mid();
        out.scale_integral += s2 * (checked_measure(on_g, a, b, piece_tol) + Bracket(gap_part));
        break;
      }
      case ScaleFunction::Variant::PL: {
        const double k = scale_slope_at(child.s, segs, mid);
        if (k > kFlat) {
          out.scale_integral += s2 * moving / Bracket(k);
          if (!h.coordinate()) {
            const Bracket dnu = defect_cumulative(child.s, b, tol) - defect_cumulative(child.s, a, tol);
            pred += Bracket(0.5 * sigma * sigma / (k * k)) * dnu;
          }
        }
        break;
      }
    }
  }
  if (!h.coordinate()) out.predicted = pred;
  return out;
}

}  // namespace

SubspaceReport verify_subspace(const FormDescriptor& child, const FormDescriptor& parent,
                               const std::vector<TestFunction>& probes, double tol) {
  if (!(child.e == parent.e)) fail(ErrorCode::MismatchedBase, "child and parent live on different E");
  if (parent.s.variant() != ScaleFunction::Variant::Natural)
    fail(ErrorCode::MismatchedBase, "parent must carry the natural scale");
  SubspaceReport rep{is_in_S(child.s, tol), {}, true, tol};
  const bool member = rep.membership.outcome == SVerdict::Outcome::Yes;
  const double etol = 0.25 * tol;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& h = probes[i];
    ProbeRow row{i, in_domain(child, h, etol), in_domain(parent, h, etol), {}, {}, 0.0, {}, {}, std::nullopt, true, ""};
    if (row.child_domain.outcome != DomainVerdict::Outcome::Yes) {
      row.note = "outside the child domain: " + row.child_domain.reason;
      rep.rows.push_back(std::move(row));
      continue;
    }
    row.child_energy = energy(child, h, h, etol);
    row.parent_energy = energy(parent, h, h, etol);
    row.gap = std::abs(row.child_energy.mid() - row.parent_energy.mid());
    const auto si = scale_integrals(child, h, etol);
    row.scale_integral = si.scale_integral;
    row.x_integral = si.x_integral;
    row.predicted = si.predicted;
    const bool parent_ok = row.parent_domain.outcome == DomainVerdict::Outcome::Yes;
    const bool identity = std::abs(si.scale_integral.mid() - si.x_integral.mid()) <= tol;
    row.pass = parent_ok && row.gap <= tol && identity;
    std::ostringstream note;
    if (!parent_ok) note << "not in the parent domain; ";
    if (row.gap > tol) note << "energies differ by " << row.gap << "; ";
    if (!identity) note << "int (dh/dsbar)^2 dsbar != int h'^2 dx; ";
    if (row.predicted) {
      const double measured = row.parent_energy.mid() - row.child_energy.mid();
      const double miss = std::abs(measured - row.predicted->mid());
      note << (miss <= tol ? "defect prediction matched" : "defect prediction missed") << " (parent - child = "
           << measured << ", predicted " << row.predicted->mid() << ")";
    }
    row.note = note.str();
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(std::move(row));
  }
  rep.pass = rep.pass && member;
  return rep;
}

std::string to_csv(const SubspaceReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "probe,lhs,rhs,gap,predicted,verdict\n";
  for (const auto& row : report.rows) {
    os << row.index << ',' << row.child_energy.mid() << ',' << row.parent_energy.mid() << ',' << row.gap << ',';
    if (row.predicted) os << row.predicted->mid();
    const bool skipped = row.child_domain.outcome != DomainVerdict::Outcome::Yes;
    os << ',' << (skipped ? "SKIP" : row.pass ? "PASS" : "FAIL") << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------- trace identity

TraceIdentity trace_energy_identity(const NearlyClosedSet& e, const PLFunction& f, double tol) {
  e.require_bounded("trace identity");
  const FormDescriptor form{e, ScaleFunction::natural(e), StieltjesMeasure{}};
  const auto tf = TestFunction::natural(f);
  TraceIdentity t;
  t.lhs = energy(form, tf, tf, tol);

  const bool finite = std::none_of(e.pieces().begin(), e.pieces().end(),
                                   [](const auto& p) { return p.kind == NearlyClosedSet::Kind::Generator; });
  if (finite) {
    // Hf is itself piecewise linear: f's breaks inside E plus piece endpoints.
    std::vector<double> breaks;
    for (const auto& p : e.pieces()) {
      breaks.push_back(p.lo);
      breaks.push_back(p.hi);
      for (double x : f.breaks())
        if (x > p.lo && x < p.hi) breaks.push_back(x);
    }
    breaks = sorted_unique(std::move(breaks));
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      const double d = f(breaks[i + 1]) - f(breaks[i]);
      sum += d * d / (breaks[i + 1] - breaks[i]);
    }
    t.rhs = Bracket(0.5 * sum);
  } else {
    // Local part by pieces of f, gap part by explicit enumeration.
    Bracket local(0.0);
    const auto& b = f.breaks();
    for (std::size_t i = 0; i < f.pieces(); ++i) {
      const double k = f.slope(i);
      if (k == 0.0) continue;
      local += Bracket(0.5 * k * k) * checked_measure(e.as_subset(), b[i], b[i + 1], 0.25 * tol / f.pieces());
    }
    const double lip = f.lipschitz();
    const auto g = gaps(e, std::size_t{1} << 16);
    double jump = 0.0;
    for (const auto& gap : g.gaps) {
      const double d = f(gap.hi) - f(gap.lo);
      jump += 0.5 * d * d / gap.length();
    }
    const double tail = 0.5 * lip * lip * g.tail;
    t.rhs = local + Bracket(jump, jump + tail);
  }
  t.gap = std::abs(t.lhs.mid() - t.rhs.mid());
  return t;
}

std::vector<TestFunction> random_probes(const FormDescriptor& form, std::size_t n, std::uint64_t seed,
                                        std::size_t inner_knots) {
  form.e.require_bounded("random_probes");
  const double l = form.e.l(), r = form.e.r();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(l, r), slope(-2.0, 2.0);
  const bool charset = form.s.variant() == ScaleFunction::Variant::CharSet;
  std::vector<TestFunction> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> knots{l, r};
    for (std::size_t k = 0; k < inner_knots; ++k) knots.push_back(pos(rng));
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    std::vector<double> slopes;
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) slopes.push_back(slope(rng));
    const double v0 = slope(rng);
    if (charset) {
      out.push_back(TestFunction::in_scale(form.s, std::move(knots), std::move(slopes), v0));
    } else {
      std::vector<double> values{v0};
      for (std::size_t k = 0; k < slopes.size(); ++k) values.push_back(values.back() + slopes[k] * (knots[k + 1] - knots[k]));
      out.push_back(TestFunction::natural(PLFunction(std::move(knots), std::move(values))));
    }
  }
  return out;
}

}  // namespace quasidiff
