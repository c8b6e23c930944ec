#include "quasidiff/sets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <queue>
#include <sstream>

#include "quasidiff/errors.hpp"

namespace quasidiff {

// ---------------------------------------------------------------- schedule

double RemovalSchedule::rho(int n) const { return coef * std::pow(ratio, -static_cast<double>(n)); }

double RemovalSchedule::removed_fraction() const { return coef / (ratio - 2.0); }

double RemovalSchedule::removed_fraction_after(int depth) const {
  return removed_fraction() * std::pow(2.0 / ratio, static_cast<double>(depth));
}

std::string RemovalSchedule::to_string() const {
  char buf[96];
  if (coef == 1.0)
    std::snprintf(buf, sizeof buf, "%.17g^-n", ratio);
  else
    std::snprintf(buf, sizeof buf, "%.17g*%.17g^-n", coef, ratio);
  return buf;
}

RemovalSchedule RemovalSchedule::parse(const std::string& text) {
  RemovalSchedule s;
  const auto caret = text.find("^-n");
  if (caret == std::string::npos || caret + 3 != text.size())
    fail(ErrorCode::InvalidInput, "removal schedule must look like 'q^-n' or 'c*q^-n': " + text);
  const std::string head = text.substr(0, caret);
  const auto star = head.find('*');
  try {
    if (star == std::string::npos) {
      s.ratio = std::stod(head);
    } else {
      s.coef = std::stod(head.substr(0, star));
      s.ratio = std::stod(head.substr(star + 1));
    }
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidInput, "cannot parse removal schedule: " + text);
  }
  return s;
}

// ---------------------------------------------------------------- SVC

SVCSet::SVCSet(Interval base, RemovalSchedule schedule) : base_(base), schedule_(schedule) {
  if (!(std::isfinite(base.lo) && std::isfinite(base.hi) && base.lo < base.hi))
    fail(ErrorCode::InvalidInput, "SVC base must be a finite interval with positive length");
  if (!(schedule.ratio > 2.0 && schedule.coef > 0.0))
    fail(ErrorCode::InvalidInput, "SVC schedule needs ratio > 2 and coef > 0");
  const double removed = schedule.removed_fraction();
  if (removed > 1.0 + 1e-12)
    fail(ErrorCode::InvalidInput, "SVC removal series exceeds the base length: " + schedule.to_string());
  // 2^n l_n = (1 - R) + R (2/q)^n, written without cancellation.
  const double keep = std::max(0.0, (schedule.ratio - 2.0 - schedule.coef) / (schedule.ratio - 2.0));
  stage_len_.resize(kMaxStage + 1);
  for (int n = 0; n <= kMaxStage; ++n) {
    const double t = std::pow(2.0 / schedule.ratio, n);
    stage_len_[n] = std::ldexp(keep + std::min(removed, 1.0) * t, -n);
    if (!(stage_len_[n] > 0.0)) fail(ErrorCode::InvalidInput, "SVC stage intervals degenerate");
  }
}

double SVCSet::measure() const {
  const double keep = (schedule_.ratio - 2.0 - schedule_.coef) / (schedule_.ratio - 2.0);
  return std::max(0.0, keep) * base_.length();
}

double SVCSet::stage_length(int n) const {
  return stage_len_[std::clamp(n, 0, kMaxStage)] * base_.length();
}

double SVCSet::gap_length(int n) const { return schedule_.rho(n) * base_.length(); }

double SVCSet::stage_mass(int n) const { return std::ldexp(measure(), -std::min(n, 1000)); }

double SVCSet::total_gap_length() const {
  return std::min(1.0, schedule_.removed_fraction()) * base_.length();
}

SVCSet SVCSet::affine(double scale, double shift) const {
  return SVCSet({scale * base_.lo + shift, scale * base_.hi + shift}, schedule_);
}

std::optional<Interval> SVCSet::gap_containing(double x, int depth) const {
  double a = base_.lo, b = base_.hi;
  if (x <= a || x >= b) return std::nullopt;
  for (int n = 1; n <= std::min(depth, kMaxStage); ++n) {
    const double child = stage_length(n);
    const double p = a + child, q = b - child;
    if (x > p && x < q) return Interval{p, q};
    if (x <= p) {
      b = p;
    } else {
      a = q;
    }
    if (x == a || x == b) return std::nullopt;
  }
  return std::nullopt;
}

Tri SVCSet::contains(double x, int depth) const {
  double a = base_.lo, b = base_.hi;
  if (x < a || x > b) return Tri::Out;
  for (int n = 1;; ++n) {
    if (x == a || x == b) return Tri::In;
    if (n > std::min(depth, kMaxStage)) return Tri::Unknown;
    const double child = stage_length(n);
    const double p = a + child, q = b - child;
    if (x > p && x < q) return Tri::Out;
    if (x <= p) {
      b = p;
    } else {
      a = q;
    }
  }
}

// ---------------------------------------------------------------- ubiquitous

UbiquitousSet::UbiquitousSet(Interval base, double budget) : base_(base), budget_(budget) {
  if (!(std::isfinite(base.lo) && std::isfinite(base.hi) && base.lo < base.hi))
    fail(ErrorCode::InvalidInput, "ubiquitous base must be a finite interval with positive length");
  if (!(budget > 0.0 && budget < 1.0)) fail(ErrorCode::InvalidInput, "ubiquitous budget must lie in (0,1)");
}

// 1 - beta_k = (1 - b)^{2^{-(k+1)}}, so prod_k (1 - beta_k) = 1 - b.
double UbiquitousSet::level_fraction(int k) const {
  return -std::expm1(std::ldexp(std::log1p(-budget_), -(k + 1)));
}

double UbiquitousSet::fill_fraction(int k) const { return -std::expm1(std::ldexp(std::log1p(-budget_), -k)); }

SVCSet UbiquitousSet::level_generator(Interval g, int k) const {
  return SVCSet(g, RemovalSchedule{2.0 * (1.0 - level_fraction(k)), 4.0});
}

UbiquitousSet UbiquitousSet::affine(double scale, double shift) const {
  return UbiquitousSet({scale * base_.lo + shift, scale * base_.hi + shift}, budget_);
}

// ---------------------------------------------------------------- approximation

namespace {

using Node = MeasurableSubset::Node;
using NodePtr = MeasurableSubset::NodePtr;
using Composite = MeasurableSubset::Composite;
using Op = MeasurableSubset::Op;

constexpr int kMaxLevel = 40;

constexpr std::array<double, SVCSet::kMaxStage + 2> kPow2 = [] {
  std::array<double, SVCSet::kMaxStage + 2> p{};
  double v = 1.0;
  for (auto& x : p) {
    x = v;
    v *= 0.5;
  }
  return p;
}();

// Uniform bins of width h over a window. Every node fills one mass bracket
// per bin, so combination never splits a cell.
// Bins of width at most h over a window, also cut at every breakpoint of the
// expression so interval leaves always cover whole bins. Every node fills one
// mass bracket per bin, so combination never splits a cell.
struct Grid {
  Interval w;
  std::vector<double> edges;
  std::size_t n;
  double fine;  // pieces shorter than this are spread instead of refined

  Grid(Interval win, double h, const std::vector<double>& breaks) : w(win) {
    const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(w.length() / h - 1e-9)));
    const double step = w.length() / static_cast<double>(k);
    edges.reserve(k + 1 + breaks.size());
    for (std::size_t i = 0; i < k; ++i) edges.push_back(w.lo + step * static_cast<double>(i));
    edges.push_back(w.hi);
    for (double x : breaks)
      if (x > w.lo && x < w.hi) edges.push_back(x);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    n = edges.size() - 1;
    fine = std::ldexp(step, -24);
  }
  double edge(std::size_t i) const { return edges[i]; }
  // Bin holding the left end of [a,b); a >= w.lo.
  std::size_t first(double a) const {
    const auto it = std::upper_bound(edges.begin(), edges.end(), a);
    const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - edges.begin() - 1));
    return std::min(i, n - 1);
  }
  // Bin holding the right end of (a,b]; b <= w.hi.
  std::size_t last(double b) const {
    const auto it = std::lower_bound(edges.begin(), edges.end(), b);
    const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - edges.begin() - 1));
    return std::min(i, n - 1);
  }
};

void collect_breaks(const Node& node, std::vector<double>& out) {
  if (const auto* iv = std::get_if<std::vector<Interval>>(&node.value)) {
    for (const auto& p : *iv) {
      out.push_back(p.lo);
      out.push_back(p.hi);
    }
  } else if (const auto* s = std::get_if<SVCSet>(&node.value)) {
    out.push_back(s->base().lo);
    out.push_back(s->base().hi);
  } else if (const auto* u = std::get_if<UbiquitousSet>(&node.value)) {
    out.push_back(u->base().lo);
    out.push_back(u->base().hi);
  } else {
    for (const auto& c : std::get<Composite>(node.value).operands) collect_breaks(*c, out);
  }
}

struct Bins {
  std::vector<double> lo, hi;          // mass bracket per bin
  std::vector<double> mom_lo, mom_hi;  // first-moment bracket per bin
  explicit Bins(std::size_t n) : lo(n, 0.0), hi(n, 0.0), mom_lo(n, 0.0), mom_hi(n, 0.0) {}
  void add(std::size_t i, Bracket m, Bracket mom) {
    lo[i] += m.lo;
    hi[i] += m.hi;
    mom_lo[i] += mom.lo;
    mom_hi[i] += mom.hi;
  }
};

// Mass m known exactly on [a,b] and symmetric about the midpoint: add it if
// [a,b] sits in one bin, otherwise report false so the caller refines.
// Outside the window nothing is added.
bool place_exact(const Grid& g, Bins& bins, double a, double b, double m) {
  if (b <= g.w.lo || a >= g.w.hi || m <= 0.0) return true;
  if (a < g.w.lo || b > g.w.hi) return false;
  const std::size_t i = g.first(a);
  if (g.last(b) != i) return false;
  const double mom = m * (0.5 * (a + b));
  bins.add(i, Bracket(m), Bracket(mom));
  return true;
}

// Last resort for unresolved pieces: Frechet bounds per overlapped bin.
void place_spread(const Grid& g, Bins& bins, double a, double b, double m) {
  const double lo = std::max(a, g.w.lo), hi = std::min(b, g.w.hi);
  if (!(hi > lo) || m <= 0.0) return;
  for (std::size_t i = g.first(lo); i <= g.last(hi); ++i) {
    const double x0 = std::max(lo, g.edge(i)), x1 = std::min(hi, g.edge(i + 1));
    const double ov = x1 - x0;
    if (ov <= 0.0) continue;
    const Bracket part{std::max(0.0, m - ((b - a) - ov)), std::min(m, ov)};
    bins.add(i, part, part * Bracket{x0, x1});
  }
}

void place_interval(const Grid& g, Bins& bins, double a, double b) {
  const double lo = std::max(a, g.w.lo), hi = std::min(b, g.w.hi);
  if (!(hi > lo)) return;
  for (std::size_t i = g.first(lo); i <= g.last(hi); ++i) {
    const double x0 = std::max(lo, g.edge(i)), x1 = std::min(hi, g.edge(i + 1));
    const double ov = x1 - x0;
    if (ov <= 0.0) continue;
    bins.add(i, Bracket(ov), Bracket(ov * 0.5 * (x0 + x1)));
  }
}

void bin_svc(const SVCSet& s, double a, double b, int n, const Grid& g, Bins& bins) {
  if (b <= g.w.lo || a >= g.w.hi) return;
  const double m = s.stage_mass(n);
  if (place_exact(g, bins, a, b, m)) return;
  if (n >= SVCSet::kMaxStage || b - a < g.fine) return place_spread(g, bins, a, b, m);
  const double child = s.stage_length(n + 1);
  bin_svc(s, a, a + child, n + 1, g, bins);
  bin_svc(s, b - child, b, n + 1, g, bins);
}

// Level-k generator on a base of length L keeps beta_k: its stage-n intervals
// have length L 2^{-n} (beta + (1 - beta) 2^{-n}) and mass L beta 2^{-n}.
struct LevelShape {
  double L, beta, next_fill;
  double length(int n) const { return L * kPow2[n] * (beta + (1.0 - beta) * kPow2[n]); }
  double core(int n) const { return L * beta * kPow2[n]; }
};

// Fractions per level, computed once per set.
struct LevelTable {
  std::array<double, kMaxLevel + 2> beta, fill;
  explicit LevelTable(const UbiquitousSet& u) {
    for (int k = 0; k <= kMaxLevel + 1; ++k) {
      beta[k] = u.level_fraction(k);
      fill[k] = u.fill_fraction(k);
    }
  }
};

void bin_ubiquitous(const LevelTable& u, Interval base, int k, const Grid& g, Bins& bins);

void bin_ubiquitous_stage(const LevelTable& u, const LevelShape& s, int k, double a, double b, int n,
                          const Grid& g, Bins& bins) {
  if (b <= g.w.lo || a >= g.w.hi) return;
  const double core = s.core(n);
  const double m = core + ((b - a) - core) * s.next_fill;
  if (place_exact(g, bins, a, b, m)) return;
  if (n >= SVCSet::kMaxStage || b - a < g.fine) return place_spread(g, bins, a, b, m);
  const double child = s.length(n + 1);
  const double p = a + child, q = b - child;
  bin_ubiquitous_stage(u, s, k, a, p, n + 1, g, bins);
  bin_ubiquitous(u, {p, q}, k + 1, g, bins);
  bin_ubiquitous_stage(u, s, k, q, b, n + 1, g, bins);
}

void bin_ubiquitous(const LevelTable& u, Interval base, int k, const Grid& g, Bins& bins) {
  if (base.hi <= g.w.lo || base.lo >= g.w.hi) return;
  const double m = u.fill[k] * base.length();
  if (place_exact(g, bins, base.lo, base.hi, m)) return;
  if (k >= kMaxLevel || base.length() < g.fine) return place_spread(g, bins, base.lo, base.hi, m);
  const LevelShape s{base.length(), u.beta[k], u.fill[k + 1]};
  bin_ubiquitous_stage(u, s, k, base.lo, base.hi, 0, g, bins);
}

void combine(Bins& acc, const Bins& b, Op op, const Grid& g) {
  for (std::size_t i = 0; i < g.n; ++i) {
    const double len = g.edge(i + 1) - g.edge(i);
    const bool a_full = acc.lo[i] >= len, a_empty = acc.hi[i] <= 0.0;
    const bool b_full = b.lo[i] >= len, b_empty = b.hi[i] <= 0.0;
    auto take_b = [&] {
      acc.lo[i] = b.lo[i];
      acc.hi[i] = b.hi[i];
      acc.mom_lo[i] = b.mom_lo[i];
      acc.mom_hi[i] = b.mom_hi[i];
    };
    auto set_empty = [&] { acc.lo[i] = acc.hi[i] = acc.mom_lo[i] = acc.mom_hi[i] = 0.0; };
    // Cases where one operand decides the bin keep the exact moment.
    switch (op) {
      case Op::Union:
        if (b_empty || a_full) continue;
        if (a_empty || b_full) {
          take_b();
          continue;
        }
        break;
      case Op::Intersection:
        if (b_full || a_empty) continue;
        if (a_full || b_empty) {
          if (b_empty) set_empty(); else take_b();
          continue;
        }
        break;
      case Op::Difference:
        if (b_empty || a_empty) continue;
        if (b_full) {
          set_empty();
          continue;
        }
        break;
    }
    const double alo = acc.lo[i], ahi = acc.hi[i];
    switch (op) {
      case Op::Union:
        acc.lo[i] = std::max(alo, b.lo[i]);
        acc.hi[i] = std::min(len, ahi + b.hi[i]);
        break;
      case Op::Intersection:
        acc.lo[i] = std::max(0.0, alo + b.lo[i] - len);
        acc.hi[i] = std::min(ahi, b.hi[i]);
        break;
      case Op::Difference:
        acc.lo[i] = std::max(0.0, alo - b.hi[i]);
        acc.hi[i] = std::min(ahi, len - b.lo[i]);
        break;
    }
    const Bracket mom = Bracket{acc.lo[i], std::max(acc.lo[i], acc.hi[i])} * Bracket{g.edge(i), g.edge(i + 1)};
    acc.mom_lo[i] = mom.lo;
    acc.mom_hi[i] = mom.hi;
  }
}

Bins bin_node(const Node& node, const Grid& g) {
  Bins out(g.n);
  if (const auto* iv = std::get_if<std::vector<Interval>>(&node.value)) {
    for (const auto& p : *iv) place_interval(g, out, p.lo, p.hi);
  } else if (const auto* s = std::get_if<SVCSet>(&node.value)) {
    if (!s->null()) bin_svc(*s, s->base().lo, s->base().hi, 0, g, out);
  } else if (const auto* u = std::get_if<UbiquitousSet>(&node.value)) {
    bin_ubiquitous(LevelTable(*u), u->base(), 0, g, out);
  } else {
    const auto& c = std::get<Composite>(node.value);
    if (c.operands.empty()) return out;
    out = bin_node(*c.operands.front(), g);
    for (std::size_t i = 1; i < c.operands.size(); ++i) combine(out, bin_node(*c.operands[i], g), c.op, g);
  }
  return out;
}

std::vector<Cell> approximate_node(const Node& node, const Interval& w, double h, std::vector<double> breaks) {
  collect_breaks(node, breaks);
  const Grid g(w, h, breaks);
  const Bins bins = bin_node(node, g);
  std::vector<Cell> out;
  for (std::size_t i = 0; i < g.n; ++i) {
    const double len = g.edge(i + 1) - g.edge(i);
    const double hi = std::min(len, bins.hi[i]);
    if (hi <= 0.0) continue;
    out.push_back({g.edge(i), g.edge(i + 1), std::clamp(bins.lo[i], 0.0, hi), hi, bins.mom_lo[i], bins.mom_hi[i]});
  }
  return out;
}

Tri contains_ubiquitous(const UbiquitousSet& u, Interval g, int k, double x, int depth) {
  if (x < g.lo || x > g.hi) return Tri::Out;
  if (k >= kMaxLevel) return Tri::Unknown;
  const SVCSet s = u.level_generator(g, k);
  if (const auto gap = s.gap_containing(x, depth)) {
    // Stage of the gap is at most depth; spend one unit per level.
    if (depth <= 1) return Tri::Unknown;
    return contains_ubiquitous(u, *gap, k + 1, x, depth - 1);
  }
  return s.contains(x, depth) == Tri::In ? Tri::In : Tri::Unknown;
}

Tri contains_node(const Node& node, double x, int depth) {
  if (const auto* iv = std::get_if<std::vector<Interval>>(&node.value)) {
    for (const auto& p : *iv)
      if (x >= p.lo && x <= p.hi) return Tri::In;
    return Tri::Out;
  }
  if (const auto* s = std::get_if<SVCSet>(&node.value)) return s->contains(x, depth);
  if (const auto* u = std::get_if<UbiquitousSet>(&node.value))
    return contains_ubiquitous(*u, u->base(), 0, x, depth);
  const auto& c = std::get<Composite>(node.value);
  if (c.operands.empty()) return Tri::Out;
  Tri acc = contains_node(*c.operands.front(), x, depth);
  for (std::size_t i = 1; i < c.operands.size(); ++i) {
    const Tri t = contains_node(*c.operands[i], x, depth);
    switch (c.op) {
      case Op::Union:
        if (acc == Tri::In || t == Tri::In)
          acc = Tri::In;
        else if (acc == Tri::Out && t == Tri::Out)
          acc = Tri::Out;
        else
          acc = Tri::Unknown;
        break;
      case Op::Intersection:
        if (acc == Tri::Out || t == Tri::Out)
          acc = Tri::Out;
        else if (acc == Tri::In && t == Tri::In)
          acc = Tri::In;
        else
          acc = Tri::Unknown;
        break;
      case Op::Difference:
        if (acc == Tri::Out || t == Tri::In)
          acc = Tri::Out;
        else if (acc == Tri::In && t == Tri::Out)
          acc = Tri::In;
        else
          acc = Tri::Unknown;
        break;
    }
  }
  return acc;
}

std::optional<Interval> hull_node(const Node& node) {
  if (const auto* iv = std::get_if<std::vector<Interval>>(&node.value)) {
    if (iv->empty()) return std::nullopt;
    return Interval{iv->front().lo, iv->back().hi};
  }
  if (const auto* s = std::get_if<SVCSet>(&node.value)) return s->base();
  if (const auto* u = std::get_if<UbiquitousSet>(&node.value)) return u->base();
  const auto& c = std::get<Composite>(node.value);
  if (c.operands.empty()) return std::nullopt;
  if (c.op == Op::Difference) return hull_node(*c.operands.front());
  std::optional<Interval> acc = hull_node(*c.operands.front());
  for (std::size_t i = 1; i < c.operands.size(); ++i) {
    const auto h = hull_node(*c.operands[i]);
    if (c.op == Op::Union) {
      if (!acc)
        acc = h;
      else if (h)
        acc = Interval{std::min(acc->lo, h->lo), std::max(acc->hi, h->hi)};
    } else {
      if (!acc || !h) return std::nullopt;
      const Interval x{std::max(acc->lo, h->lo), std::min(acc->hi, h->hi)};
      if (x.lo > x.hi) return std::nullopt;
      acc = x;
    }
  }
  return acc;
}

NodePtr affine_node(const NodePtr& node, double scale, double shift) {
  auto out = std::make_shared<Node>();
  if (const auto* iv = std::get_if<std::vector<Interval>>(&node->value)) {
    std::vector<Interval> m;
    for (const auto& p : *iv) m.push_back({scale * p.lo + shift, scale * p.hi + shift});
    out->value = std::move(m);
  } else if (const auto* s = std::get_if<SVCSet>(&node->value)) {
    out->value = s->affine(scale, shift);
  } else if (const auto* u = std::get_if<UbiquitousSet>(&node->value)) {
    out->value = u->affine(scale, shift);
  } else {
    const auto& c = std::get<Composite>(node->value);
    Composite m{c.op, {}};
    for (const auto& o : c.operands) m.operands.push_back(affine_node(o, scale, shift));
    out->value = std::move(m);
  }
  return out;
}

bool same_node(const Node& a, const Node& b) {
  if (a.value.index() != b.value.index()) return false;
  if (const auto* iv = std::get_if<std::vector<Interval>>(&a.value))
    return *iv == std::get<std::vector<Interval>>(b.value);
  if (const auto* s = std::get_if<SVCSet>(&a.value)) return *s == std::get<SVCSet>(b.value);
  if (const auto* u = std::get_if<UbiquitousSet>(&a.value)) return *u == std::get<UbiquitousSet>(b.value);
  const auto& ca = std::get<Composite>(a.value);
  const auto& cb = std::get<Composite>(b.value);
  if (ca.op != cb.op || ca.operands.size() != cb.operands.size()) return false;
  for (std::size_t i = 0; i < ca.operands.size(); ++i)
    if (!same_node(*ca.operands[i], *cb.operands[i])) return false;
  return true;
}

std::vector<Interval> normalize(std::vector<Interval> v) {
  for (const auto& p : v)
    if (!(p.lo <= p.hi) || !std::isfinite(p.lo) || !std::isfinite(p.hi))
      fail(ErrorCode::InvalidInput, "measurable intervals must be finite with lo <= hi");
  std::sort(v.begin(), v.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  std::vector<Interval> out;
  for (const auto& p : v) {
    if (!out.empty() && p.lo <= out.back().hi)
      out.back().hi = std::max(out.back().hi, p.hi);
    else
      out.push_back(p);
  }
  return out;
}

MeasurableSubset make_composite(Op op, std::vector<NodePtr> operands) {
  auto n = std::make_shared<Node>();
  n->value = Composite{op, std::move(operands)};
  return MeasurableSubset(std::move(n));
}

}  // namespace

// ---------------------------------------------------------------- MeasurableSubset

MeasurableSubset::MeasurableSubset() : node_(std::make_shared<Node>(Node{std::vector<Interval>{}})) {}

MeasurableSubset MeasurableSubset::interval(double lo, double hi) { return intervals({{lo, hi}}); }

MeasurableSubset MeasurableSubset::intervals(std::vector<Interval> pieces) {
  return MeasurableSubset(std::make_shared<Node>(Node{normalize(std::move(pieces))}));
}

MeasurableSubset MeasurableSubset::svc(SVCSet s) { return MeasurableSubset(std::make_shared<Node>(Node{std::move(s)})); }

MeasurableSubset MeasurableSubset::ubiquitous(UbiquitousSet u) {
  return MeasurableSubset(std::make_shared<Node>(Node{std::move(u)}));
}

MeasurableSubset operator|(const MeasurableSubset& a, const MeasurableSubset& b) {
  if (a.is_empty_expression()) return b;
  if (b.is_empty_expression() || a.same_expression(b)) return a;
  return make_composite(Op::Union, {a.node_ptr(), b.node_ptr()});
}

MeasurableSubset operator&(const MeasurableSubset& a, const MeasurableSubset& b) {
  if (a.is_empty_expression() || b.is_empty_expression()) return {};
  if (a.same_expression(b)) return a;
  return make_composite(Op::Intersection, {a.node_ptr(), b.node_ptr()});
}

MeasurableSubset operator-(const MeasurableSubset& a, const MeasurableSubset& b) {
  if (a.is_empty_expression()) return {};
  if (b.is_empty_expression()) return a;
  if (a.same_expression(b)) return {};
  return make_composite(Op::Difference, {a.node_ptr(), b.node_ptr()});
}

MeasurableSubset MeasurableSubset::unite(const std::vector<MeasurableSubset>& parts) {
  std::vector<NodePtr> ops;
  for (const auto& p : parts)
    if (!p.is_empty_expression()) ops.push_back(p.node_ptr());
  if (ops.empty()) return {};
  if (ops.size() == 1) return MeasurableSubset(ops.front());
  return make_composite(Op::Union, std::move(ops));
}

std::optional<Interval> MeasurableSubset::hull() const { return hull_node(*node_); }

bool MeasurableSubset::is_empty_expression() const {
  const auto* iv = std::get_if<std::vector<Interval>>(&node_->value);
  return iv && iv->empty();
}

std::vector<Cell> MeasurableSubset::approximate(Interval window, double h, const std::vector<double>& breaks) const {
  return approximate_node(*node_, window, h, breaks);
}

Tri MeasurableSubset::contains(double x, int depth) const { return contains_node(*node_, x, depth); }

MeasurableSubset MeasurableSubset::affine(double scale, double shift) const {
  if (!(scale > 0.0)) fail(ErrorCode::InvalidInput, "affine set maps need a positive scale");
  return MeasurableSubset(affine_node(node_, scale, shift));
}

bool MeasurableSubset::same_expression(const MeasurableSubset& o) const { return same_node(*node_, *o.node_); }

Bracket lebesgue_measure(const MeasurableSubset& a, double tol) {
  const auto h = a.hull();
  if (!h || !(h->hi > h->lo)) return Bracket(0.0);
  return lebesgue_measure(a, *h, tol);
}

MeasureQuery measure_query(const MeasurableSubset& a, Interval window, double tol) {
  if (!(tol > 0.0)) fail(ErrorCode::InvalidInput, "measure tolerance must be positive");
  if (!(window.hi > window.lo)) return {Bracket(0.0), true};
  constexpr std::size_t kCellBudget = 1u << 18;
  double h = window.length();
  Bracket best{0.0, window.length()};
  for (int iter = 0; iter < 64; ++iter) {
    const auto cells = a.approximate(window, h);
    Bracket sum(0.0);
    for (const auto& c : cells) sum += Bracket(c.mass_lo, c.mass_hi);
    sum.lo = std::max(0.0, sum.lo);
    sum.hi = std::min(window.length(), sum.hi);
    best = {std::max(best.lo, sum.lo), std::min(best.hi, sum.hi)};
    if (best.width() <= 2.0 * tol) return {best, true};
    if (window.length() / h >= static_cast<double>(kCellBudget)) break;
    // Bin brackets shrink at most linearly in h; give up once even a 16-fold
    // better rate could not reach tol within the budget.
    const double h_min = window.length() / static_cast<double>(kCellBudget);
    if (iter >= 4 && best.width() * (h_min / h) > 32.0 * tol) break;
    h *= 0.5;
  }
  return {best, false};
}

Bracket lebesgue_measure(const MeasurableSubset& a, Interval window, double tol) {
  const auto q = measure_query(a, window, tol);
  if (q.converged) return q.value;
  std::ostringstream os;
  os << "measure bracket " << q.value << " wider than 2*tol=" << 2 * tol;
  fail(ErrorCode::TolNotAchievable, os.str());
}

MeasureQuery measure_query(const MeasurableSubset& a, double tol) {
  const auto h = a.hull();
  if (!h || !(h->hi > h->lo)) return {Bracket(0.0), true};
  return measure_query(a, *h, tol);
}

namespace {

bool covered_by_intervals(const Interval& h, const std::vector<Interval>& pieces) {
  for (const auto& p : pieces)
    if (p.lo <= h.lo && h.hi <= p.hi) return true;
  return false;
}

bool subset_node(const MeasurableSubset::NodePtr& a, const MeasurableSubset::NodePtr& b) {
  using Composite = MeasurableSubset::Composite;
  const MeasurableSubset sa(a), sb(b);
  if (sa.is_empty_expression() || sa.same_expression(sb)) return true;
  const auto* ca = std::get_if<Composite>(&a->value);
  const auto* cb = std::get_if<Composite>(&b->value);
  if (ca) {
    switch (ca->op) {
      case Op::Union:
        if (std::all_of(ca->operands.begin(), ca->operands.end(), [&](const auto& o) { return subset_node(o, b); }))
          return true;
        break;
      case Op::Intersection:
        if (std::any_of(ca->operands.begin(), ca->operands.end(), [&](const auto& o) { return subset_node(o, b); }))
          return true;
        break;
      case Op::Difference:
        if (subset_node(ca->operands.front(), b)) return true;
        break;
    }
  }
  if (cb) {
    switch (cb->op) {
      case Op::Union:
        return std::any_of(cb->operands.begin(), cb->operands.end(), [&](const auto& o) { return subset_node(a, o); });
      case Op::Intersection:
        return std::all_of(cb->operands.begin(), cb->operands.end(), [&](const auto& o) { return subset_node(a, o); });
      case Op::Difference:
        return false;
    }
  }
  if (const auto* ivb = std::get_if<std::vector<Interval>>(&b->value)) {
    if (const auto* iva = std::get_if<std::vector<Interval>>(&a->value))
      return std::all_of(iva->begin(), iva->end(), [&](const Interval& i) { return covered_by_intervals(i, *ivb); });
    const auto h = sa.hull();
    return !h || covered_by_intervals(*h, *ivb);
  }
  return false;
}

}  // namespace

bool provably_subset(const MeasurableSubset& a, const MeasurableSubset& b) {
  return subset_node(a.node_ptr(), b.node_ptr());
}

SetRelation ae_compare(const MeasurableSubset& a, const MeasurableSubset& b, double tol) {
  const Bracket d = lebesgue_measure((a - b) | (b - a), tol);
  if (d.hi < tol) return SetRelation::Equal;
  if (d.lo > 0.0) return SetRelation::Different;
  return SetRelation::Unknown;
}

// ---------------------------------------------------------------- NearlyClosedSet

NearlyClosedSet::NearlyClosedSet(std::vector<Piece> pieces, bool l_in_E, bool r_in_E)
    : pieces_(std::move(pieces)), l_in_E_(l_in_E), r_in_E_(r_in_E) {
  if (pieces_.empty()) fail(ErrorCode::InvalidInput, "a nearly closed set needs at least one piece");
  std::sort(pieces_.begin(), pieces_.end(), [](const Piece& a, const Piece& b) { return a.lo < b.lo; });
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto& p = pieces_[i];
    switch (p.kind) {
      case Kind::Interval:
        if (!(p.lo < p.hi)) fail(ErrorCode::InvalidInput, "interval pieces need c < d");
        if ((std::isinf(p.lo) && i != 0) || (std::isinf(p.hi) && i + 1 != pieces_.size()))
          fail(ErrorCode::InvalidInput, "only the outermost pieces may be unbounded");
        break;
      case Kind::Point:
        if (!std::isfinite(p.lo) || p.lo != p.hi) fail(ErrorCode::InvalidInput, "point pieces must be finite");
        break;
      case Kind::Generator:
        if (!p.generator) fail(ErrorCode::InvalidInput, "generator piece without generator");
        break;
    }
    if (i > 0) {
      const auto& q = pieces_[i - 1];
      // Generator pieces may touch a neighbour, as in periodic Cantor unions.
      const bool touching = q.hi == p.lo && (q.kind == Kind::Generator || p.kind == Kind::Generator) &&
                            q.kind != Kind::Point && p.kind != Kind::Point;
      if (!(q.hi < p.lo) && !touching)
        fail(ErrorCode::InvalidInput, "pieces must be disjoint and separated by open gaps");
    }
  }
  if (std::isinf(l())) l_in_E_ = false;
  if (std::isinf(r())) r_in_E_ = false;
  if (pieces_.size() == 1 && pieces_[0].kind == Kind::Point && !(l_in_E_ && r_in_E_))
    fail(ErrorCode::InvalidInput, "a single point cannot exclude its own endpoint");
}

NearlyClosedSet NearlyClosedSet::points(const std::vector<double>& xs) {
  std::vector<Piece> ps;
  for (double x : xs) ps.push_back(point_piece(x));
  return NearlyClosedSet(std::move(ps));
}

bool NearlyClosedSet::bounded() const { return std::isfinite(l()) && std::isfinite(r()); }

void NearlyClosedSet::require_bounded(const char* op) const {
  if (!bounded()) fail(ErrorCode::UnboundedDomain, std::string(op) + " needs a bounded state space");
}

MeasurableSubset NearlyClosedSet::as_subset() const {
  require_bounded("as_subset");
  std::vector<Interval> iv;
  std::vector<MeasurableSubset> parts;
  for (const auto& p : pieces_) {
    if (p.kind == Kind::Generator)
      parts.push_back(MeasurableSubset::svc(*p.generator));
    else
      iv.push_back({p.lo, p.hi});
  }
  if (!iv.empty()) parts.insert(parts.begin(), MeasurableSubset::intervals(iv));
  return MeasurableSubset::unite(parts);
}

MeasurableSubset NearlyClosedSet::gap_subset() const {
  require_bounded("gap_subset");
  std::vector<Interval> between;
  std::vector<MeasurableSubset> parts;
  for (std::size_t i = 0; i + 1 < pieces_.size(); ++i)
    if (pieces_[i].hi < pieces_[i + 1].lo) between.push_back({pieces_[i].hi, pieces_[i + 1].lo});
  if (!between.empty()) parts.push_back(MeasurableSubset::intervals(between));
  for (const auto& p : pieces_)
    if (p.kind == Kind::Generator && p.generator->total_gap_length() > 0.0)
      parts.push_back(MeasurableSubset::interval(p.lo, p.hi) - MeasurableSubset::svc(*p.generator));
  return MeasurableSubset::unite(parts);
}

double NearlyClosedSet::member() const {
  for (const auto& p : pieces_) {
    std::vector<double> candidates{p.lo, p.hi};
    if (p.kind == Kind::Interval) candidates.push_back(0.5 * (p.lo + p.hi));
    if (p.generator) candidates.push_back(p.lo + p.generator->stage_length(1));
    for (double x : candidates)
      if (std::isfinite(x) && contains(x) == Tri::In) return x;
  }
  fail(ErrorCode::InvalidInput, "E has no certified member");
}

Tri NearlyClosedSet::contains(double x, int depth) const {
  if (x == l() && !l_in_E_) return Tri::Out;
  if (x == r() && !r_in_E_) return Tri::Out;
  for (const auto& p : pieces_) {
    if (x < p.lo || x > p.hi) continue;
    if (p.kind == Kind::Generator) return p.generator->contains(x, depth);
    return Tri::In;
  }
  return Tri::Out;
}

std::optional<Interval> NearlyClosedSet::gap_containing(double x, int depth) const {
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto& p = pieces_[i];
    if (x >= p.lo && x <= p.hi) {
      if (p.kind == Kind::Generator) return p.generator->gap_containing(x, depth);
      return std::nullopt;
    }
    if (i + 1 < pieces_.size() && x > p.hi && x < pieces_[i + 1].lo) return Interval{p.hi, pieces_[i + 1].lo};
  }
  return std::nullopt;
}

Bracket NearlyClosedSet::measure() const {
  double m = 0.0;
  for (const auto& p : pieces_) {
    if (p.kind == Kind::Interval) m += p.hi - p.lo;
    if (p.kind == Kind::Generator) m += p.generator->measure();
  }
  return Bracket(m);
}

double NearlyClosedSet::total_gap_length() const {
  require_bounded("total_gap_length");
  double g = 0.0;
  for (std::size_t i = 0; i + 1 < pieces_.size(); ++i) g += pieces_[i + 1].lo - pieces_[i].hi;
  for (const auto& p : pieces_)
    if (p.kind == Kind::Generator) g += p.generator->total_gap_length();
  return g;
}

NearlyClosedSet NearlyClosedSet::affine(double scale, double shift) const {
  if (!(scale > 0.0)) fail(ErrorCode::InvalidInput, "affine set maps need a positive scale");
  std::vector<Piece> out;
  for (const auto& p : pieces_) {
    Piece q = p;
    q.lo = scale * p.lo + shift;
    q.hi = scale * p.hi + shift;
    if (p.generator) q.generator = p.generator->affine(scale, shift);
    out.push_back(std::move(q));
  }
  return NearlyClosedSet(std::move(out), l_in_E_, r_in_E_);
}

bool NearlyClosedSet::operator==(const NearlyClosedSet& o) const {
  if (pieces_.size() != o.pieces_.size() || l_in_E_ != o.l_in_E_ || r_in_E_ != o.r_in_E_) return false;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto &a = pieces_[i], &b = o.pieces_[i];
    if (a.kind != b.kind || a.lo != b.lo || a.hi != b.hi) return false;
    if (a.generator.has_value() != b.generator.has_value()) return false;
    if (a.generator && !(*a.generator == *b.generator)) return false;
  }
  return true;
}

// ---------------------------------------------------------------- gaps

GapList gaps(const NearlyClosedSet& e, std::size_t max_count, std::optional<double> tol) {
  struct Cand {
    double a, b, key;
    int piece;  // -1 for a gap between pieces
    int stage;
  };
  auto before = [](const Cand& x, const Cand& y) {
    if (x.key != y.key) return x.key < y.key;
    return x.a > y.a;
  };
  std::priority_queue<Cand, std::vector<Cand>, decltype(before)> heap(before);
  const auto& ps = e.pieces();
  double between_left = 0.0;
  std::vector<double> svc_left(ps.size(), 0.0);
  for (std::size_t i = 0; i + 1 < ps.size(); ++i) {
    const double a = ps[i].hi, b = ps[i + 1].lo;
    if (!(b > a)) continue;
    heap.push({a, b, b - a, -1, 0});
    between_left += b - a;
  }
  auto push_svc_gap = [&](int piece, double a, double b, int stage) {
    if (stage > SVCSet::kMaxStage) return;
    const auto& s = *ps[piece].generator;
    const double child = s.stage_length(stage);
    heap.push({a + child, b - child, s.gap_length(stage), piece, stage});
  };
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps[i].kind != NearlyClosedSet::Kind::Generator) continue;
    svc_left[i] = ps[i].generator->total_gap_length();
    push_svc_gap(static_cast<int>(i), ps[i].lo, ps[i].hi, 1);
  }
  auto tail = [&] {
    double t = between_left;
    for (double v : svc_left) t += v;
    return std::max(0.0, t);
  };

  GapList out;
  while (!heap.empty() && out.gaps.size() < max_count) {
    if (tol && tail() <= *tol) break;
    const Cand c = heap.top();
    heap.pop();
    out.gaps.push_back({c.a, c.b});
    if (c.piece < 0) {
      between_left -= c.key;
    } else {
      svc_left[c.piece] -= c.key;
      // Children of the gap's parent stage interval [a - child, b + child].
      const auto& s = *ps[c.piece].generator;
      const double child = s.stage_length(c.stage);
      push_svc_gap(c.piece, c.a - child, c.a, c.stage + 1);
      push_svc_gap(c.piece, c.b, c.b + child, c.stage + 1);
    }
  }
  if (heap.empty()) {
    between_left = 0.0;
    std::fill(svc_left.begin(), svc_left.end(), 0.0);
  }
  out.tail = tail();
  if (tol && out.tail > *tol) {
    std::ostringstream os;
    os << "gap tail " << out.tail << " exceeds tol " << *tol << " after " << max_count << " gaps";
    fail(ErrorCode::TolNotAchievable, os.str());
  }
  return out;
}

bool is_nowhere_dense(const NearlyClosedSet& e) {
  for (const auto& p : e.pieces())
    if (p.kind == NearlyClosedSet::Kind::Interval) return false;
  return true;
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::TolNotAchievable: return "TolNotAchievable";
    case ErrorCode::UnboundedDomain: return "UnboundedDomain";
    case ErrorCode::InfiniteValue: return "InfiniteValue";
    case ErrorCode::TrivialMeasure: return "TrivialMeasure";
    case ErrorCode::NotInjective: return "NotInjective";
    case ErrorCode::NotMeasureDense: return "NotMeasureDense";
    case ErrorCode::CertificateUnknown: return "CertificateUnknown";
    case ErrorCode::NotInS: return "NotInS";
    case ErrorCode::NotInSs: return "NotInSs";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::MismatchedBase: return "MismatchedBase";
    case ErrorCode::TooFewStates: return "TooFewStates";
    case ErrorCode::NotReachable: return "NotReachable";
    case ErrorCode::QKViolated: return "QKViolated";
    case ErrorCode::UnboundedSpace: return "UnboundedSpace";
    case ErrorCode::Undecided: return "Undecided";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::InvalidInput: return "InvalidInput";
  }
  return "Unknown";
}

}  // namespace quasidiff
