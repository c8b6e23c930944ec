#include "quasidiff/json_io.hpp"

#include <cmath>

#include "quasidiff/errors.hpp"

namespace quasidiff::io {

namespace {

constexpr double kCertifyTol = 1e-9;

json number(double x) {
  if (std::isinf(x)) return x < 0 ? "-inf" : "inf";
  return x;
}

double number_from(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
    fail(ErrorCode::InvalidInput, "expected a number, got \"" + s + "\"");
  }
  require(j.is_number(), "expected a number");
  return j.get<double>();
}

json pair(double a, double b) { return json::array({number(a), number(b)}); }

Interval interval_from(const json& j) {
  require(j.is_array() && j.size() == 2, "interval must be [lo, hi]");
  return {number_from(j[0]), number_from(j[1])};
}

json svc_json(const SVCSet& s) {
  return {{"base", pair(s.base().lo, s.base().hi)}, {"rho", s.schedule().to_string()}};
}

SVCSet svc_from(const json& j) {
  return SVCSet(interval_from(j.at("base")), RemovalSchedule::parse(j.value("rho", std::string("4^-n"))));
}

json node_json(const MeasurableSubset::Node& n) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::vector<Interval>>) {
          if (v.size() == 1) return {{"interval", pair(v[0].lo, v[0].hi)}};
          json arr = json::array();
          for (const auto& i : v) arr.push_back(pair(i.lo, i.hi));
          return {{"intervals", arr}};
        } else if constexpr (std::is_same_v<T, SVCSet>) {
          return {{"svc", svc_json(v)}};
        } else if constexpr (std::is_same_v<T, UbiquitousSet>) {
          return {{"ubiquitous", {{"base", pair(v.base().lo, v.base().hi)}, {"budget", v.budget()}}}};
        } else {
          json ops = json::array();
          for (const auto& o : v.operands) ops.push_back(node_json(*o));
          switch (v.op) {
            case MeasurableSubset::Op::Union: return {{"union", ops}};
            case MeasurableSubset::Op::Intersection: return {{"intersection", ops}};
            case MeasurableSubset::Op::Difference: break;
          }
          return {{"difference", ops}};
        }
      },
      n.value);
}

MeasurableSubset::NodePtr node_from(const json& j) {
  using Node = MeasurableSubset::Node;
  require(j.is_object() && j.size() == 1, "subset expression must have exactly one key");
  const auto& [key, v] = *j.items().begin();
  if (key == "interval") {
    return std::make_shared<const Node>(Node{std::vector<Interval>{interval_from(v)}});
  }
  if (key == "point") {
    const double x = number_from(v);
    return std::make_shared<const Node>(Node{std::vector<Interval>{{x, x}}});
  }
  if (key == "intervals") {
    std::vector<Interval> out;
    for (const auto& i : v) out.push_back(interval_from(i));
    return std::make_shared<const Node>(Node{std::move(out)});
  }
  if (key == "svc") return std::make_shared<const Node>(Node{svc_from(v)});
  if (key == "ubiquitous")
    return std::make_shared<const Node>(Node{UbiquitousSet(interval_from(v.at("base")), v.value("budget", 0.5))});
  MeasurableSubset::Composite c;
  if (key == "union") c.op = MeasurableSubset::Op::Union;
  else if (key == "intersection") c.op = MeasurableSubset::Op::Intersection;
  else if (key == "difference") c.op = MeasurableSubset::Op::Difference;
  else fail(ErrorCode::InvalidInput, "unknown subset kind \"" + key + "\"");
  require(v.is_array(), key + " takes an array of operands");
  for (const auto& o : v) c.operands.push_back(node_from(o));
  if (c.op == MeasurableSubset::Op::Difference) require(c.operands.size() == 2, "difference takes two operands");
  return std::make_shared<const Node>(Node{std::move(c)});
}

ScaleFunction certified_charset(const NearlyClosedSet& e, const MeasurableSubset& g, double anchor) {
  return scale_from_charset(e, g, anchor, kCertifyTol);
}

}  // namespace

json to_json(const MeasurableSubset& a) { return node_json(a.node()); }

MeasurableSubset subset_from_json(const json& j) {
  if (j.is_object() && j.contains("kind")) return set_from_json(j).as_subset();
  return MeasurableSubset(node_from(j));
}

json to_json(const NearlyClosedSet& e) {
  json pieces = json::array();
  for (const auto& p : e.pieces()) {
    switch (p.kind) {
      case NearlyClosedSet::Kind::Interval: pieces.push_back({{"interval", pair(p.lo, p.hi)}}); break;
      case NearlyClosedSet::Kind::Point: pieces.push_back({{"point", number(p.lo)}}); break;
      case NearlyClosedSet::Kind::Generator: pieces.push_back({{"svc", svc_json(*p.generator)}}); break;
    }
  }
  return {{"kind", "union"}, {"pieces", pieces}, {"l_in_E", e.l_in_E()}, {"r_in_E", e.r_in_E()}};
}

NearlyClosedSet set_from_json(const json& j) {
  require(j.is_object() && j.value("kind", std::string("union")) == "union", "set must be {\"kind\":\"union\",...}");
  std::vector<NearlyClosedSet::Piece> pieces;
  for (const auto& p : j.at("pieces")) {
    if (p.contains("interval")) {
      const auto iv = interval_from(p["interval"]);
      pieces.push_back(NearlyClosedSet::interval_piece(iv.lo, iv.hi));
    } else if (p.contains("point")) {
      pieces.push_back(NearlyClosedSet::point_piece(number_from(p["point"])));
    } else if (p.contains("svc")) {
      pieces.push_back(NearlyClosedSet::generator_piece(svc_from(p["svc"])));
    } else {
      fail(ErrorCode::InvalidInput, "set pieces are interval, point or svc; ubiquitous sets are not nearly closed");
    }
  }
  return NearlyClosedSet(std::move(pieces), j.value("l_in_E", true), j.value("r_in_E", true));
}

json to_json(const StieltjesMeasure& m) {
  json atoms = json::array(), dens = json::array(), ind = json::array();
  for (const auto& a : m.atoms) atoms.push_back(json::array({a.x, a.w}));
  for (const auto& d : m.densities)
    dens.push_back({{"interval", pair(d.support.lo, d.support.hi)}, {"affine", json::array({d.c0, d.c1})}});
  for (const auto& i : m.indicators) ind.push_back({{"set", to_json(i.set)}, {"coef", i.coef}});
  json out{{"atoms", atoms},
           {"densities", dens},
           {"indicators", ind},
           {"minus_inf_left_of", number(m.l0)},
           {"plus_inf_right_of", number(m.r0)}};
  if (m.anchor) out["anchor"] = json::array({*m.anchor, m.anchor_value});
  else if (m.anchor_value != 0.0) out["anchor_value"] = m.anchor_value;
  return out;
}

StieltjesMeasure measure_from_json(const json& j) {
  require(j.is_object(), "measure must be an object");
  StieltjesMeasure m;
  for (const auto& a : j.value("atoms", json::array())) {
    require(a.is_array() && a.size() == 2, "atom must be [x, w]");
    m.atoms.push_back({number_from(a[0]), number_from(a[1])});
  }
  for (const auto& d : j.value("densities", json::array())) {
    const auto aff = d.value("affine", json::array({1.0, 0.0}));
    m.densities.push_back({interval_from(d.at("interval")), number_from(aff.at(0)), number_from(aff.at(1))});
  }
  for (const auto& i : j.value("indicators", json::array()))
    m.indicators.push_back({subset_from_json(i.at("set")), i.value("coef", 1.0)});
  if (j.contains("minus_inf_left_of")) m.l0 = number_from(j["minus_inf_left_of"]);
  if (j.contains("plus_inf_right_of")) m.r0 = number_from(j["plus_inf_right_of"]);
  if (j.contains("anchor")) {
    m.anchor = number_from(j["anchor"].at(0));
    m.anchor_value = number_from(j["anchor"].at(1));
  } else if (j.contains("anchor_value")) {
    m.anchor_value = number_from(j["anchor_value"]);
  }
  m.validate();
  return m;
}

json to_json(const ScaleFunction& s) {
  switch (s.variant()) {
    case ScaleFunction::Variant::Natural: return {{"variant", "natural"}};
    case ScaleFunction::Variant::CharSet:
      return {{"variant", "charset"}, {"G", to_json(s.charset_g())}, {"anchor", json::array({s.set().member(), 0.0})}};
    case ScaleFunction::Variant::PL: break;
  }
  return {{"variant", "pl"}, {"breaks", s.pl().breaks()}, {"values", s.pl().values()}};
}

ScaleFunction scale_from_json(const json& j, const NearlyClosedSet& e) {
  const auto v = j.value("variant", std::string("natural"));
  if (v == "natural") return ScaleFunction::natural(e);
  if (v == "charset") {
    const double anchor = j.contains("anchor") ? number_from(j["anchor"].at(0)) : e.member();
    return certified_charset(e, subset_from_json(j.at("G")), anchor);
  }
  if (v == "pl") {
    return ScaleFunction::general_pl(
        e, PLFunction(j.at("breaks").get<std::vector<double>>(), j.at("values").get<std::vector<double>>()));
  }
  fail(ErrorCode::InvalidInput, "unknown scale variant \"" + v + "\"");
}

json to_json(const FormDescriptor& f) {
  return {{"E", to_json(f.e)},
          {"scale", to_json(f.s)},
          {"mu", to_json(f.mu)},
          {"boundary", {{"dirichlet_l", f.dirichlet_l}, {"dirichlet_r", f.dirichlet_r}}}};
}

FormDescriptor form_from_json(const json& j) {
  const auto e = set_from_json(j.at("E"));
  auto s = j.contains("scale") ? scale_from_json(j["scale"], e) : ScaleFunction::natural(e);
  auto mu = j.contains("mu") ? measure_from_json(j["mu"]) : FormDescriptor::natural(e).mu;
  return FormDescriptor::make(e, std::move(s), std::move(mu));
}

json to_json(const TestFunction& f) {
  if (f.is_natural()) {
    const auto pl = f.as_pl();
    return {{"pl", {{"breaks", pl.breaks()}, {"values", pl.values()}}}};
  }
  return {{"coordinate", to_json(*f.coordinate())},
          {"knots", f.knots()},
          {"slopes", f.slopes()},
          {"v0", f.base_value()}};
}

TestFunction test_function_from_json(const json& j, const FormDescriptor& form) {
  if (j.value("scale_of", false)) return TestFunction::scale_of(form.s);
  if (j.contains("pl"))
    return TestFunction::natural(
        PLFunction(j["pl"].at("breaks").get<std::vector<double>>(), j["pl"].at("values").get<std::vector<double>>()));
  auto knots = j.at("knots").get<std::vector<double>>();
  auto slopes = j.at("slopes").get<std::vector<double>>();
  const double v0 = j.value("v0", 0.0);
  if (!j.contains("coordinate")) {
    require(knots.size() == slopes.size() + 1, "knots must have one more entry than slopes");
    std::vector<double> values{v0};
    for (std::size_t i = 0; i < slopes.size(); ++i) values.push_back(values.back() + slopes[i] * (knots[i + 1] - knots[i]));
    return TestFunction::natural(PLFunction(std::move(knots), std::move(values)));
  }
  const auto& c = j["coordinate"];
  const auto coord = c.is_string() && c.get<std::string>() == "form" ? form.s : scale_from_json(c, form.e);
  return TestFunction::in_scale(coord, std::move(knots), std::move(slopes), v0);
}

json to_json(const Bracket& b) {
  return {{"lo", b.lo}, {"hi", b.hi}, {"mid", b.mid()}, {"width", b.width()}};
}

json to_json(const SubspaceDescriptor& d) {
  return {{"E", to_json(d.e)}, {"G", to_json(d.g)}, {"scale", to_json(d.scale)}};
}

json to_json(const EmpiricalReport& r) {
  json out{{"skip_free", {{"jumps", r.jumps}, {"skip_free_jumps", r.skip_free_jumps}, {"rate", r.skip_free_rate}}},
           {"detailed_balance", r.detailed_balance}};
  if (r.hitting) {
    const auto& h = *r.hitting;
    out["hitting"] = {{"a", h.a},           {"b", h.b},         {"x0", h.x0},       {"paths", h.paths},
                      {"hits_a", h.hits_a}, {"undecided", h.undecided}, {"frequency", h.frequency},
                      {"exact", h.exact},   {"sigma", h.sigma}, {"within_4_sigma", h.within_4_sigma}};
  }
  return out;
}

}  // namespace quasidiff::io
