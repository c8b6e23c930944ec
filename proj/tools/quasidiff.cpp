#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "quasidiff/catalog.hpp"
#include "quasidiff/errors.hpp"
#include "quasidiff/json_io.hpp"

using namespace quasidiff;
namespace qj = quasidiff::io;
using nlohmann::json;

namespace {

struct Config {
  double tol = 1e-9;
  std::size_t gaps = 8;
  std::size_t paths = 1000;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  std::string method = "chain";
  bool strict = false;
  std::string out;
  bool as_json = false;

  json to_json() const {
    return {{"tol", tol},       {"gaps", gaps},     {"paths", paths},   {"seed", seed},
            {"stream", stream}, {"method", method}, {"strict", strict}, {"out", out}};
  }
};

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::DomainViolation:
    case ErrorCode::MismatchedBase: return 2;
    case ErrorCode::TolNotAchievable: return 3;
    case ErrorCode::QKViolated: return 4;
    default: return 1;
  }
}

// Inline JSON when the argument starts with '{', a file path otherwise.
json load_json(const std::string& arg) {
  if (!arg.empty() && (arg.front() == '{' || arg.front() == '[')) return json::parse(arg);
  std::ifstream in(arg);
  if (!in) fail(ErrorCode::InvalidInput, "cannot read " + arg);
  return json::parse(in);
}

FormDescriptor load_form(const std::string& form_arg, const std::string& entry) {
  if (!entry.empty()) {
    const auto c = catalog_entry(entry);
    return FormDescriptor::make(c.e, ScaleFunction::natural(c.e), c.mu);
  }
  if (form_arg.empty()) fail(ErrorCode::InvalidInput, "give --form or --entry");
  return qj::form_from_json(load_json(form_arg));
}

void write_file(const std::string& dir, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
  out << text;
  if (!out) fail(ErrorCode::InvalidInput, "cannot write " + name + " in " + dir);
}

std::string fmt(const Bracket& b) {
  std::ostringstream os;
  os.precision(12);
  if (b.exact()) os << b.lo;
  else os << b.mid() << " +- " << 0.5 * b.width() << "  [" << b.lo << ", " << b.hi << "]";
  return os.str();
}

void emit(const Config& cfg, const json& report, const std::string& text) {
  if (cfg.as_json) std::cout << report.dump(2) << "\n";
  else std::cout << text;
}

// ---------------------------------------------------------------- verbs

int cmd_catalog(const Config& cfg) {
  json arr = json::array();
  std::ostringstream text;
  for (const auto& c : catalog()) {
    const auto m = c.e.measure();
    const bool nd = is_nowhere_dense(c.e);
    json j{{"name", c.name},
           {"description", c.description},
           {"literature", c.literature},
           {"boundary", c.boundary},
           {"l", c.e.l()},
           {"r", c.e.r()},
           {"measure", qj::to_json(m)},
           {"nowhere_dense", nd},
           {"E", qj::to_json(c.e)},
           {"mu", qj::to_json(c.mu)}};
    if (c.approximation) j["flags"] = json::array({"approximated speed measure"});
    if (c.approximation) j["approximation"] = *c.approximation;
    arr.push_back(j);
    text << c.name << "\n  " << c.description << "\n  [l, r] = [" << c.e.l() << ", " << c.e.r() << "], |E| = " << fmt(m)
         << ", nowhere dense: " << (nd ? "yes" : "no") << "\n  boundary: " << c.boundary << "\n";
    if (c.approximation) text << "  approximated speed measure (" << *c.approximation << ")\n";
  }
  emit(cfg, {{"entries", arr}, {"config", cfg.to_json()}}, text.str());
  return 0;
}

int cmd_energy(const Config& cfg, const std::string& form_arg, const std::string& entry, const std::string& f_arg,
               const std::string& g_arg) {
  const auto form = load_form(form_arg, entry);
  const auto f = qj::test_function_from_json(load_json(f_arg), form);
  const auto g = g_arg.empty() ? f : qj::test_function_from_json(load_json(g_arg), form);
  const auto df = in_domain(form, f, cfg.tol), dg = in_domain(form, g, cfg.tol);
  const auto r = energy_detailed(form, f, g, cfg.tol, cfg.strict);
  json weights = json::array();
  for (const auto& w : jump_weights(form.e, cfg.gaps))
    weights.push_back({{"gap", json::array({w.gap.lo, w.gap.hi})}, {"weight", w.weight}});
  auto verdict = [](const DomainVerdict& v) {
    static const char* names[] = {"yes", "no", "unknown"};
    return json{{"in_domain", names[static_cast<int>(v.outcome)]}, {"reason", v.reason}};
  };
  const json report{{"energy", qj::to_json(r.value)},
                    {"local", qj::to_json(r.local)},
                    {"jump", qj::to_json(r.jump)},
                    {"diagnostics",
                     {{"explicit_gaps", r.explicit_gaps},
                      {"aggregated_blocks", r.aggregated_blocks},
                      {"tail_bound", r.tail_bound},
                      {"largest_gaps", weights}}},
                    {"f", verdict(df)},
                    {"g", verdict(dg)},
                    {"config", cfg.to_json()}};
  std::ostringstream text;
  text << "energy " << fmt(r.value) << "\n  local " << fmt(r.local) << "\n  jump  " << fmt(r.jump) << "\n  explicit gaps "
       << r.explicit_gaps << ", aggregated blocks " << r.aggregated_blocks << ", tail bound " << r.tail_bound << "\n";
  if (df.outcome != DomainVerdict::Outcome::Yes) text << "  f: " << df.reason << "\n";
  if (dg.outcome != DomainVerdict::Outcome::Yes) text << "  g: " << dg.reason << "\n";
  emit(cfg, report, text.str());
  return 0;
}

int cmd_classify(const Config& cfg, const std::string& set_arg, const std::string& entry) {
  NearlyClosedSet e = NearlyClosedSet::interval(0, 1);
  StieltjesMeasure mu;
  if (!entry.empty()) {
    const auto c = catalog_entry(entry);
    e = c.e;
    mu = c.mu;
  } else {
    if (set_arg.empty()) fail(ErrorCode::InvalidInput, "give --set or --entry");
    e = qj::set_from_json(load_json(set_arg));
    mu = FormDescriptor::natural(e).mu;
  }
  const auto c = classify(e, cfg.tol);
  const std::string minimal = c.minimal == "trivially-unique" ? "yes-trivial" : c.minimal;
  json report{{"proper_subspaces", to_string(c.proper_subspaces)},
              {"minimal_exists", minimal},
              {"measure", qj::to_json(c.measure)},
              {"nowhere_dense", c.nowhere_dense},
              {"witness", nullptr},
              {"config", cfg.to_json()}};
  std::ostringstream text;
  text << "proper subspaces: " << to_string(c.proper_subspaces) << "\nminimal subspace: " << minimal << "\n|E| = "
       << fmt(c.measure) << ", nowhere dense: " << (c.nowhere_dense ? "yes" : "no") << "\n";
  if (const auto d = construct_proper(e, mu, cfg.tol)) {
    const auto p = is_proper(*d, cfg.tol);
    report["witness"] = qj::to_json(*d);
    report["witness"]["is_proper"] = {{"decision", to_string(p.decision)}, {"brackets", {{"E_minus_G", qj::to_json(p.defect)}}}};
    text << "proper witness G = " << qj::to_json(d->g).dump() << " with |E \\ G| = " << fmt(p.defect) << "\n";
  }
  emit(cfg, report, text.str());
  return 0;
}

int cmd_compare(const Config& cfg, const std::string& set_arg, const std::string& ga, const std::string& gb) {
  const auto e = qj::set_from_json(load_json(set_arg));
  const auto mu = FormDescriptor::natural(e).mu;
  const auto a = make_subspace(e, qj::subset_from_json(load_json(ga)), mu, cfg.tol);
  const auto b = make_subspace(e, qj::subset_from_json(load_json(gb)), mu, cfg.tol);
  const auto c = compare(a, b, cfg.tol);
  const json report{{"decision", to_string(c.order)},
                    {"brackets", {{"A_minus_B", qj::to_json(c.a_minus_b)}, {"B_minus_A", qj::to_json(c.b_minus_a)}}},
                    {"config", cfg.to_json()}};
  emit(cfg, report,
       "order: " + to_string(c.order) + "\n|G_A \\ G_B| = " + fmt(c.a_minus_b) + "\n|G_B \\ G_A| = " + fmt(c.b_minus_a) +
           "\n");
  return 0;
}

struct SimOptions {
  std::optional<double> x0;
  double horizon = 1e9;
  std::size_t states = 16;
  double grid = 1.0 / 64;
  std::vector<double> exit;
};

json exit_json(const ExitSide& s) {
  return {{"paths", s.paths}, {"at_a", s.at_a}, {"frequency", s.frequency}, {"sigma", s.sigma}};
}

int cmd_simulate(const Config& cfg, const std::string& form_arg, const std::string& entry, const SimOptions& opt) {
  if (cfg.method != "chain" && cfg.method != "timechange" && cfg.method != "both")
    fail(ErrorCode::InvalidInput, "--method is chain, timechange or both");
  if (cfg.paths < 1) fail(ErrorCode::InvalidInput, "--paths must be at least 1");
  const auto form = load_form(form_arg, entry);
  ChainModel chain;
  if (form.mu.is_atomic()) {
    std::vector<double> xs, ws;
    for (const auto& a : form.mu.atoms) {
      xs.push_back(a.x);
      ws.push_back(a.w);
    }
    std::optional<double> lc, rc;
    if (std::isfinite(form.mu.l0)) lc = form.mu.l0;
    if (std::isfinite(form.mu.r0)) rc = form.mu.r0;
    chain = ChainModel::from_atoms(xs, ws, lc, rc);
  } else {
    chain = discretize(form, opt.states, cfg.tol);
  }
  auto nearest = [&](double x) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < chain.size(); ++i)
      if (std::abs(chain.states[i] - x) < std::abs(chain.states[best] - x)) best = i;
    return chain.states[best];
  };
  const double x0 = nearest(opt.x0.value_or(chain.states[chain.size() / 2]));
  std::vector<double> stop;
  if (opt.exit.size() == 2) stop = {nearest(opt.exit[0]), nearest(opt.exit[1])};
  else if (x0 > chain.states.front() && x0 < chain.states.back()) stop = {chain.states.front(), chain.states.back()};

  json report{{"x0", x0}, {"horizon", opt.horizon}, {"states", chain.size()}, {"stop", stop}, {"config", cfg.to_json()}};
  std::ostringstream text;
  text << "x0 = " << x0 << ", " << chain.size() << " chain states, " << cfg.paths << " paths, seed " << cfg.seed
       << ", first stream " << cfg.stream << "\n";
  std::optional<ExitSide> chain_side, tc_side;

  if (cfg.method != "timechange") {
    const auto paths = simulate_chain_paths(chain, x0, opt.horizon, cfg.paths, cfg.seed, stop, 0, cfg.stream);
    std::optional<std::pair<double, double>> pair;
    if (stop.size() == 2) pair = std::pair{stop[0], stop[1]};
    const auto rep = empirical_checks(paths, chain, pair);
    report["chain"] = qj::to_json(rep);
    text << "chain: skip-free " << 100.0 * rep.skip_free_rate << "% of " << rep.jumps << " jumps, detailed balance "
         << (rep.detailed_balance ? "exact" : "VIOLATED") << "\n";
    if (rep.hitting)
      text << "  P(hit " << rep.hitting->a << " first) empirical " << rep.hitting->frequency << " exact "
           << rep.hitting->exact << (rep.hitting->within_4_sigma ? " (within 4 sigma)" : " (OUTSIDE 4 sigma)") << "\n";
    if (stop.size() == 2) chain_side = exit_side(paths, stop[0]);
    if (!cfg.out.empty()) write_file(cfg.out, cfg.method == "both" ? "paths_chain.csv" : "paths.csv", paths_csv(paths));
  }
  if (cfg.method != "chain") {
    const TimeChangeSimulator sim(speed_from_symmetrizing(form.mu), opt.grid, cfg.tol);
    // Start and stop points are snapped to simulator nodes.
    auto node = [&](double x) {
      const auto& nd = sim.nodes();
      return *std::min_element(nd.begin(), nd.end(),
                               [&](double a, double b) { return std::abs(a - x) < std::abs(b - x); });
    };
    std::vector<double> tc_stop;
    for (double x : stop) tc_stop.push_back(node(x));
    const double tc_x0 = node(x0);
    const auto paths =
        simulate_time_change_paths(sim, tc_x0, opt.horizon, cfg.paths, cfg.seed, tc_stop, 0, cfg.stream);
    report["timechange"] = {{"grid_step", opt.grid}, {"nodes", sim.nodes().size()}, {"x0", tc_x0}, {"stop", tc_stop}};
    if (stop.size() == 2) {
      tc_side = exit_side(paths, tc_stop[0]);
      report["timechange"]["exit_side"] = exit_json(*tc_side);
      text << "time change: exit at " << stop[0] << " with frequency " << tc_side->frequency << " +- " << tc_side->sigma
           << "\n";
    }
    if (!cfg.out.empty())
      write_file(cfg.out, cfg.method == "both" ? "paths_timechange.csv" : "paths.csv", paths_csv(paths));
  }
  if (chain_side && tc_side) {
    const double combined = std::hypot(chain_side->sigma, tc_side->sigma);
    const double diff = std::abs(chain_side->frequency - tc_side->frequency);
    const bool agree = diff <= 4.0 * combined;
    report["agreement"] = {{"difference", diff}, {"combined_sigma", combined}, {"within_4_sigma", agree}};
    text << "agreement: |difference| " << diff << " vs 4 sigma " << 4.0 * combined << (agree ? " PASS" : " FAIL") << "\n";
  }
  if (!cfg.out.empty()) write_file(cfg.out, "report.json", report.dump(2) + "\n");
  emit(cfg, report, text.str());
  return 0;
}

int cmd_verify(const Config& cfg, const std::string& parent_arg, const std::string& child_arg, std::size_t probes) {
  const auto parent = qj::form_from_json(load_json(parent_arg));
  const auto child = qj::form_from_json(load_json(child_arg));
  const auto rep = verify_subspace(child, parent, random_probes(child, probes, cfg.seed), cfg.tol);
  const auto csv = to_csv(rep);
  if (!cfg.out.empty()) write_file(cfg.out, "subspace.csv", csv);
  json rows = json::array();
  for (const auto& r : rep.rows) {
    json row{{"probe", r.index},
             {"child_energy", qj::to_json(r.child_energy)},
             {"parent_energy", qj::to_json(r.parent_energy)},
             {"gap", r.gap},
             {"pass", r.pass}};
    if (r.predicted) row["predicted"] = qj::to_json(*r.predicted);
    if (!r.note.empty()) row["note"] = r.note;
    rows.push_back(row);
  }
  const json report{{"verdict", rep.pass ? "PASS" : "FAIL"}, {"rows", rows}, {"config", cfg.to_json()}};
  emit(cfg, report, csv + "verdict: " + (rep.pass ? "PASS" : "FAIL") + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasidiffusions, skip-free processes and their Fukushima subspaces"};
  app.require_subcommand(1);
  Config cfg;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--tol", cfg.tol, "Tolerance")->check(CLI::PositiveNumber);
    sub->add_flag("--json", cfg.as_json, "Print a JSON report");
    sub->add_option("--out", cfg.out, "Output directory");
  };

  auto* catalog_cmd = app.add_subcommand("catalog", "List the built-in examples");
  common(catalog_cmd);

  std::string form_arg, entry, f_arg, g_arg, set_arg, ga, gb, parent_arg, child_arg;
  auto* energy_cmd = app.add_subcommand("energy", "Energy of a form on two test functions");
  common(energy_cmd);
  energy_cmd->add_option("--form", form_arg, "Form JSON (file or inline)");
  energy_cmd->add_option("--entry", entry, "Catalog entry instead of --form");
  energy_cmd->add_option("--f", f_arg, "Test function JSON")->required();
  energy_cmd->add_option("--g", g_arg, "Second test function (default: f)");
  energy_cmd->add_option("--gaps", cfg.gaps, "Number of largest gaps to list");
  energy_cmd->add_flag("--strict", cfg.strict, "Reject functions outside the domain (exit 2)");

  auto* classify_cmd = app.add_subcommand("classify", "Existence of proper and minimal Fukushima subspaces");
  common(classify_cmd);
  classify_cmd->add_option("--set", set_arg, "Set JSON (file or inline)");
  classify_cmd->add_option("--entry", entry, "Catalog entry instead of --set");

  auto* compare_cmd = app.add_subcommand("compare", "Order two subspaces by their characteristic sets");
  common(compare_cmd);
  compare_cmd->add_option("--set", set_arg, "Set JSON")->required();
  compare_cmd->add_option("--ga", ga, "Characteristic set A")->required();
  compare_cmd->add_option("--gb", gb, "Characteristic set B")->required();

  SimOptions sim;
  double x0 = 0.0;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo paths with empirical checks");
  common(sim_cmd);
  sim_cmd->add_option("--form", form_arg, "Form JSON (file or inline)");
  sim_cmd->add_option("--entry", entry, "Catalog entry instead of --form");
  auto* x0_opt = sim_cmd->add_option("--x0", x0, "Start, snapped to the nearest chain state");
  sim_cmd->add_option("--horizon", sim.horizon, "Time horizon");
  sim_cmd->add_option("--paths", cfg.paths, "Number of paths")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", cfg.seed, "Seed");
  sim_cmd->add_option("--stream", cfg.stream, "First stream index");
  sim_cmd->add_option("--method", cfg.method, "chain, timechange or both");
  sim_cmd->add_option("--states", sim.states, "Chain states for non-atomic measures");
  sim_cmd->add_option("--grid", sim.grid, "Grid step of the time-change simulator");
  sim_cmd->add_option("--exit", sim.exit, "Exit states a b")->expected(2);

  std::size_t probes = 20;
  auto* verify_cmd = app.add_subcommand("verify-subspace", "Check a child form against its natural-scale parent");
  common(verify_cmd);
  verify_cmd->add_option("--parent", parent_arg, "Parent form JSON")->required();
  verify_cmd->add_option("--child", child_arg, "Child form JSON")->required();
  verify_cmd->add_option("--probes", probes, "Number of random probes");
  verify_cmd->add_option("--seed", cfg.seed, "Probe seed");

  CLI11_PARSE(app, argc, argv);
  if (x0_opt->count() > 0) sim.x0 = x0;
  try {
    if (*catalog_cmd) return cmd_catalog(cfg);
    if (*energy_cmd) return cmd_energy(cfg, form_arg, entry, f_arg, g_arg);
    if (*classify_cmd) return cmd_classify(cfg, set_arg, entry);
    if (*compare_cmd) return cmd_compare(cfg, set_arg, ga, gb);
    if (*sim_cmd) return cmd_simulate(cfg, form_arg, entry, sim);
    if (*verify_cmd) return cmd_verify(cfg, parent_arg, child_arg, probes);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: invalid JSON: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
