#include <random>

#include "doctest.h"
#include "quasidiff/errors.hpp"
#include "quasidiff/markov.hpp"

using namespace quasidiff;

namespace {

FormDescriptor atomic_form(const std::vector<double>& xs, const std::vector<double>& ws) {
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < xs.size(); ++i) atoms.push_back({xs[i], ws[i]});
  const auto e = NearlyClosedSet::points(xs);
  return FormDescriptor::make(e, ScaleFunction::natural(e), StieltjesMeasure::atomic(atoms));
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

TEST_CASE("discretize examples") {
  const auto c = discretize(atomic_form({0, 1}, {1, 1}), 2);
  CHECK(c.states == std::vector<double>{0, 1});
  CHECK(c.masses == std::vector<double>{1, 1});
  CHECK(c.up[0] == 0.5);
  CHECK(c.down[1] == 0.5);

  const auto c3 = ChainModel::from_atoms({0, 0.5, 1}, {1, 1, 1});
  CHECK(c3.up[1] == 1.0);
  CHECK(c3.down[1] == 1.0);
  const auto heavy = ChainModel::from_atoms({0, 0.5, 1}, {2, 2, 2});
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(heavy.up[i] == 0.5 * c3.up[i]);
    CHECK(heavy.down[i] == 0.5 * c3.down[i]);
  }
  CHECK(code_of([&] { discretize(atomic_form({0, 1}, {1, 1}), 1); }) == ErrorCode::TooFewStates);
}

TEST_CASE("discretize a continuous measure") {
  const auto form = FormDescriptor::natural(NearlyClosedSet::interval(0, 1));
  for (std::size_t n : {3u, 6u, 11u}) {
    const auto c = discretize(form, n);
    CHECK(c.states.front() == 0.0);
    CHECK(c.states.back() == 1.0);
    double total = 0.0;
    for (double m : c.masses) total += m;
    CHECK(total == doctest::Approx(1.0));
    // Hitting probabilities between fixed states do not depend on n.
    CHECK(hitting_prob_exact(c, c.states[1], 0.0, 1.0) == doctest::Approx(1.0 - c.states[1]).epsilon(1e-12));
  }
  const auto fat = FormDescriptor::natural(NearlyClosedSet::svc(SVCSet({0, 1}, RemovalSchedule{1, 4})));
  const auto c = discretize(fat, 8, 1e-9);
  for (double x : c.states) CHECK(fat.e.contains(x) != Tri::Out);
}

TEST_CASE("exact hitting probabilities and exit times") {
  const auto c = ChainModel::from_atoms({0, 0.5, 1}, {1, 1, 1});
  CHECK(hitting_prob_exact(c, 0.5, 0, 1) == doctest::Approx(0.5));
  CHECK(hitting_prob_exact(c, 0, 0, 1) == 1.0);
  CHECK(hitting_prob_exact(ChainModel::from_atoms({0, 0.25, 1}, {3, 0.1, 2}), 0.25, 0, 1) ==
        doctest::Approx(0.75));
  CHECK(exit_time_exact(c, 0.5, 0, 1) == doctest::Approx(0.5));
  CHECK(exit_time_exact(c, 0, 0, 1) == 0.0);
  CHECK(exit_time_exact(ChainModel::from_atoms({0, 0.5, 1}, {1, 2, 1}), 0.5, 0, 1) == doctest::Approx(1.0));
  CHECK(code_of([&] { hitting_prob_exact(c, 0.5, 0.1, 1); }) == ErrorCode::NotReachable);
}

TEST_CASE("generator matches the atomic form") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1), w(0.2, 3);
  std::vector<double> xs, ws;
  for (int i = 0; i < 7; ++i) {
    xs.push_back(u(rng));
    ws.push_back(w(rng));
  }
  std::sort(xs.begin(), xs.end());
  const auto form = atomic_form(xs, ws);
  const auto c = discretize(form, xs.size());
  std::vector<double> fv, gv;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    fv.push_back(u(rng));
    gv.push_back(u(rng));
  }
  const auto lf = apply_generator(c, fv);
  double lhs = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) lhs -= lf[i] * gv[i] * c.masses[i];
  const auto e = energy(form, TestFunction::natural(PLFunction(xs, fv)), TestFunction::natural(PLFunction(xs, gv)), 0);
  CHECK(e.mid() == doctest::Approx(lhs).epsilon(1e-12));
}

TEST_CASE("chain simulation") {
  const auto c = ChainModel::from_atoms({0, 1}, {1, 1});
  const auto p1 = simulate_chain(c, 0, 50, 7, 3);
  const auto p2 = simulate_chain(c, 0, 50, 7, 3);
  CHECK(p1.times == p2.times);
  CHECK(p1.indices == p2.indices);
  CHECK(simulate_chain(c, 0, 50, 7, 4).times != p1.times);

  // Holding times at 0 are exponential with mean 1 / q01 = 2.
  const auto long_path = simulate_chain(c, 0, 4.2e5, 1, 0);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k + 1 < long_path.times.size(); ++k)
    if (long_path.indices[k] == 0) {
      sum += long_path.times[k + 1] - long_path.times[k];
      ++n;
    }
  REQUIRE(n > 90000);
  const double mean = sum / n;
  CHECK(std::abs(mean - 2.0) <= 3.0 * 2.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("empirical checks on a three-state chain") {
  const auto c = ChainModel::from_atoms({0, 0.3, 1}, {1, 2, 0.5});
  const auto paths = simulate_chain_paths(c, 0.3, 1e9, 100000, 11, {0, 1});
  const auto rep = empirical_checks(paths, c, std::pair{0.0, 1.0});
  CHECK(rep.skip_free_rate == 1.0);
  CHECK(rep.detailed_balance);
  REQUIRE(rep.hitting);
  CHECK(rep.hitting->exact == doctest::Approx(0.7));
  CHECK(rep.hitting->within_4_sigma);

  auto corrupted = paths;
  corrupted[0].indices.push_back(corrupted[0].indices.back() == 0 ? 2 : 0);
  corrupted[0].indices.push_back(corrupted[0].indices.back() == 0 ? 2 : 0);
  CHECK(empirical_checks(corrupted, c).skip_free_rate < 1.0);
}

TEST_CASE("parallel runs are deterministic across thread counts") {
  const auto c = ChainModel::from_atoms({0, 0.2, 0.5, 0.7, 1}, {1, 1, 2, 1, 1});
  const auto a = simulate_chain_paths(c, 0.5, 5.0, 2000, 99, {}, 1);
  const auto b = simulate_chain_paths(c, 0.5, 5.0, 2000, 99, {}, 8);
  REQUIRE(a.size() == b.size());
  bool same = true;
  for (std::size_t i = 0; i < a.size(); ++i) same = same && a[i].times == b[i].times && a[i].indices == b[i].indices;
  CHECK(same);
  CHECK(paths_csv(a) == paths_csv(b));
}

TEST_CASE("time-change simulation") {
  const auto m = StieltjesMeasure::atomic({{0, 1}, {0.5, 1}, {1, 1}});
  const TimeChangeSimulator sim(m, 0.05);
  const auto paths = simulate_time_change_paths(sim, 0.5, 1e9, 4000, 5, {0, 1});
  const auto side = exit_side(paths, 1.0);
  CHECK(side.paths == paths.size());
  CHECK(std::abs(side.frequency - 0.5) <= 4.0 * std::sqrt(0.25 / side.paths));

  // A lone atom holds until the horizon.
  const auto lone = simulate_time_change(StieltjesMeasure::atomic({{0.3, 1}}), 0.3, 10, 0.1, 1);
  CHECK(lone.positions == std::vector<double>{0.3});
  CHECK(lone.terminal == PathSample::Terminal::Horizon);

  auto killed = StieltjesMeasure::atomic({{1, 1}, {2, 1}});
  killed.l0 = 0;
  CHECK(code_of([&] { TimeChangeSimulator(killed, 0.1); }) == ErrorCode::QKViolated);
}

TEST_CASE("mean holding time under the time change") {
  // Two atoms of m-mass 2 (mu-mass 1) at distance 1: the chain leaves 0 at rate 1/2.
  const auto m = StieltjesMeasure::atomic({{0, 2}, {1, 2}});
  const TimeChangeSimulator sim(m, 0.02);
  const auto paths = simulate_time_change_paths(sim, 0.0, 1e9, 4000, 8, {1});
  double sum = 0.0;
  for (const auto& p : paths) sum += p.times.back();
  const double mean = sum / paths.size();
  CHECK(std::abs(mean - 2.0) <= 4.0 * 2.0 / std::sqrt(static_cast<double>(paths.size())) + 0.05);
}

TEST_CASE("chain and time change agree on exit sides") {
  const std::vector<double> xs{0, 0.15, 0.4, 0.55, 1};
  const std::vector<double> ms{1, 0.5, 2, 1, 1.5};
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < xs.size(); ++i) atoms.push_back({xs[i], ms[i]});
  const auto m = StieltjesMeasure::atomic(atoms);
  const auto mu = symmetrizing_from_speed(m);
  std::vector<double> mus;
  for (const auto& a : mu.atoms) mus.push_back(a.w);
  const auto c = ChainModel::from_atoms(xs, mus);
  const auto chain = exit_side(simulate_chain_paths(c, 0.4, 1e9, 10000, 3, {0, 1}), 0.0);
  const auto tc = exit_side(simulate_time_change_paths(TimeChangeSimulator(m, 0.05), 0.4, 1e9, 10000, 3, {0, 1}), 0.0);
  const double combined = std::sqrt(chain.sigma * chain.sigma + tc.sigma * tc.sigma);
  CHECK(std::abs(chain.frequency - tc.frequency) <= 4.0 * combined);
  CHECK(std::abs(chain.frequency - 0.6) <= 4.0 * chain.sigma);
}
