#include "quasidiff/markov.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "quasidiff/errors.hpp"

namespace quasidiff {

namespace {

// Thomas algorithm: sub[i] u[i-1] + diag[i] u[i] + sup[i] u[i+1] = rhs[i].
std::vector<double> solve_tridiagonal(std::vector<double> sub, std::vector<double> diag, std::vector<double> sup,
                                      std::vector<double> rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  std::vector<double> u(n);
  for (std::size_t k = n; k-- > 0;) u[k] = (rhs[k] - (k + 1 < n ? sup[k] * u[k + 1] : 0.0)) / diag[k];
  return u;
}

struct Window {
  std::size_t ia, ix, ib;
};

Window locate(const ChainModel& c, double x, double a, double b) {
  const auto ia = c.index_of(a), ix = c.index_of(x), ib = c.index_of(b);
  if (!ia || !ix || !ib) fail(ErrorCode::NotReachable, "a, x and b must be chain states");
  if (!(*ia <= *ix && *ix <= *ib && *ia < *ib)) fail(ErrorCode::InvalidInput, "need a <= x <= b with a < b");
  return {*ia, *ix, *ib};
}

// Solves (Lu)(x_i) = -g on the states strictly between a and b with
// u(a) = ua, u(b) = ub.
double solve_between(const ChainModel& c, const Window& w, double ua, double ub, double g) {
  if (w.ix == w.ia) return ua;
  if (w.ix == w.ib) return ub;
  const std::size_t n = w.ib - w.ia - 1;
  std::vector<double> sub(n), diag(n), sup(n), rhs(n, g);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = w.ia + 1 + k;
    diag[k] = c.total_rate(i);
    sub[k] = -c.down[i];
    sup[k] = -c.up[i];
  }
  rhs.front() += c.down[w.ia + 1] * ua;
  rhs.back() += c.up[w.ib - 1] * ub;
  return solve_tridiagonal(sub, diag, sup, rhs)[w.ix - w.ia - 1];
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool is_stop(const std::vector<double>& stop, double x) {
  return std::find(stop.begin(), stop.end(), x) != stop.end();
}

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn) {
  if (threads == 0) threads = default_threads();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

}  // namespace

double ChainModel::total_rate(std::size_t i) const {
  double q = up[i] + down[i];
  if (i == 0) q += kill_left;
  if (i + 1 == size()) q += kill_right;
  return q;
}

std::optional<std::size_t> ChainModel::index_of(double x) const {
  const auto it = std::lower_bound(states.begin(), states.end(), x);
  if (it == states.end() || *it != x) return std::nullopt;
  return static_cast<std::size_t>(it - states.begin());
}

ChainModel ChainModel::from_atoms(std::vector<double> states, std::vector<double> masses,
                                  std::optional<double> left_cemetery, std::optional<double> right_cemetery) {
  if (states.size() < 2) fail(ErrorCode::TooFewStates, "a chain needs at least two states");
  if (states.size() != masses.size()) fail(ErrorCode::InvalidInput, "one mass per state");
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!(masses[i] > 0.0) || !std::isfinite(masses[i])) fail(ErrorCode::InvalidInput, "masses must be positive");
    if (i > 0 && !(states[i] > states[i - 1])) fail(ErrorCode::InvalidInput, "states must increase");
  }
  ChainModel c;
  const std::size_t n = states.size();
  c.up.assign(n, 0.0);
  c.down.assign(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double d = states[i + 1] - states[i];
    c.up[i] = 1.0 / (2.0 * masses[i] * d);
    c.down[i + 1] = 1.0 / (2.0 * masses[i + 1] * d);
  }
  if (left_cemetery) c.kill_left = 1.0 / (2.0 * masses.front() * (states.front() - *left_cemetery));
  if (right_cemetery) c.kill_right = 1.0 / (2.0 * masses.back() * (*right_cemetery - states.back()));
  c.states = std::move(states);
  c.masses = std::move(masses);
  return c;
}

StieltjesMeasure symmetrizing_from_speed(const StieltjesMeasure& m) { return m.scaled(0.5); }
StieltjesMeasure speed_from_symmetrizing(const StieltjesMeasure& mu) { return mu.scaled(2.0); }

ChainModel discretize(const FormDescriptor& form, std::size_t n, double tol) {
  if (n < 2) fail(ErrorCode::TooFewStates, "need n >= 2");
  if (form.s.variant() != ScaleFunction::Variant::Natural)
    fail(ErrorCode::Unsupported, "discretize needs the natural scale; transform the form first");
  const auto& e = form.e;
  const auto& mu = form.mu;
  const double l = e.l(), r = e.r();
  std::vector<double> pts;
  if (mu.is_atomic() && mu.atoms.size() <= n) {
    for (const auto& a : mu.atoms) pts.push_back(a.x);
  } else {
    const double below = l - 1.0;
    const double total = mu.mass(below, r, tol).mid();
    std::size_t inner = n;
    if (e.l_in_E()) --inner;
    if (e.r_in_E() && inner > 0) --inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const double target = total * (static_cast<double>(k) + 0.5) / static_cast<double>(inner);
      double lo = l, hi = r;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mu.mass(below, mid, tol).mid() < target) lo = mid;
        else hi = mid;
      }
      double x = hi;
      if (const auto gap = e.gap_containing(x)) x = (x - gap->lo < gap->hi - x) ? gap->lo : gap->hi;
      pts.push_back(x);
    }
  }
  if (e.l_in_E()) pts.push_back(l);
  if (e.r_in_E()) pts.push_back(r);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  std::vector<double> states, masses;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double a = i == 0 ? l - 1.0 : 0.5 * (pts[i - 1] + pts[i]);
    const double b = i + 1 == pts.size() ? r + 1.0 : 0.5 * (pts[i] + pts[i + 1]);
    const double m = mu.mass(a, b, tol).mid();
    if (m > 0.0) {
      states.push_back(pts[i]);
      masses.push_back(m);
    }
  }
  return ChainModel::from_atoms(std::move(states), std::move(masses),
                                form.dirichlet_l ? std::optional<double>(l) : std::nullopt,
                                form.dirichlet_r ? std::optional<double>(r) : std::nullopt);
}

std::vector<double> apply_generator(const ChainModel& c, const std::vector<double>& f) {
  if (f.size() != c.size()) fail(ErrorCode::InvalidInput, "one value per state");
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    double v = 0.0;
    if (i + 1 < c.size()) v += c.up[i] * (f[i + 1] - f[i]);
    if (i > 0) v += c.down[i] * (f[i - 1] - f[i]);
    if (i == 0) v -= c.kill_left * f[i];
    if (i + 1 == c.size()) v -= c.kill_right * f[i];
    out[i] = v;
  }
  return out;
}

double hitting_prob_exact(const ChainModel& c, double x, double a, double b) {
  return solve_between(c, locate(c, x, a, b), 1.0, 0.0, 0.0);
}

double exit_time_exact(const ChainModel& c, double x, double a, double b) {
  return solve_between(c, locate(c, x, a, b), 0.0, 0.0, 1.0);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

PathSample simulate_chain(const ChainModel& c, double x0, double horizon, std::uint64_t seed, std::uint64_t stream,
                          const std::vector<double>& stop) {
  const auto start = c.index_of(x0);
  if (!start) fail(ErrorCode::NotReachable, "x0 must be a chain state");
  std::mt19937_64 rng(stream_seed(seed, stream));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  PathSample p;
  p.seed = seed;
  p.stream = stream;
  std::size_t i = *start;
  double t = 0.0;
  auto record = [&] {
    p.times.push_back(t);
    p.indices.push_back(i);
    p.positions.push_back(c.states[i]);
  };
  record();
  while (true) {
    if (is_stop(stop, c.states[i])) {
      p.terminal = PathSample::Terminal::Stopped;
      break;
    }
    const double rate = c.total_rate(i);
    if (!(rate > 0.0)) break;
    t += -std::log1p(-unif(rng)) / rate;
    if (t > horizon) break;
    const double u = unif(rng) * rate;
    if (u < c.up[i]) {
      ++i;
    } else if (u < c.up[i] + c.down[i]) {
      --i;
    } else {
      p.times.push_back(t);
      p.terminal = PathSample::Terminal::Absorbed;
      break;
    }
    record();
  }
  return p;
}

// ---------------------------------------------------------------- time change

TimeChangeSimulator::TimeChangeSimulator(const StieltjesMeasure& m, double grid_step, double tol) {
  if (m.is_atomic() && m.atoms.size() == 1 && m.atoms[0].x > m.l0 && m.atoms[0].x < m.r0) {
    // A lone atom: W leaves and returns forever, X stays put.
    nodes_ = {m.atoms[0].x};
    p_up_ = {0.5};
    inc_ = {kInf};
    return;
  }
  const auto d = derive_state_space(m);
  if (!d.qk_satisfied) fail(ErrorCode::QKViolated, "speed measure violates (QK)");
  if (!std::isfinite(d.l) || !std::isfinite(d.r)) fail(ErrorCode::UnboundedSpace, "state space must be bounded");
  if (!(grid_step > 0.0)) fail(ErrorCode::InvalidInput, "grid step must be positive");
  const double l = d.l, r = d.r;
  const auto cells = static_cast<std::size_t>(std::max(1.0, std::ceil((r - l) / grid_step)));
  for (std::size_t j = 0; j <= cells; ++j) nodes_.push_back(l + (r - l) * static_cast<double>(j) / cells);
  for (const auto& a : m.atoms)
    if (a.x >= l && a.x <= r) nodes_.push_back(a.x);
  std::sort(nodes_.begin(), nodes_.end());
  // Atoms win over nearby grid points.
  const double merge = 1e-9 * (r - l);
  std::vector<double> merged;
  for (double x : nodes_) {
    const bool atom = std::any_of(m.atoms.begin(), m.atoms.end(), [&](const Atom& a) { return a.x == x; });
    if (!merged.empty() && x - merged.back() < merge) {
      if (atom) merged.back() = x;
      continue;
    }
    merged.push_back(x);
  }
  nodes_ = std::move(merged);
  absorb_left_ = std::isfinite(d.l0);
  absorb_right_ = std::isfinite(d.r0);
  const std::size_t n = nodes_.size();
  p_up_.assign(n, 0.0);
  inc_.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double y = nodes_[j];
    if (j == 0) {
      p_up_[j] = 1.0;
      if (absorb_left_) continue;
      // Reflected excursion to the right neighbour: local time d at y.
      const double b = nodes_[1], dd = b - y;
      inc_[j] = integrate(PLFunction({y, b}, {dd, 0.0}), m, tol).mid();
    } else if (j + 1 == n) {
      p_up_[j] = 0.0;
      if (absorb_right_) continue;
      const double a = nodes_[j - 1], dd = y - a;
      inc_[j] = integrate(PLFunction({a, y}, {0.0, dd}), m, tol).mid();
    } else {
      const double a = nodes_[j - 1], b = nodes_[j + 1];
      const double d1 = y - a, d2 = b - y;
      p_up_[j] = d1 / (d1 + d2);
      const double peak = d1 * d2 / (d1 + d2);
      inc_[j] = integrate(PLFunction({a, y, b}, {0.0, peak, 0.0}), m, tol).mid();
    }
  }
}

PathSample TimeChangeSimulator::run(double x0, double horizon, std::uint64_t seed, std::uint64_t stream,
                                    const std::vector<double>& stop) const {
  const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), x0);
  if (it == nodes_.end() || *it != x0) fail(ErrorCode::InvalidInput, "x0 must be a grid node");
  std::size_t j = static_cast<std::size_t>(it - nodes_.begin());
  if (!(inc_[j] > 0.0)) fail(ErrorCode::InvalidInput, "x0 must carry speed-measure mass");
  if (nodes_.size() == 1) {
    PathSample p;
    p.seed = seed;
    p.stream = stream;
    p.times = {0.0};
    p.indices = {0};
    p.positions = {x0};
    return p;
  }
  std::mt19937_64 rng(stream_seed(seed, stream));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  PathSample p;
  p.seed = seed;
  p.stream = stream;
  double s = 0.0;
  std::size_t at = j;
  p.times.push_back(0.0);
  p.indices.push_back(j);
  p.positions.push_back(nodes_[j]);
  if (is_stop(stop, nodes_[j])) {
    p.terminal = PathSample::Terminal::Stopped;
    return p;
  }
  const std::size_t last = nodes_.size() - 1;
  while (true) {
    s += inc_[j];
    if (s > horizon) break;
    j = unif(rng) < p_up_[j] ? j + 1 : j - 1;
    if ((j == 0 && absorb_left_) || (j == last && absorb_right_)) {
      p.times.push_back(s);
      p.terminal = PathSample::Terminal::Absorbed;
      break;
    }
    if (inc_[j] > 0.0 && j != at) {
      at = j;
      p.times.push_back(s);
      p.indices.push_back(j);
      p.positions.push_back(nodes_[j]);
      if (is_stop(stop, nodes_[j])) {
        p.terminal = PathSample::Terminal::Stopped;
        break;
      }
    }
  }
  return p;
}

PathSample simulate_time_change(const StieltjesMeasure& m, double x0, double horizon, double grid_step,
                                std::uint64_t seed, std::uint64_t stream, const std::vector<double>& stop) {
  return TimeChangeSimulator(m, grid_step).run(x0, horizon, seed, stream, stop);
}

// ---------------------------------------------------------------- parallel runs

unsigned default_threads() {
  if (const char* env = std::getenv("QUASIDIFF_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<PathSample> simulate_chain_paths(const ChainModel& c, double x0, double horizon, std::size_t n_paths,
                                             std::uint64_t seed, const std::vector<double>& stop, unsigned threads,
                                             std::uint64_t first_stream) {
  std::vector<PathSample> out(n_paths);
  parallel_for(n_paths, threads,
               [&](std::size_t i) { out[i] = simulate_chain(c, x0, horizon, seed, first_stream + i, stop); });
  return out;
}

std::vector<PathSample> simulate_time_change_paths(const TimeChangeSimulator& sim, double x0, double horizon,
                                                   std::size_t n_paths, std::uint64_t seed,
                                                   const std::vector<double>& stop, unsigned threads,
                                                   std::uint64_t first_stream) {
  std::vector<PathSample> out(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t i) { out[i] = sim.run(x0, horizon, seed, first_stream + i, stop); });
  return out;
}

// ---------------------------------------------------------------- checks

ExitSide exit_side(const std::vector<PathSample>& paths, double a) {
  ExitSide e;
  for (const auto& p : paths) {
    if (p.terminal != PathSample::Terminal::Stopped) continue;
    ++e.paths;
    if (p.positions.back() == a) ++e.at_a;
  }
  if (e.paths > 0) {
    e.frequency = static_cast<double>(e.at_a) / static_cast<double>(e.paths);
    e.sigma = std::sqrt(e.frequency * (1.0 - e.frequency) / static_cast<double>(e.paths));
  }
  return e;
}

EmpiricalReport empirical_checks(const std::vector<PathSample>& paths, const ChainModel& c,
                                 std::optional<std::pair<double, double>> exit_interval) {
  EmpiricalReport rep;
  for (const auto& p : paths)
    for (std::size_t k = 1; k < p.indices.size(); ++k) {
      ++rep.jumps;
      const auto a = p.indices[k - 1], b = p.indices[k];
      if ((a > b ? a - b : b - a) == 1) ++rep.skip_free_jumps;
    }
  rep.skip_free_rate = rep.jumps == 0 ? 1.0 : static_cast<double>(rep.skip_free_jumps) / rep.jumps;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) {
    const double lhs = c.masses[i] * c.up[i], rhs = c.masses[i + 1] * c.down[i + 1];
    // Both sides are 1 / (2 |x_{i+1} - x_i|) up to the rounding of one product.
    if (std::abs(lhs - rhs) > 4.0 * std::numeric_limits<double>::epsilon() * std::max(lhs, rhs))
      rep.detailed_balance = false;
  }
  if (exit_interval && !paths.empty()) {
    HittingCheck h{exit_interval->first, exit_interval->second, paths.front().positions.front()};
    for (const auto& p : paths) {
      ++h.paths;
      if (p.terminal != PathSample::Terminal::Stopped) {
        ++h.undecided;
        continue;
      }
      if (p.positions.back() == h.a) ++h.hits_a;
    }
    const double decided = static_cast<double>(h.paths - h.undecided);
    h.exact = hitting_prob_exact(c, h.x0, h.a, h.b);
    if (decided > 0) {
      h.frequency = static_cast<double>(h.hits_a) / decided;
      h.sigma = std::sqrt(h.exact * (1.0 - h.exact) / decided);
      h.within_4_sigma = std::abs(h.frequency - h.exact) <= 4.0 * h.sigma + 1e-15;
    }
    rep.hitting = h;
  }
  return rep;
}

std::string paths_csv(const std::vector<PathSample>& paths) {
  std::ostringstream os;
  os.precision(17);
  os << "path,seed,stream,t,state\n";
  for (std::size_t k = 0; k < paths.size(); ++k) {
    const auto& p = paths[k];
    for (std::size_t i = 0; i < p.positions.size(); ++i)
      os << k << ',' << p.seed << ',' << p.stream << ',' << p.times[i] << ',' << p.positions[i] << '\n';
  }
  return os.str();
}

}  // namespace quasidiff
