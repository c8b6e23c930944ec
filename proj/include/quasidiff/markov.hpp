#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quasidiff/forms.hpp"
#include "quasidiff/measures.hpp"

namespace quasidiff {

/// Nearest-neighbour birth-death chain symmetric with respect to masses.
struct ChainModel {
  std::vector<double> states;  // increasing
  std::vector<double> masses;  // mu_i > 0
  std::vector<double> up;      // q_{i,i+1}; zero at the last state
  std::vector<double> down;    // q_{i,i-1}; zero at the first state
  double kill_left = 0.0;      // rate from the first state to the cemetery
  double kill_right = 0.0;

  std::size_t size() const { return states.size(); }
  double total_rate(std::size_t i) const;
  std::optional<std::size_t> index_of(double x) const;

  /// q_{i,i+-1} = 1 / (2 mu_i |x_{i+-1} - x_i|). An excluded endpoint at
  /// finite distance kills from the adjacent state at the same formula.
  static ChainModel from_atoms(std::vector<double> states, std::vector<double> masses,
                               std::optional<double> left_cemetery = std::nullopt,
                               std::optional<double> right_cemetery = std::nullopt);
};

/// The chain is symmetric w.r.t. mu = m / 2; the time change uses m.
StieltjesMeasure symmetrizing_from_speed(const StieltjesMeasure& m);
StieltjesMeasure speed_from_symmetrizing(const StieltjesMeasure& mu);

/// Natural-scale form only. States are quantile points of E under mu plus
/// the endpoints that belong to E; masses are the mu-masses of Voronoi cells.
ChainModel discretize(const FormDescriptor& form, std::size_t n, double tol = 1e-12);

/// (Lf)(x_i) = q_{i,i+1}(f_{i+1} - f_i) + q_{i,i-1}(f_{i-1} - f_i) - kill_i f_i.
std::vector<double> apply_generator(const ChainModel& c, const std::vector<double>& f);

/// P_x(T_a < T_b) for chain states a < x < b.
double hitting_prob_exact(const ChainModel& c, double x, double a, double b);
/// E_x[T_a ^ T_b].
double exit_time_exact(const ChainModel& c, double x, double a, double b);

struct PathSample {
  enum class Terminal { Horizon, Stopped, Absorbed };
  std::vector<double> times;  // jump times, starting with 0
  std::vector<std::size_t> indices;
  std::vector<double> positions;
  Terminal terminal = Terminal::Horizon;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/// Seeds mt19937_64 from (seed, stream) through SplitMix64.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

/// Simulates until the horizon, absorption or a visit to any stop state.
PathSample simulate_chain(const ChainModel& c, double x0, double horizon, std::uint64_t seed, std::uint64_t stream,
                          const std::vector<double>& stop = {});

/// Random-walk skeleton of W on a grid through the support points of m,
/// run with the clock S_t = int l^W(t, x) m(dx), where the local time is
/// normalized by int_0^t f(W_s) ds = 2 int l f dx. Each visit to a node adds
/// the expected local-time tent of the excursion to its neighbours.
class TimeChangeSimulator {
 public:
  TimeChangeSimulator(const StieltjesMeasure& m, double grid_step, double tol = 1e-9);

  PathSample run(double x0, double horizon, std::uint64_t seed, std::uint64_t stream,
                 const std::vector<double>& stop = {}) const;

  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& clock_increments() const { return inc_; }

 private:
  std::vector<double> nodes_;
  std::vector<double> p_up_;
  std::vector<double> inc_;
  bool absorb_left_ = false;
  bool absorb_right_ = false;
};

PathSample simulate_time_change(const StieltjesMeasure& m, double x0, double horizon, double grid_step,
                                std::uint64_t seed, std::uint64_t stream = 0, const std::vector<double>& stop = {});

/// Thread count: QUASIDIFF_THREADS if set, otherwise all cores.
unsigned default_threads();

/// Path i uses stream first_stream + i; results do not depend on threads.
std::vector<PathSample> simulate_chain_paths(const ChainModel& c, double x0, double horizon, std::size_t n_paths,
                                             std::uint64_t seed, const std::vector<double>& stop = {},
                                             unsigned threads = 0, std::uint64_t first_stream = 0);
std::vector<PathSample> simulate_time_change_paths(const TimeChangeSimulator& sim, double x0, double horizon,
                                                   std::size_t n_paths, std::uint64_t seed,
                                                   const std::vector<double>& stop = {}, unsigned threads = 0,
                                                   std::uint64_t first_stream = 0);

struct HittingCheck {
  double a;
  double b;
  double x0;
  std::size_t paths = 0;
  std::size_t hits_a = 0;
  std::size_t undecided = 0;  // reached the horizon first
  double frequency = 0.0;
  double exact = 0.0;
  double sigma = 0.0;
  bool within_4_sigma = false;
};

struct EmpiricalReport {
  std::size_t jumps = 0;
  std::size_t skip_free_jumps = 0;
  double skip_free_rate = 1.0;
  bool detailed_balance = true;
  std::optional<HittingCheck> hitting;
};

/// Skip-free audit, exact detailed balance and, with stop states a < b, the
/// frequency of hitting a first against hitting_prob_exact.
EmpiricalReport empirical_checks(const std::vector<PathSample>& paths, const ChainModel& c,
                                 std::optional<std::pair<double, double>> exit_interval = std::nullopt);

/// Fraction of paths stopped at a, with its binomial standard error.
struct ExitSide {
  std::size_t paths = 0;
  std::size_t at_a = 0;
  double frequency = 0.0;
  double sigma = 0.0;
};
ExitSide exit_side(const std::vector<PathSample>& paths, double a);

std::string paths_csv(const std::vector<PathSample>& paths);

}  // namespace quasidiff
