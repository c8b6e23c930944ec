#include "quasidiff/pl.hpp"

#include <algorithm>
#include <cmath>

#include "quasidiff/errors.hpp"

namespace quasidiff {

PLFunction::PLFunction(std::vector<double> breaks, std::vector<double> values)
    : breaks_(std::move(breaks)), values_(std::move(values)) {
  if (breaks_.size() < 2 || breaks_.size() != values_.size())
    fail(ErrorCode::InvalidInput, "a PL function needs matching breaks and values, at least two");
  for (std::size_t i = 0; i < breaks_.size(); ++i) {
    if (!std::isfinite(breaks_[i]) || !std::isfinite(values_[i]))
      fail(ErrorCode::InvalidInput, "PL breaks and values must be finite");
    if (i > 0 && !(breaks_[i - 1] < breaks_[i])) fail(ErrorCode::InvalidInput, "PL breaks must increase strictly");
  }
}

double PLFunction::slope(std::size_t i) const {
  return (values_[i + 1] - values_[i]) / (breaks_[i + 1] - breaks_[i]);
}

double PLFunction::operator()(double x) const {
  if (x <= breaks_.front()) return values_.front();
  if (x >= breaks_.back()) return values_.back();
  const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
  const auto i = static_cast<std::size_t>(it - breaks_.begin()) - 1;
  if (x == breaks_[i]) return values_[i];
  const double t = (x - breaks_[i]) / (breaks_[i + 1] - breaks_[i]);
  return values_[i] + t * (values_[i + 1] - values_[i]);
}

double PLFunction::lipschitz() const {
  double l = 0.0;
  for (std::size_t i = 0; i < pieces(); ++i) l = std::max(l, std::abs(slope(i)));
  return l;
}

PLFunction PLFunction::clamped(double lo, double hi) const {
  // Insert the crossings of each level, then clamp values.
  std::vector<double> xs, vs;
  for (std::size_t i = 0; i < breaks_.size(); ++i) {
    if (i > 0) {
      const double a = values_[i - 1], b = values_[i];
      for (double level : {lo, hi}) {
        if ((a - level) * (b - level) < 0.0) {
          const double t = (level - a) / (b - a);
          xs.push_back(breaks_[i - 1] + t * (breaks_[i] - breaks_[i - 1]));
        }
      }
      if (xs.size() >= 2 && xs[xs.size() - 2] > xs.back()) std::swap(xs[xs.size() - 2], xs.back());
    }
    xs.push_back(breaks_[i]);
  }
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  for (double x : xs) vs.push_back(std::clamp((*this)(x), lo, hi));
  return PLFunction(std::move(xs), std::move(vs));
}

PLFunction PLFunction::scaled(double c) const {
  std::vector<double> v = values_;
  for (auto& x : v) x *= c;
  return PLFunction(breaks_, std::move(v));
}

PLFunction operator+(const PLFunction& a, const PLFunction& b) {
  std::vector<double> xs = a.breaks_;
  xs.insert(xs.end(), b.breaks_.begin(), b.breaks_.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<double> vs;
  for (double x : xs) vs.push_back(a(x) + b(x));
  return PLFunction(std::move(xs), std::move(vs));
}

}  // namespace quasidiff
