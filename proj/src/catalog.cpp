#include "quasidiff/catalog.hpp"

#include <algorithm>

#include "quasidiff/errors.hpp"

namespace quasidiff {

StieltjesMeasure cantor_function_atoms(const SVCSet& k, int depth) {
  require(depth >= 0 && depth <= 20, "depth must be in [0, 20]");
  // Same arithmetic as SVCSet::contains, so every atom tests as a member.
  std::vector<Interval> stage{k.base()};
  for (int n = 1; n <= depth; ++n) {
    const double child = k.stage_length(n);
    std::vector<Interval> next;
    for (const auto& iv : stage) {
      next.push_back({iv.lo, iv.lo + child});
      next.push_back({iv.hi - child, iv.hi});
    }
    stage = std::move(next);
  }
  const double w = 0.5 / static_cast<double>(stage.size());
  std::vector<Atom> atoms;
  for (const auto& iv : stage) {
    atoms.push_back({iv.lo, w});
    atoms.push_back({iv.hi, w});
  }
  std::sort(atoms.begin(), atoms.end(), [](const Atom& x, const Atom& y) { return x.x < y.x; });
  return StieltjesMeasure::atomic(std::move(atoms));
}

namespace {

constexpr int kCantorDepth = 6;

SVCSet fat_k(double shift = 0.0) { return SVCSet({shift, shift + 1.0}, RemovalSchedule{1.0, 4.0}); }
SVCSet thin_k() { return SVCSet({0.0, 1.0}, RemovalSchedule{1.0, 3.0}); }

NearlyClosedSet censored(const NearlyClosedSet& e, bool drop_l, bool drop_r) {
  return NearlyClosedSet(e.pieces(), e.l_in_E() && !drop_l, e.r_in_E() && !drop_r);
}

}  // namespace

std::vector<CatalogEntry> catalog() {
  std::vector<CatalogEntry> out;
  const auto fat = NearlyClosedSet::svc(fat_k());
  const auto lam = StieltjesMeasure::restricted_lebesgue(fat);
  out.push_back({"fat-cantor", fat, lam,
                 "Fat Cantor set K (removal 4^-n, |K| = 1/2) with mu = 1_K dx",
                 "LY17", "reflecting at 0 and 1", std::nullopt});

  const auto thin = NearlyClosedSet::svc(thin_k());
  out.push_back({"cantor-function", thin, cantor_function_atoms(thin_k(), kCantorDepth),
                 "Middle-thirds Cantor set with the Cantor-function measure",
                 "LY19-2", "reflecting at 0 and 1",
                 "atoms at the endpoints of the 64 stage-6 intervals"});

  std::vector<NearlyClosedSet::Piece> periods;
  for (int n = -2; n <= 2; ++n) periods.push_back(NearlyClosedSet::generator_piece(fat_k(n)));
  const NearlyClosedSet periodic(periods);
  out.push_back({"periodic-fat-cantor", periodic, StieltjesMeasure::restricted_lebesgue(periodic),
                 "Union of K + n for n = -2..2, truncated from the Z-periodic set",
                 "BEPP08", "reflecting at -2 and 3", std::nullopt});

  auto lam0 = lam;
  lam0.l0 = 0.0;
  out.push_back({"fat-cantor-censored-0", censored(fat, true, false), lam0, "K minus {0} with mu = 1_K dx",
                 "LY17, censored", "Dirichlet at 0", std::nullopt});

  auto lam01 = lam0;
  lam01.r0 = 1.0;
  out.push_back({"fat-cantor-censored-01", censored(fat, true, true), lam01, "K minus {0, 1} with mu = 1_K dx",
                 "LY17, censored", "Dirichlet at 0 and 1", std::nullopt});
  return out;
}

CatalogEntry catalog_entry(const std::string& name) {
  for (auto& e : catalog())
    if (e.name == name) return e;
  fail(ErrorCode::InvalidInput, "no catalog entry named \"" + name + "\"");
}

}  // namespace quasidiff
