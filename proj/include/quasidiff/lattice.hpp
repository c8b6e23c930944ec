#pragma once

#include <optional>
#include <string>

#include "quasidiff/forms.hpp"

namespace quasidiff {

/// Fukushima subspace of the natural-scale form on E, parametrized by its
/// characteristic set G.
struct SubspaceDescriptor {
  NearlyClosedSet e;
  MeasurableSubset g;
  ScaleFunction scale;
  FormDescriptor form;
};

/// Certifies G via scale_from_charset; G = E gives the natural scale.
SubspaceDescriptor make_subspace(const NearlyClosedSet& e, const MeasurableSubset& g, const StieltjesMeasure& mu,
                                 double tol);
/// The maximal element, G = E.
SubspaceDescriptor full_subspace(const NearlyClosedSet& e, const StieltjesMeasure& mu);

enum class Order { Equal, Subset, Superset, Incomparable, Unknown };
std::string to_string(Order o);

struct Comparison {
  Order order;
  Bracket a_minus_b;  // |G_A \ G_B|
  Bracket b_minus_a;
};
Comparison compare(const SubspaceDescriptor& a, const SubspaceDescriptor& b, double tol);

enum class Decision { Yes, No, Unknown };
std::string to_string(Decision d);

struct ProperVerdict {
  Decision decision;
  Bracket defect;  // |E \ G|
};
ProperVerdict is_proper(const SubspaceDescriptor& d, double tol);

/// Throws Undecided when the bracket for |E| straddles zero.
Decision has_proper_subspaces(const NearlyClosedSet& e, double tol);

/// The G = empty descriptor when E is nowhere dense, otherwise nullopt.
std::optional<SubspaceDescriptor> minimal_subspace(const NearlyClosedSet& e, const StieltjesMeasure& mu,
                                                   double tol = 1e-9);

/// A proper subspace, or nullopt when |E| = 0. Nowhere dense E gets G = empty;
/// otherwise the first interval (c,d) of E gets G = U(c,d) u (E \ (c,d)).
std::optional<SubspaceDescriptor> construct_proper(const NearlyClosedSet& e, const StieltjesMeasure& mu,
                                                   double tol = 1e-9);

struct Classification {
  Decision proper_subspaces;
  std::string minimal;  // "yes", "no" or "trivially-unique"
  Bracket measure;
  bool nowhere_dense;
};
Classification classify(const NearlyClosedSet& e, double tol);

/// Subspace candidate on a general base scale: the candidate scale must have
/// density in {0,1} with respect to the base scale, equal to 1 on gaps.
struct GeneralSubspace {
  NearlyClosedSet e;
  ScaleFunction base;
  StieltjesMeasure mu;
  ScaleFunction candidate;
};

/// Transports to the natural scale of the base: E -> s(E), mu -> mu o s^-1.
/// Throws NotInSs with a witness when the density leaves {0,1}, and
/// Unsupported when s(E) is not representable (base not affine on [l, r]).
SubspaceDescriptor to_natural(const GeneralSubspace& d, double tol);

}  // namespace quasidiff
