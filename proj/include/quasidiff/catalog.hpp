#pragma once

#include <optional>
#include <string>
#include <vector>

#include "quasidiff/measures.hpp"

namespace quasidiff {

struct CatalogEntry {
  std::string name;
  NearlyClosedSet e;
  StieltjesMeasure mu;  // symmetrizing measure; the speed measure is 2 mu
  std::string description;
  std::string literature;
  std::string boundary;
  /// Set when mu only approximates the intended measure; the process then
  /// lives on the support of the approximation.
  std::optional<std::string> approximation;
};

/// Atoms at the endpoints of the stage-depth intervals of a generator, each
/// interval splitting its mass 2^-depth evenly between its ends.
StieltjesMeasure cantor_function_atoms(const SVCSet& k, int depth);

std::vector<CatalogEntry> catalog();
/// Throws InvalidInput for unknown names.
CatalogEntry catalog_entry(const std::string& name);

}  // namespace quasidiff
