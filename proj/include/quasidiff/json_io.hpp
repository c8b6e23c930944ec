#pragma once

#include "json.hpp"

#include "quasidiff/forms.hpp"
#include "quasidiff/lattice.hpp"
#include "quasidiff/markov.hpp"

namespace quasidiff::io {

using nlohmann::json;

// Doubles are written with 17 significant digits, so every object re-parses
// to an equal value. Infinite endpoints use the strings "-inf" and "inf".

json to_json(const MeasurableSubset& a);
MeasurableSubset subset_from_json(const json& j);

json to_json(const NearlyClosedSet& e);
NearlyClosedSet set_from_json(const json& j);

json to_json(const StieltjesMeasure& m);
StieltjesMeasure measure_from_json(const json& j);

/// The set E is not embedded; scale_from_json takes it from the context.
json to_json(const ScaleFunction& s);
ScaleFunction scale_from_json(const json& j, const NearlyClosedSet& e);

json to_json(const FormDescriptor& f);
FormDescriptor form_from_json(const json& j);

/// {"knots":[...],"slopes":[...],"v0":v} with an optional "coordinate"
/// scale object; {"scale_of":true} stands for the form's own scale.
json to_json(const TestFunction& f);
TestFunction test_function_from_json(const json& j, const FormDescriptor& form);

json to_json(const Bracket& b);

json to_json(const SubspaceDescriptor& d);
json to_json(const EmpiricalReport& r);

}  // namespace quasidiff::io
