#ifndef TSAGENT_ANCHOR_PARSE_HPP
#define TSAGENT_ANCHOR_PARSE_HPP

#include "tsagent/anchors.hpp"

#include <string>

namespace tsa {

// Extracts the first balanced JSON object from free-form text (code fences,
// leading prose and trailing commentary tolerated). Throws ParseError when no
// balanced object exists.
std::string extract_json_object(const std::string& raw);

// Parses and validates a model response for the given task.
//  - ParseError: no parseable JSON object
//  - SchemaError: missing/invalid required field (names the field)
//  - LowConfidenceError: valid set but confidence below the threshold
// Out-of-range anchors are dropped, out-of-bound values clipped, extras
// normalized per the AnchorSet invariants.
AnchorSet parse_anchor_response(const std::string& raw, Task task, const WindowContext& ctx,
                                const AnchorLimits& lim = {});

// Canonical serialization; parse(serialize(s)) round-trips exactly for
// conforming sets.
std::string serialize_anchor_set(const AnchorSet& s);

} // namespace tsa

#endif // TSAGENT_ANCHOR_PARSE_HPP
