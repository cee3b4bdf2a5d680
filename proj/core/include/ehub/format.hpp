#pragma once

#include <string>
#include <string_view>

namespace ehub {

// Shortest decimal text that parses back to the same double. Used for every
// CSV/JSON number the tools write so outputs are byte-stable across runs.
std::string format_double(double value);

// Identifier restricted to [A-Za-z0-9_]; other characters become '_'.
std::string sanitize_identifier(std::string_view text);

}  // namespace ehub
