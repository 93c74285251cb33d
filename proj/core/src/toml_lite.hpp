#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

namespace causal_probe::toml {

/// Parses the TOML subset used by run configs and prompt packs into a JSON
/// tree: tables, arrays of tables, dotted keys, strings (basic, literal,
/// multi-line), integers, floats, booleans, arrays and inline tables.
/// Dates are not supported. Throws Error(ParseError) with a line number.
nlohmann::json parse(std::string_view text);

/// A TOML basic string literal for `s`, quotes included.
std::string quote(std::string_view s);

}  // namespace causal_probe::toml
