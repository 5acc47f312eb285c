#pragma once

#include <string>

namespace cfpred {

// Shortest decimal string that parses back to exactly `value`.
std::string format_number(double value);

// Parses a whole string as a double; false on any trailing garbage.
bool parse_number(const std::string& text, double& value);

}  // namespace cfpred
