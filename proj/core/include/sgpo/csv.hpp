#pragma once

#include <ostream>
#include <span>
#include <string>

namespace sgpo {

// Shortest round-trip decimal form (std::to_chars); deterministic bytes for
// deterministic doubles.
std::string format_double(double v);

void write_csv_row(std::ostream& out, std::span<const std::string> cells);

}  // namespace sgpo
