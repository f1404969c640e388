#ifndef AXLOC_NUMERIC_HPP
#define AXLOC_NUMERIC_HPP

#include <span>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace axloc {

/// Median with the even-count convention: mean of the two central order
/// statistics. Throws ArgumentError on empty input.
double median(std::span<const double> values);

double mean(std::span<const double> values);

/// Shortest round-trip fixed-point text with at least `min_fraction` digits
/// after the decimal point ("8" -> "8.000").
std::string format_decimal(double value, int min_fraction = 3);

/// Fixed-point text rounded to exactly `digits` fractional digits.
std::string format_fixed(double value, int digits = 3);

/// Parses a complete decimal number; returns false on any trailing garbage.
bool parse_double(std::string_view text, double& out);
bool parse_index(std::string_view text, std::size_t& out);

} // namespace axloc

#endif
