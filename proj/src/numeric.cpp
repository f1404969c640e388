#include "axloc/numeric.hpp"

#include "axloc/errors.hpp"
#include "axloc/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace axloc {

double Rng::laplace(double scale)
{
    // Exponential magnitude with a fair sign bit.
    const std::uint64_t bits = engine_();
    const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
    const double magnitude = -scale * std::log1p(-u);
    return (bits & 1U) ? magnitude : -magnitude;
}

double median(std::span<const double> values)
{
    if (values.empty())
        throw ArgumentError("median of an empty sequence");
    std::vector<double> v(values.begin(), values.end());
    const auto n = v.size();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1)
        return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

double mean(std::span<const double> values)
{
    if (values.empty())
        throw ArgumentError("mean of an empty sequence");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

std::string format_decimal(double value, int min_fraction)
{
    char buf[128];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
    if (ec != std::errc{})
        return format_fixed(value, min_fraction);
    std::string out(buf, end);
    auto dot = out.find('.');
    if (dot == std::string::npos) {
        out += '.';
        dot = out.size() - 1;
    }
    const auto fraction = static_cast<int>(out.size() - dot - 1);
    if (fraction < min_fraction)
        out.append(static_cast<std::size_t>(min_fraction - fraction), '0');
    return out;
}

std::string format_fixed(double value, int digits)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.*f", digits, value);
    std::string out(buf);
    // "-0.000" reads badly in reports.
    if (out.find_first_not_of("-0.") == std::string::npos && out.front() == '-')
        out.erase(0, 1);
    return out;
}

bool parse_double(std::string_view text, double& out)
{
    if (text.empty())
        return false;
    const char* first = text.data();
    if (*first == '+')
        ++first;
    auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

bool parse_index(std::string_view text, std::size_t& out)
{
    if (text.empty())
        return false;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

} // namespace axloc
