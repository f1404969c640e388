#include "axloc/errors.hpp"

namespace axloc {

std::string ParseError::format(Kind kind, std::size_t line, const std::string& detail)
{
    std::string out;
    switch (kind) {
    case Kind::missing_header: out = "missing header"; break;
    case Kind::bad_field: out = "parse error"; break;
    case Kind::duplicate_index: out = "duplicate index"; break;
    case Kind::bad_json: out = "malformed JSON"; break;
    }
    if (line != 0)
        out += " at line " + std::to_string(line);
    if (!detail.empty())
        out += ": " + detail;
    return out;
}

const char* VolumeFormatError::kind_name(Kind kind) noexcept
{
    switch (kind) {
    case Kind::bad_magic: return "bad magic";
    case Kind::truncated_header: return "truncated header";
    case Kind::bad_header: return "bad header";
    case Kind::truncated_payload: return "truncated payload";
    case Kind::dimension_mismatch: return "dimension mismatch";
    case Kind::non_positive_spacing: return "non-positive spacing";
    case Kind::invalid_dimension: return "invalid dimension";
    }
    return "volume format error";
}

} // namespace axloc
