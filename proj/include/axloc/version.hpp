#ifndef AXLOC_VERSION_HPP
#define AXLOC_VERSION_HPP

namespace axloc {
inline constexpr const char* kVersion = "0.1.0";
}

#endif
