#ifndef AXLOC_CLI_HPP
#define AXLOC_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace axloc::cli {

/// Process exit status, one per outcome class.
enum ExitCode : int {
    kOk = 0,
    kIoError = 1,     ///< unreadable/unwritable files and other runtime failures
    kRejected = 2,    ///< localized, but the gatekeeper rejected the result
    kNoConsensus = 3, ///< RANSAC found no consensus (verdict lists R0)
    kParseError = 4,  ///< malformed CSV, JSON or volume container; predictions missing a slice
    kUsageError = 5,  ///< bad flags, unknown landmark, empty interval, zero slope
};

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace axloc::cli

#endif
