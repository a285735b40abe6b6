#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace ni_swarm::cli {

/// Exit codes. Stable across releases.
enum ExitCode : int {
  kExitOk = 0,
  kExitMismatch = 1,  // check disagrees with the annotation, or --strict found a violation
  kExitInput = 2,     // bad arguments, schema violation, unparseable model
  kExitIo = 3,        // file could not be read or written
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs one command line (args[0] is the program name). Reports go to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// FNV-1a, 64 bit, printed as 16 hex digits.
std::string fnv1a_hex(std::uint64_t h);

}  // namespace ni_swarm::cli
