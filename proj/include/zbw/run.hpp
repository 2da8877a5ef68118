#pragma once

// Command-line front end: subcommand dispatch, CSV/JSON emission, summaries.
// All file writes happen on the calling thread; worker pools only ever
// compute rows.

#include <iosfwd>
#include <string>
#include <vector>

#include "zbw/config.hpp"

namespace zbw::io {

inline constexpr const char* kToolName = "zbw";
inline constexpr const char* kToolVersion = "1.0.0";

// one CSV cell: '.' decimal separator, 17 significant digits, locale-free
std::string format_cell(double x);
std::string format_cell(long x);
std::string format_num(double x);
std::string format_num(long x);

// '#'-prefixed header naming the tool version and the config hash
std::string file_header(const RunConfig& cfg, const std::string& command);

// Dispatch a command line (without the program name). Returns the process
// exit code: 0 success, 1 invariant failure, 2 usage or config error.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace zbw::io
