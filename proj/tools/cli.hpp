#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace natal_risk::cli {

/// Runs one command line (without the program name). Errors are written to
/// `err` as a JSON object and reported through a nonzero return value.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace natal_risk::cli
