#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ddsv/market.hpp"

namespace ddsv::cli {

/// Runs one command. Returns 0 on success, 2 on input errors and 3 on
/// numerical failures. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

/// key=value lines, `#` starts a comment. Unset keys keep their defaults.
ModelParams parse_params(std::string_view text, const std::string& source = "params");
std::string format_params(const ModelParams& p);

}  // namespace ddsv::cli
