#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace sharecard::cli {

/// Entry point behind the `sharecard` binary. `args` excludes argv[0].
/// Returns the process exit code; never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::map<std::string, std::string>& env);

/// Asks a foreground `lab` or `serve` command to shut down (SIGINT does the same).
void request_stop();

}  // namespace sharecard::cli
