#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace probe_latency::cli {

/// Entry point behind the `probe_latency` binary. `args` excludes argv[0].
/// Returns the process exit status: 0 success, 1 pipeline error, 2 usage or
/// configuration error.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace probe_latency::cli
