#pragma once

#include "critforms/config.hpp"

#include <iosfwd>
#include <string>

namespace critforms {

struct RunResult {
    int exit_code = 0;          // 0 ok, 2 indeterminate verdict, 1 error
    std::string report_json;    // full report (config + hash + results)
    std::string csv;            // per-level / per-node table when applicable
};

/// Execute one configured task; writes <out>.json / <out>.csv when `out`
/// is set. Throws on invalid input; callers map exceptions to exit code 1.
RunResult run_task(const RunConfig& config, std::ostream& log);

}  // namespace critforms
