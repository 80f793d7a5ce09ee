#pragma once

namespace odc {

/// Entry point behind the `odc` binary. Exit codes: 0 success, 1 usage or
/// config errors, 2 numeric failures.
int cli_main(int argc, const char* const* argv);

}  // namespace odc
