#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "labqg/gateway.hpp"

namespace labqg {

/// Runs one `labqg` command line. Exit codes: 0 success, 1 domain error,
/// 2 usage error. `args` excludes the program name.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                 std::shared_ptr<ChatTransport> transport = {});

int cli_dispatch(int argc, char** argv);

}  // namespace labqg
