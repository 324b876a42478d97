#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace codql::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

/// Environment variable naming the default output root.
inline constexpr const char* kOutRootEnv = "CODQL_OUT_ROOT";

/// Runs one subcommand. `args` excludes the program name. Progress and
/// diagnostics go to `err`; artifacts go to the output directory.
/// Returns 0 on success, 1 on usage or config errors, 2 on runtime errors.
int run(const std::vector<std::string>& args, std::ostream& err);

}  // namespace codql::cli
