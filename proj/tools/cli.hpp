#ifndef ICBPL_TOOLS_CLI_HPP
#define ICBPL_TOOLS_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace icbpl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntimeError = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `pedcc` tool. args[0] is the program name.
/// Subcommands: gen, knn, train, assign, eval, eval-loss.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace icbpl::cli

#endif  // ICBPL_TOOLS_CLI_HPP
