// The gravicav command line, callable in-process.
#ifndef GRAVICAV_CLI_HPP
#define GRAVICAV_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace gravicav {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Runs one subcommand. `args` excludes the program name. Diagnostics go to
/// `err`, progress notes to `log`.
int run_cli(const std::vector<std::string>& args, std::ostream& log, std::ostream& err);

}  // namespace gravicav

#endif  // GRAVICAV_CLI_HPP
