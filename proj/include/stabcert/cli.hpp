#ifndef STABCERT_CLI_HPP
#define STABCERT_CLI_HPP

namespace stabcert {

/// Command-line entry point. Exit codes: 0 analyses completed (verdicts,
/// including negative ones, live in the report), 1 usage error, 2
/// definition-file error, 3 runtime failure (budget exceeded,
/// non-convergence).
int run_cli(int argc, const char* const* argv);

}  // namespace stabcert

#endif  // STABCERT_CLI_HPP
