#pragma once

#include <iosfwd>

namespace ddrgs {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// The `ddrgs` command line: train, render, eval, serve, fixture, fd-check,
/// ingest-colmap. Normal output goes to `out`; usage text and log lines go
/// to `err` (level from the DDR_LOG environment variable).
///
/// Exit codes: 0 success, 2 usage or configuration error, 1 any other failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ddrgs
