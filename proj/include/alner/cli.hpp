#pragma once

namespace alner::cli {

/// Full command-line entry point (subcommands run, grid, ablation, stats,
/// validate, synth). Returns the process exit code: 0 success, 1 config
/// error, 2 data error.
int run(int argc, const char* const* argv);

}  // namespace alner::cli
