#pragma once

namespace igae::cli {

// Parses argv, dispatches one subcommand and returns the process exit code.
int run(int argc, char** argv);

}  // namespace igae::cli
