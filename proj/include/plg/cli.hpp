#pragma once

#include <string>

namespace plg {

inline constexpr const char* kToolVersion = "1.0.0";

// Format tags and versions of every file type the tool reads or writes.
std::string version_matrix();

// Entry point of the command-line tool; returns the process exit code
// (0 success, 1 usage error, 2 data or runtime error).
int run_cli(int argc, char** argv);

}  // namespace plg
