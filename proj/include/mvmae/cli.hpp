#pragma once

namespace mvmae {

// Entry point of the mvmae tool. Returns the process exit code: 0 ok,
// 1 usage, 2 validation (including parse and I/O failures), 3 numerical.
int run_cli(int argc, char** argv);

}  // namespace mvmae
