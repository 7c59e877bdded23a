#pragma once

namespace spinal {

// Command-line entry point. Exit codes: 0 success or pass, 1 tolerance
// failure, 2 usage or model error.
int cli_main(int argc, char** argv);

}  // namespace spinal
