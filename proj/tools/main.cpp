#include "cli.hpp"

int main(int argc, char** argv) { return spinal::cli_main(argc, argv); }
