#include "arit/cli/commands.hpp"

int main(int argc, char** argv) { return arit::cli::run_main(argc, argv); }
