// Command line front end. Subcommands are wired up in pipeline/cli.hpp so the
// binary stays a thin shell.
#include "celldx/pipeline/cli.hpp"

int main(int argc, char** argv) { return celldx::cli_main(argc, argv); }
