#include "mcsim/cli.hpp"

int main(int argc, char** argv) { return mcsim::cli::run_main(argc, argv); }
