#include "tcsim/cli.hpp"

int main(int argc, char** argv) { return tcsim::cli::dispatch(argc, argv); }
