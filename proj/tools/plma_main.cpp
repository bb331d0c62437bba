#include "plma/cli.hpp"

int main(int argc, char** argv) { return plma::run_cli(argc, argv); }
