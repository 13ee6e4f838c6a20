#include "affmod/cli.hpp"

int main(int argc, char** argv) { return affmod::run_cli(argc, argv); }
