#include "edlab/cli.hpp"

int main(int argc, char** argv) { return edlab::cli_main(argc, argv); }
