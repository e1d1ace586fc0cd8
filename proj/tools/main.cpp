#include "cli.hpp"

int main(int argc, char** argv) { return ploc::cli_main(argc, argv); }
