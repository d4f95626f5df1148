#include "steklov/cli.hpp"

int main(int argc, char** argv) { return steklov::cli_main(argc, argv); }
