#include "fresco/cli.hpp"
int main(int argc, char** argv) { return fresco::cli_main(argc, argv); }
