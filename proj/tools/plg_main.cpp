#include "plg/cli.hpp"

int main(int argc, char** argv) { return plg::run_cli(argc, argv); }
