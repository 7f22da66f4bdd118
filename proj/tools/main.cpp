#include "magic_meter/cli.hpp"

int main(int argc, char** argv) { return magic_meter::run_cli(argc, argv); }
