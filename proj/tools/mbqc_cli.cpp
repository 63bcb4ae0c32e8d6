#include "mbqc/cli.hpp"

int main(int argc, char** argv) { return mbqc::run_cli(argc, argv); }
