#include "gffdrift/runner.hpp"

int main(int argc, char** argv) { return gffdrift::run_cli(argc, argv); }
