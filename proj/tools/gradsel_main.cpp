#include "gradsel/cli.hpp"

int main(int argc, char** argv) { return gradsel::run_cli(argc, argv); }
