#include "rotcouette/cli.hpp"

int main(int argc, char** argv) { return rotcouette::run_cli(argc, argv); }
