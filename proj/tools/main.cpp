#include "ancov/cli.hpp"

int main(int argc, char** argv) { return ancov::run_cli(argc, argv); }
