#include "meshpad/cli.hpp"

int main(int argc, char** argv) { return meshpad::cli::run(argc, argv); }
