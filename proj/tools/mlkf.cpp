#include "cli.hpp"

int main(int argc, char** argv) { return mlkf::cli::run(argc, argv); }
