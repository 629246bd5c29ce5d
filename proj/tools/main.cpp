#include "bmloop/cli.hpp"

int main(int argc, char** argv) { return bmloop::cli::run(argc, argv); }
