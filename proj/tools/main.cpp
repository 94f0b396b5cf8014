#include "planarion/cli.hpp"

int main(int argc, char** argv) { return planarion::cli::run(argc, argv); }
