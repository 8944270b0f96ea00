#include "cli.hpp"

int main(int argc, char** argv) { return emofuse::cli::run(argc, argv); }
