#include "ddsv/cli.hpp"

int main(int argc, char** argv) { return ddsv::cli::run(argc, argv); }
