#include "ergnn/cli.hpp"

int main(int argc, char** argv) { return ergnn::cli::run(argc, argv); }
