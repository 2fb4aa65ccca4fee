#include "dynenh/cli.hpp"

int main(int argc, char** argv) { return dynenh::cli::run(argc, argv); }
