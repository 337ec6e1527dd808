#include "fedsurv/cli.hpp"

int main(int argc, char** argv) { return fedsurv::cli_main(argc, argv); }
