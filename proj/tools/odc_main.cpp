#include "odc/cli.hpp"

int main(int argc, char** argv) { return odc::cli_main(argc, argv); }
