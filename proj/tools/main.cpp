#include "labqg/cli.hpp"

int main(int argc, char** argv) { return labqg::cli_dispatch(argc, argv); }
