#include "seqclf/cli.hpp"

int main(int argc, char** argv) { return seqclf::cli_main(argc, argv); }
