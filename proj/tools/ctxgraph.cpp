#include "ctxgraph/cli.hpp"

int main(int argc, char** argv) { return ctxgraph::cli::run_main(argc, argv); }
