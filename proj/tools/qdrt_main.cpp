#include <qdrt/cli.hpp>

int main(int argc, char** argv) { return qdrt::cli::run_cli(argc, argv); }
