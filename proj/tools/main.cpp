#include "rssmm_cli.hpp"

int main(int argc, char** argv) { return rssmm::cli::run(argc, argv); }
