#include "persumm/cli.hpp"

int main(int argc, char** argv) { return persumm::cli::run(argc, argv); }
