#include "alner/cli.hpp"

int main(int argc, char** argv) { return alner::cli::run(argc, argv); }
