#include "snml/cli.hpp"

int main(int argc, char** argv) { return snml::cli::run(argc, argv); }
