#include "cliqueseg/cli.hpp"

int main(int argc, char** argv) { return cliqueseg::cli_main(argc, argv); }
