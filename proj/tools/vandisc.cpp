#include "vandisc/cli.hpp"

int main(int argc, char** argv) { return vandisc::cli::run(argc, argv); }
