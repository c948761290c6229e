#include "contentious/cli.hpp"

int main(int argc, char** argv) { return contentious::run_cli(argc, argv); }
