#include "rubricrl/commands.hpp"

int main(int argc, char** argv) { return rubricrl::run_cli(argc, argv); }
