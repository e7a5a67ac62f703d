#include "mvmae/cli.hpp"

int main(int argc, char** argv) { return mvmae::run_cli(argc, argv); }
