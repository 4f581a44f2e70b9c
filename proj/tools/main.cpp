#include "stabcert/cli.hpp"

int main(int argc, char** argv) { return stabcert::run_cli(argc, argv); }
