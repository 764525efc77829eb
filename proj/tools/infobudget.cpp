#include "infobudget/cli.hpp"

int main(int argc, char** argv) { return infobudget::cli::execute(argc, argv); }
