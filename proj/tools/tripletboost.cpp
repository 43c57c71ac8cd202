#include <tboost/cli.hpp>

#include <iostream>

int main(int argc, char** argv) { return tboost::cli::run(argc, argv, std::cout, std::cerr); }
