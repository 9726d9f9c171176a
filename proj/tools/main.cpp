#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return tarn::cli::run(argc, argv, std::cout, std::cerr); }
