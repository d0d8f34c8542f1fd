#include <iostream>

#include "refclass/cli.hpp"

int main(int argc, char** argv) { return refclass::dispatch(argc, argv, std::cout, std::cerr); }
