#include <iostream>

#include "finslerlab/app.hpp"

int main(int argc, char** argv) { return finslerlab::app::run(argc, argv, std::cout, std::cerr); }
