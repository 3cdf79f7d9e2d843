#include <iostream>

#include "tarml/app/cli.hpp"

int main(int argc, char** argv) { return tarml::app::run_cli(argc, argv, std::cout, std::cerr); }
