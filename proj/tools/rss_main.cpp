#include "rss/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return rss::run_cli(argc, argv, std::cout, std::cerr); }
