#include "adnet/runner.hpp"

int main(int argc, char** argv) { return adnet::cli(argc, argv); }
