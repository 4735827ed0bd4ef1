#include "commands.hpp"

int main(int argc, char** argv) { return igae::cli::run(argc, argv); }
