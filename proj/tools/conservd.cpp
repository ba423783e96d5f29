#include "conservd/app.hpp"

int main(int argc, char** argv) { return conservd::run_cli(argc, argv); }
