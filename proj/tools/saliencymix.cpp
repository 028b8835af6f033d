#include "saliencymix/cli.hpp"

int main(int argc, char** argv) { return saliencymix::cli::run(argc, argv); }
