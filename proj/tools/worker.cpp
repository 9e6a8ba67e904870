#include "treelearn/cli.hpp"

int main(int argc, char** argv) { return treelearn::worker_main(argc, argv); }
