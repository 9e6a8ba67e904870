#include "treelearn/cli.hpp"

int main(int argc, char** argv) { return treelearn::coordinator_main(argc, argv); }
