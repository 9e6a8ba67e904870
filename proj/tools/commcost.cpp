#include "treelearn/cli.hpp"

int main(int argc, char** argv) { return treelearn::commcost_main(argc, argv); }
