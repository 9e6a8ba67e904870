#include "treelearn/harness/launch.hpp"

int main(int argc, char** argv) { return treelearn::launch_main(argc, argv); }
