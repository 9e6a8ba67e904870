#include "treelearn/cli.hpp"

int main(int argc, char** argv) { return treelearn::eval_main(argc, argv); }
