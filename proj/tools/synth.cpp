#include "treelearn/cli.hpp"

int main(int argc, char** argv) { return treelearn::synth_main(argc, argv); }
