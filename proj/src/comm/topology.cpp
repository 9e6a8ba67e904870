#include "treelearn/comm/topology.hpp"

#include <stdexcept>
#include <string>

namespace treelearn {

TreePosition build_topology(uint32_t nodes, uint32_t rank) {
  if (nodes == 0) throw std::invalid_argument("topology needs at least one node");
  if (rank >= nodes) {
    throw std::invalid_argument("rank " + std::to_string(rank) + " outside [0, " +
                                std::to_string(nodes) + ")");
  }
  TreePosition p;
  p.rank = rank;
  p.nodes = nodes;
  if (rank > 0) p.parent = (rank - 1) / 2;
  for (uint64_t c : {2ull * rank + 1, 2ull * rank + 2}) {
    if (c < nodes) p.children.push_back(static_cast<uint32_t>(c));
  }
  return p;
}

uint32_t tree_depth(uint32_t nodes) {
  uint32_t depth = 0;
  uint64_t covered = 0;
  while (covered < nodes) {
    covered = 2 * covered + 1;
    ++depth;
  }
  return depth;
}

}  // namespace treelearn
