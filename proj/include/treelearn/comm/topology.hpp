#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "treelearn/comm/wire.hpp"

namespace treelearn {

// Position of one rank in the heap-ordered binary tree over m nodes:
// parent(r) = (r - 1) / 2, children(r) = {2r + 1, 2r + 2} clipped to m.
struct TreePosition {
  uint32_t rank = 0;
  uint32_t nodes = 1;
  std::optional<uint32_t> parent;
  std::vector<uint32_t> children;  // left first
  bool operator==(const TreePosition&) const = default;
};

// Throws std::invalid_argument when nodes == 0 or rank >= nodes.
TreePosition build_topology(uint32_t nodes, uint32_t rank);

// Number of levels of the tree, i.e. 1 for a single node.
uint32_t tree_depth(uint32_t nodes);

// A rank's tree position plus the data-plane endpoints of its neighbours.
struct TreeTopology {
  TreePosition position;
  std::optional<wire::Endpoint> parent;
  std::vector<wire::Endpoint> children;
};

}  // namespace treelearn
