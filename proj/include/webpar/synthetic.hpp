#pragma once

#include <cstdint>

#include "webpar/dom.hpp"

namespace webpar {

struct SyntheticTreeSpec {
  std::uint64_t target_node_count = 1;
  std::uint32_t min_children = 1;
  std::uint32_t max_children = 4;
  // 0 grows breadth-first (wide, shallow); 1 always extends the deepest
  // open node (narrow, deep).
  double depth_bias = 0.0;
  std::uint32_t max_attributes = 3;
  std::uint64_t seed = 0;
};

// Deterministic for a fixed spec. The generated tree has exactly
// target_node_count nodes. Throws Error(configuration) for unsatisfiable specs.
DomTree generate_tree(const SyntheticTreeSpec& spec);

}  // namespace webpar
