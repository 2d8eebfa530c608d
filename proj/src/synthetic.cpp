#include "webpar/synthetic.hpp"

#include <array>
#include <random>
#include <set>
#include <string>

#include "webpar/error.hpp"

namespace webpar {

namespace {

// Container tags only: none of them is void, so to_html round-trips.
constexpr std::array<const char*, 12> kTags = {"div", "span", "section", "article", "ul",     "nav",
                                               "header", "footer", "main", "aside",  "strong", "em"};

}  // namespace

DomTree generate_tree(const SyntheticTreeSpec& spec) {
  if (spec.target_node_count == 0) throw Error(ErrorKind::configuration, "target node count must be >= 1");
  if (spec.min_children > spec.max_children) {
    throw Error(ErrorKind::configuration, "min_children exceeds max_children");
  }
  if (spec.max_children == 0 && spec.target_node_count > 1) {
    throw Error(ErrorKind::configuration, "max_children = 0 cannot grow beyond a single node");
  }
  if (!(spec.depth_bias >= 0.0 && spec.depth_bias <= 1.0)) {
    throw Error(ErrorKind::configuration, "depth_bias must lie in [0, 1]");
  }

  std::mt19937_64 rng(spec.seed);
  auto uniform = [&rng](std::uint64_t lo, std::uint64_t hi) {
    return lo + rng() % (hi - lo + 1);
  };
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  auto attrs = [&] { return static_cast<std::uint32_t>(uniform(0, spec.max_attributes)); };

  DomTree tree;
  tree.add_root("html", attrs());

  // Open nodes ordered by (depth, id): begin() is the shallowest, the last
  // element the deepest.
  std::set<std::pair<std::uint32_t, NodeId>> open{{1, 0}};
  while (tree.size() < spec.target_node_count) {
    const bool deep = spec.depth_bias > 0.0 && unit() < spec.depth_bias;
    auto it = deep ? std::prev(open.end()) : open.begin();
    const NodeId parent = it->second;
    open.erase(it);

    const std::uint64_t remaining = spec.target_node_count - tree.size();
    std::uint64_t k = uniform(spec.min_children, spec.max_children);
    if (k == 0 && open.empty()) k = 1;  // never strand the growth
    k = std::min(k, remaining);
    for (std::uint64_t c = 0; c < k; ++c) {
      const auto tag = kTags[uniform(0, kTags.size() - 1)];
      const NodeId child = tree.add_child(parent, tag, attrs());
      open.emplace(tree.node(child).depth, child);
    }
  }

  tree.set_source_byte_size(to_html(tree).size());
  return tree;
}

}  // namespace webpar
