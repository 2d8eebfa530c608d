#include "webpar/dom.hpp"

#include <algorithm>

#include "webpar/error.hpp"

namespace webpar {

NodeId DomTree::add_root(std::string tag, std::uint32_t attribute_count) {
  if (!nodes_.empty()) throw Error(ErrorKind::input, "tree already has a root");
  nodes_.push_back(DomNode{std::move(tag), attribute_count, 1, kNoParent, {}});
  return 0;
}

NodeId DomTree::add_child(NodeId parent, std::string tag, std::uint32_t attribute_count) {
  if (parent >= nodes_.size()) throw Error(ErrorKind::input, "add_child: unknown parent");
  const auto id = static_cast<NodeId>(nodes_.size());
  const auto depth = nodes_[parent].depth + 1;
  nodes_.push_back(DomNode{std::move(tag), attribute_count, depth, parent, {}});
  nodes_[parent].children.push_back(id);
  return id;
}

std::vector<std::uint64_t> width_profile(const DomTree& tree) {
  std::vector<std::uint64_t> widths;
  for (const auto& n : tree.nodes()) {
    if (n.depth > widths.size()) widths.resize(n.depth, 0);
    ++widths[n.depth - 1];
  }
  return widths;
}

PageFeatures compute_features(const DomTree& tree, std::string page_id) {
  if (tree.empty()) throw Error(ErrorKind::empty_document, "cannot compute features of an empty tree");

  PageFeatures f;
  f.page_id = std::move(page_id);
  f.dom_size = tree.size();
  f.web_page_size = tree.source_byte_size();
  for (const auto& n : tree.nodes()) {
    f.attribute_count += n.attribute_count;
    if (n.children.empty()) ++f.number_of_leaves;
  }

  const auto widths = width_profile(tree);
  f.tree_depth = static_cast<std::uint32_t>(widths.size());
  f.max_tree_width = *std::max_element(widths.begin(), widths.end());

  const double size = static_cast<double>(f.dom_size);
  const double depth = static_cast<double>(f.tree_depth);
  f.avg_tree_width = size / depth;
  f.avg_work_per_level = size / depth;
  // max / (size / depth) rearranged so exact fractions round once.
  f.max_avg_width_ratio = static_cast<double>(f.max_tree_width * f.tree_depth) / size;
  return f;
}

std::array<double, kFeatureCount> feature_vector(const PageFeatures& f) {
  return {
      static_cast<double>(f.dom_size),       static_cast<double>(f.attribute_count),
      static_cast<double>(f.web_page_size),  static_cast<double>(f.tree_depth),
      static_cast<double>(f.number_of_leaves), f.avg_tree_width,
      static_cast<double>(f.max_tree_width), f.max_avg_width_ratio,
      f.avg_work_per_level,
  };
}

std::string to_html(const DomTree& tree) {
  std::string out;
  if (tree.empty()) return out;

  // Explicit stack: synthetic trees can be thousands of levels deep.
  struct Frame {
    NodeId id;
    std::size_t next_child;
  };
  std::vector<Frame> stack{{0, 0}};
  auto open_tag = [&](NodeId id) {
    const auto& n = tree.node(id);
    out += '<';
    out += n.tag;
    for (std::uint32_t a = 0; a < n.attribute_count; ++a) {
      out += " data-a";
      out += std::to_string(a);
      out += "=\"";
      out += std::to_string(id);
      out += '"';
    }
    out += '>';
  };
  open_tag(0);
  while (!stack.empty()) {
    auto& top = stack.back();
    const auto& n = tree.node(top.id);
    if (top.next_child < n.children.size()) {
      const NodeId child = n.children[top.next_child++];
      open_tag(child);
      stack.push_back({child, 0});
    } else {
      out += "</";
      out += n.tag;
      out += '>';
      stack.pop_back();
    }
  }
  out += '\n';
  return out;
}

}  // namespace webpar
