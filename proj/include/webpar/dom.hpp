#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace webpar {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoParent = std::numeric_limits<NodeId>::max();

struct DomNode {
  std::string tag;
  std::uint32_t attribute_count = 0;
  std::uint32_t depth = 1;  // root is level 1
  NodeId parent = kNoParent;
  std::vector<NodeId> children;

  bool operator==(const DomNode&) const = default;
};

// Element-only tree stored as an arena; node 0 is the root. Children keep
// document order, and every child's depth is its parent's depth + 1.
class DomTree {
 public:
  DomTree() = default;

  NodeId add_root(std::string tag, std::uint32_t attribute_count);
  NodeId add_child(NodeId parent, std::string tag, std::uint32_t attribute_count);

  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }
  const DomNode& root() const { return nodes_.front(); }
  const DomNode& node(NodeId id) const { return nodes_[id]; }
  std::span<const DomNode> nodes() const { return nodes_; }

  std::size_t source_byte_size() const { return source_byte_size_; }
  void set_source_byte_size(std::size_t bytes) { source_byte_size_ = bytes; }

  bool operator==(const DomTree&) const = default;

 private:
  std::vector<DomNode> nodes_;
  std::size_t source_byte_size_ = 0;
};

// Tag-soup HTML to element tree. Text, comments, doctype and the bodies of
// script/style/textarea/title are dropped; void elements and `<x/>` never
// take children; open elements are closed at end of input. End tags with no
// matching open element are ignored, and the root stays open until EOF so
// later top-level elements become its children.
// Throws Error(empty_document) for empty input or input without elements.
DomTree parse_html(std::string_view text);

// Serializes a tree back to markup that parse_html maps to the same shape.
std::string to_html(const DomTree& tree);

struct PageFeatures {
  std::string page_id;
  std::uint64_t dom_size = 0;
  std::uint64_t attribute_count = 0;
  std::uint64_t web_page_size = 0;
  std::uint32_t tree_depth = 0;
  std::uint64_t number_of_leaves = 0;
  double avg_tree_width = 0.0;
  std::uint64_t max_tree_width = 0;
  double max_avg_width_ratio = 0.0;
  // Same formula as avg_tree_width; kept as its own column because the two
  // are correlated against targets separately.
  double avg_work_per_level = 0.0;

  bool operator==(const PageFeatures&) const = default;
};

inline constexpr std::size_t kFeatureCount = 9;
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "dom_size",       "attribute_count",    "web_page_size",
    "tree_depth",     "number_of_leaves",   "avg_tree_width",
    "max_tree_width", "max_avg_width_ratio", "avg_work_per_level",
};

std::array<double, kFeatureCount> feature_vector(const PageFeatures& features);

PageFeatures compute_features(const DomTree& tree, std::string page_id);

// widths[d - 1] is the number of nodes at depth level d.
std::vector<std::uint64_t> width_profile(const DomTree& tree);

}  // namespace webpar
