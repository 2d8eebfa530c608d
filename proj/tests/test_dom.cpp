#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "webpar/dom.hpp"
#include "webpar/error.hpp"
#include "webpar/synthetic.hpp"

using namespace webpar;

namespace {

std::string fixture(const std::string& name) {
  std::ifstream in(std::filesystem::path(WEBPAR_FIXTURES) / name, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::usage;
}

}  // namespace

TEST_CASE("parse_html: element counts and attributes") {
  const auto t = parse_html("<html><body><p a=1 b=2>x</p></body></html>");
  REQUIRE(t.size() == 3);
  CHECK(t.node(0).tag == "html");
  CHECK(t.node(1).tag == "body");
  CHECK(t.node(2).tag == "p");
  CHECK(t.node(2).attribute_count == 2);
  CHECK(t.node(2).depth == 3);
  CHECK(t.source_byte_size() == 42);
}

TEST_CASE("parse_html: single element and empty documents") {
  const auto t = parse_html("<html></html>");
  CHECK(t.size() == 1);
  CHECK(t.root().depth == 1);
  CHECK(kind_of([] { parse_html(""); }) == ErrorKind::empty_document);
  CHECK(kind_of([] { parse_html("just words"); }) == ErrorKind::empty_document);
  CHECK(kind_of([] { parse_html("<!-- only a comment -->"); }) == ErrorKind::empty_document);
}

TEST_CASE("parse_html: skipped content") {
  const auto t = parse_html(
      "<!DOCTYPE html><html><head><script>if (a < b) { x = '<div>'; }</script>"
      "<style>p > a { }</style><title><b>no</b></title></head><!-- <p> --><body></body></html>");
  // html, head, script, style, title, body
  CHECK(t.size() == 6);
  CHECK(t.node(2).tag == "script");
  CHECK(t.node(2).children.empty());
}

TEST_CASE("parse_html: void and self-closing elements take no children") {
  const auto t = parse_html("<div><img src=a><span></span><br/><x-y/><em></em></div>");
  REQUIRE(t.size() == 6);
  for (NodeId id = 1; id < 6; ++id) CHECK(t.node(id).parent == 0);
}

TEST_CASE("parse_html: tag soup recovery") {
  SUBCASE("unclosed elements close at end of input") {
    const auto t = parse_html("<html><body><div><p>one");
    CHECK(t.size() == 4);
    CHECK(t.node(3).depth == 4);
  }
  SUBCASE("stray end tags are ignored") {
    const auto t = parse_html("<div></span><p></p></div>");
    CHECK(t.size() == 2);
  }
  SUBCASE("closing an outer element closes the inner ones") {
    const auto t = parse_html("<div><ul><li><b></ul><p></p></div>");
    REQUIRE(t.size() == 5);
    CHECK(t.node(4).tag == "p");
    CHECK(t.node(4).parent == 0);
  }
  SUBCASE("elements after the root closes become root children") {
    const auto t = parse_html("<html></html><p></p>");
    REQUIRE(t.size() == 2);
    CHECK(t.node(1).parent == 0);
  }
  SUBCASE("attribute forms") {
    const auto t = parse_html(R"(<a href="x y" title='q' data-z=1 hidden disabled class=a>)");
    CHECK(t.node(0).attribute_count == 6);
  }
  SUBCASE("duplicate attributes count as written") {
    CHECK(parse_html("<a x=1 x=2>").node(0).attribute_count == 2);
  }
  SUBCASE("tag names are case-insensitive") {
    const auto t = parse_html("<DIV><P></p></div>");
    CHECK(t.size() == 2);
    CHECK(t.node(0).tag == "div");
  }
  SUBCASE("an unterminated tag at end of input is dropped") {
    CHECK(parse_html("<div><p class=").size() == 1);
  }
}

TEST_CASE("parse_html: deterministic") {
  const auto text = fixture("mixed.html");
  CHECK(parse_html(text) == parse_html(text));
}

TEST_CASE("compute_features: five-node tree") {
  const auto t = parse_html("<html><body><p></p><p></p><p></p></body></html>");
  const auto f = compute_features(t, "five");
  CHECK(f.page_id == "five");
  CHECK(f.dom_size == 5);
  CHECK(f.tree_depth == 3);
  CHECK(f.number_of_leaves == 3);
  CHECK(f.avg_tree_width == 5.0 / 3.0);
  CHECK(f.max_tree_width == 3);
  CHECK(f.max_avg_width_ratio == 9.0 / 5.0);
  CHECK(f.avg_work_per_level == 5.0 / 3.0);
  CHECK(width_profile(t) == std::vector<std::uint64_t>{1, 1, 3});
}

TEST_CASE("compute_features: single node") {
  const auto f = compute_features(parse_html("<html></html>"), "one");
  CHECK(f.dom_size == 1);
  CHECK(f.tree_depth == 1);
  CHECK(f.number_of_leaves == 1);
  CHECK(f.avg_tree_width == 1.0);
  CHECK(f.max_tree_width == 1);
  CHECK(f.max_avg_width_ratio == 1.0);
  CHECK(f.avg_work_per_level == 1.0);
}

TEST_CASE("width_profile: perfect binary tree") {
  const auto t = parse_html(fixture("binary.html"));
  CHECK(width_profile(t) == std::vector<std::uint64_t>{1, 2, 4});
}

TEST_CASE("synthetic trees: exact size and feature invariants") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    SyntheticTreeSpec s;
    s.target_node_count = 1 + rng() % 3000;
    s.min_children = static_cast<std::uint32_t>(1 + rng() % 3);
    s.max_children = s.min_children + static_cast<std::uint32_t>(rng() % 10);
    s.depth_bias = static_cast<double>(rng() % 101) / 100.0;
    s.seed = rng();
    const auto t = generate_tree(s);
    REQUIRE(t.size() == s.target_node_count);
    const auto f = compute_features(t, "x");
    const auto c = oracle::count_tree(t);
    CHECK(f.dom_size == c.nodes);
    CHECK(f.tree_depth == c.depth);
    CHECK(f.number_of_leaves == c.leaves);
    CHECK(f.attribute_count == c.attributes);
    CHECK(width_profile(t) == c.widths);
    CHECK(f.max_avg_width_ratio >= 1.0);
    CHECK(f.max_tree_width >= f.avg_tree_width);
    CHECK(f.avg_tree_width >= 1.0);
    CHECK(f.tree_depth <= f.dom_size);
    for (NodeId id = 1; id < t.size(); ++id) CHECK(t.node(id).depth == t.node(t.node(id).parent).depth + 1);
    // Serializing and reparsing keeps the shape.
    const auto back = parse_html(to_html(t));
    CHECK(back.size() == t.size());
    CHECK(width_profile(back) == width_profile(t));
    CHECK(compute_features(back, "x").attribute_count == f.attribute_count);
  }
}

TEST_CASE("synthetic trees: shape controls and errors") {
  SyntheticTreeSpec chain{.target_node_count = 100, .min_children = 1, .max_children = 1, .depth_bias = 1.0};
  CHECK(compute_features(generate_tree(chain), "c").tree_depth == 100);

  SyntheticTreeSpec wide{.target_node_count = 101, .min_children = 100, .max_children = 100, .depth_bias = 0.0};
  CHECK(compute_features(generate_tree(wide), "w").tree_depth == 2);

  SyntheticTreeSpec same{.target_node_count = 500, .max_children = 6, .depth_bias = 0.3, .seed = 9};
  CHECK(generate_tree(same) == generate_tree(same));

  CHECK(kind_of([] { generate_tree({.target_node_count = 0}); }) == ErrorKind::configuration);
  CHECK(kind_of([] { generate_tree({.target_node_count = 5, .min_children = 3, .max_children = 2}); }) ==
        ErrorKind::configuration);
  CHECK(kind_of([] { generate_tree({.target_node_count = 5, .depth_bias = 1.5}); }) == ErrorKind::configuration);
}

TEST_CASE("max_avg_width_ratio is 1 exactly when every level has the same width") {
  CHECK(compute_features(parse_html("<a><b><c></c></b></a>"), "x").max_avg_width_ratio == 1.0);
  CHECK(compute_features(parse_html("<a><b></b><c></c></a>"), "x").max_avg_width_ratio > 1.0);
}
