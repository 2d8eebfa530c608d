#include <doctest.h>

#include <atomic>
#include <numeric>

#include "webpar/error.hpp"
#include "webpar/synthetic.hpp"
#include "webpar/traversal.hpp"
#include "webpar/work_stealing.hpp"

using namespace webpar;

namespace {

DomTree random_tree(std::uint64_t seed, std::uint64_t nodes = 800) {
  return generate_tree({.target_node_count = nodes, .min_children = 1, .max_children = 7,
                        .depth_bias = 0.4, .seed = seed});
}

}  // namespace

TEST_CASE("work-stealing pool runs every spawned task exactly once") {
  for (unsigned workers : {1u, 2u, 4u, 8u}) {
    WorkStealingPool pool(workers);
    std::vector<std::atomic<int>> hits(2047);
    const NodeId seed[] = {0};
    const auto stats = pool.run(seed, [&](NodeId n, WorkStealingPool::Context& ctx) {
      hits[n].fetch_add(1);
      if (2 * n + 2 < hits.size()) {
        ctx.spawn(2 * n + 1);
        ctx.spawn(2 * n + 2);
      }
    });
    CHECK(stats.busy_ms.size() == workers);
    for (auto& h : hits) CHECK(h.load() == 1);
  }
}

TEST_CASE("styling and layout results do not depend on the thread count") {
  const auto tree = random_tree(3);
  const auto s1 = styling_pass(tree, 1, 10);
  const auto l1 = layout_pass(tree, 1, 10);
  CHECK(l1.checksum == tree.size());
  CHECK(s1.visits == tree.size());
  CHECK(l1.visits == tree.size());
  CHECK(l1.bottom_up_visits == tree.size());
  for (unsigned t : {2u, 3u, 4u}) {
    for (int rep = 0; rep < 5; ++rep) {
      const auto s = styling_pass(tree, t, 10);
      const auto l = layout_pass(tree, t, 10);
      CHECK(s.checksum == s1.checksum);
      CHECK(s.digest == s1.digest);
      CHECK(l.checksum == l1.checksum);
      CHECK(l.digest == l1.digest);
      CHECK(s.per_worker_busy_ms.size() == t);
    }
  }
  // The work amount feeds the digest.
  CHECK(styling_pass(tree, 1, 11).checksum != s1.checksum);
}

TEST_CASE("visit logs respect traversal order") {
  const auto tree = random_tree(5, 600);
  for (unsigned t : {1u, 2u, 4u}) {
    VisitLog log(tree.size());
    styling_pass(tree, t, 5, &log);
    CHECK(log.each_node_once(Phase::style_top_down));
    CHECK(log.parents_before_children(tree, Phase::style_top_down));

    log.reset();
    layout_pass(tree, t, 5, &log);
    CHECK(log.each_node_once(Phase::width_top_down));
    CHECK(log.each_node_once(Phase::height_bottom_up));
    CHECK(log.parents_before_children(tree, Phase::width_top_down));
    CHECK(log.children_before_parents(tree, Phase::height_bottom_up));
    // The bottom-up phase starts after the top-down phase ends.
    std::uint64_t last_down = 0, first_up = UINT64_MAX;
    for (NodeId n = 0; n < tree.size(); ++n) {
      last_down = std::max(last_down, log.sequence(Phase::width_top_down, n));
      first_up = std::min(first_up, log.sequence(Phase::height_bottom_up, n));
    }
    CHECK(last_down < first_up);
  }
}

TEST_CASE("visit log checks detect violations") {
  const auto tree = random_tree(1, 10);
  VisitLog log(tree.size());
  for (NodeId n = static_cast<NodeId>(tree.size()); n-- > 0;) log.record(Phase::style_top_down, n);
  CHECK(log.each_node_once(Phase::style_top_down));
  CHECK_FALSE(log.parents_before_children(tree, Phase::style_top_down));
  CHECK(log.children_before_parents(tree, Phase::style_top_down));
  log.record(Phase::style_top_down, 0);
  CHECK_FALSE(log.each_node_once(Phase::style_top_down));
  CHECK_FALSE(log.each_node_once(Phase::width_top_down));
}

TEST_CASE("single-node tree") {
  DomTree t;
  t.add_root("html", 0);
  CHECK(layout_pass(t, 4, 3).checksum == 1);
  CHECK(styling_pass(t, 4, 3).visits == 1);
}

TEST_CASE("modeled timing") {
  const ModeledCost cost{.ns_per_work_unit = 1.0, .thread_start_ns = 1000.0, .task_ns = 10.0};
  SUBCASE("serial time is the total work") {
    const auto tree = random_tree(2, 300);
    double work = 0.0;
    for (const auto& n : tree.nodes()) work += static_cast<double>(node_iterations(n, 7));
    CHECK(modeled_elapsed_ms(tree, PassKind::styling, 1, 7, cost) == doctest::Approx(work / 1e6).epsilon(1e-12));
    CHECK(modeled_elapsed_ms(tree, PassKind::layout, 1, 7, cost) == doctest::Approx(2 * work / 1e6).epsilon(1e-12));
  }
  SUBCASE("a chain gains nothing from more workers") {
    const auto chain = generate_tree({.target_node_count = 200, .min_children = 1, .max_children = 1,
                                      .depth_bias = 1.0});
    const double t1 = modeled_elapsed_ms(chain, PassKind::styling, 1, 50, cost);
    const double t4 = modeled_elapsed_ms(chain, PassKind::styling, 4, 50, cost);
    CHECK(t4 == doctest::Approx(t1 + 3 * 1000.0 / 1e6).epsilon(1e-12));
  }
  SUBCASE("a flat tree approaches linear scaling") {
    const auto flat = generate_tree({.target_node_count = 10001, .min_children = 10000, .max_children = 10000});
    const double t1 = modeled_elapsed_ms(flat, PassKind::styling, 1, 200, cost);
    const double t4 = modeled_elapsed_ms(flat, PassKind::styling, 4, 200, cost);
    CHECK(t1 / t4 > 3.5);
    CHECK(t1 / t4 < 4.0);
  }
}

TEST_CASE("run_bench layout and validation") {
  const auto tree = random_tree(8, 100);
  WorkConfig c;
  c.thread_counts = {1, 2};
  c.trials_per_config = 3;
  c.per_node_work_units = 4;
  const auto rows = run_bench(tree, "pg", c);
  REQUIRE(rows.size() == 12);
  CHECK(rows[0].threads == 1);
  CHECK(rows[0].pass_kind == PassKind::styling);
  CHECK(rows[1].pass_kind == PassKind::layout);
  CHECK(rows[2].trial_index == 1);
  CHECK(rows[6].threads == 2);
  CHECK(rows[11].page_id == "pg");

  c.timing = TimingMode::modeled;
  const auto a = run_bench(tree, "pg", c);
  const auto b = run_bench(tree, "pg", c);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].elapsed_ms == b[i].elapsed_ms);

  auto bad = c;
  bad.thread_counts = {2, 4};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.thread_counts = {1, 1};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.trials_per_config = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("energy estimate") {
  TrialResult r;
  r.elapsed_ms = 200.0;
  r.per_worker_busy_ms = {200.0, 100.0};
  CHECK(estimate_energy(r, {.idle_power_w = 10.0, .per_core_active_power_w = 5.0}) ==
        doctest::Approx(10.0 * 0.2 + 5.0 * 0.3));
  CHECK(kernel_ns_per_unit() > 0.0);
}

TEST_CASE("pass kind and timing names") {
  CHECK(parse_pass_kind("layout") == PassKind::layout);
  CHECK(to_string(PassKind::styling) == "styling");
  CHECK(parse_timing_mode("modeled") == TimingMode::modeled);
  CHECK_THROWS_AS(parse_pass_kind("paint"), Error);
}
