#include "webpar/traversal.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <set>

#include "webpar/error.hpp"
#include "webpar/work_stealing.hpp"

namespace webpar {

std::string_view to_string(PassKind kind) { return kind == PassKind::styling ? "styling" : "layout"; }

PassKind parse_pass_kind(std::string_view text) {
  if (text == "styling") return PassKind::styling;
  if (text == "layout") return PassKind::layout;
  throw Error(ErrorKind::value, "unknown pass kind '" + std::string(text) + "'");
}

std::string_view to_string(TimingMode mode) { return mode == TimingMode::wall ? "wall" : "modeled"; }

TimingMode parse_timing_mode(std::string_view text) {
  if (text == "wall") return TimingMode::wall;
  if (text == "modeled") return TimingMode::modeled;
  throw Error(ErrorKind::configuration, "unknown timing mode '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// VisitLog

VisitLog::VisitLog(std::size_t nodes)
    : nodes_(nodes),
      sequence_(new std::atomic<std::uint64_t>[nodes * kPhases]),
      count_(new std::atomic<std::uint32_t>[nodes * kPhases]) {
  reset();
}

void VisitLog::reset() noexcept {
  clock_.store(0);
  for (std::size_t i = 0; i < nodes_ * kPhases; ++i) {
    sequence_[i].store(0, std::memory_order_relaxed);
    count_[i].store(0, std::memory_order_relaxed);
  }
}

void VisitLog::record(Phase phase, NodeId node) noexcept {
  const auto slot = static_cast<std::size_t>(phase) * nodes_ + node;
  sequence_[slot].store(clock_.fetch_add(1, std::memory_order_acq_rel) + 1, std::memory_order_relaxed);
  count_[slot].fetch_add(1, std::memory_order_relaxed);
}

std::uint32_t VisitLog::visits(Phase phase, NodeId node) const {
  return count_[static_cast<std::size_t>(phase) * nodes_ + node].load();
}

std::uint64_t VisitLog::sequence(Phase phase, NodeId node) const {
  return sequence_[static_cast<std::size_t>(phase) * nodes_ + node].load();
}

bool VisitLog::each_node_once(Phase phase) const {
  for (NodeId n = 0; n < nodes_; ++n) {
    if (visits(phase, n) != 1) return false;
  }
  return true;
}

bool VisitLog::parents_before_children(const DomTree& tree, Phase phase) const {
  for (NodeId n = 1; n < tree.size(); ++n) {
    if (sequence(phase, tree.node(n).parent) >= sequence(phase, n)) return false;
  }
  return true;
}

bool VisitLog::children_before_parents(const DomTree& tree, Phase phase) const {
  for (NodeId n = 1; n < tree.size(); ++n) {
    if (sequence(phase, n) >= sequence(phase, tree.node(n).parent)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Passes

namespace {

constexpr std::uint64_t kRootSeed = 0x243f6a8885a308d3ULL;

std::uint64_t tag_hash(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t node_input(const DomTree& tree, NodeId n, std::uint64_t inherited) noexcept {
  return inherited ^ tag_hash(tree.node(n).tag) ^ ((static_cast<std::uint64_t>(n) + 1) * 0x9e3779b97f4a7c15ULL);
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Spawns all children but the first and returns the first (or kNoParent for
// a leaf); the caller continues inline with it.
NodeId fork_children(const DomTree& tree, NodeId n, WorkStealingPool::Context& ctx) {
  const auto& children = tree.node(n).children;
  if (children.empty()) return kNoParent;
  for (std::size_t i = children.size(); i-- > 1;) ctx.spawn(children[i]);
  return children.front();
}

struct alignas(64) WorkerTally {
  std::uint64_t sum = 0;
  std::uint64_t visits = 0;
  std::uint64_t up_visits = 0;
};

}  // namespace

TrialResult styling_pass(const DomTree& tree, unsigned threads, std::uint32_t work_units, VisitLog* log) {
  if (tree.empty()) throw Error(ErrorKind::input, "styling pass over an empty tree");
  if (threads == 0) throw Error(ErrorKind::configuration, "threads must be >= 1");

  using clock = std::chrono::steady_clock;
  const auto start = clock::now();

  std::vector<std::uint64_t> style(tree.size());
  std::vector<WorkerTally> tally(threads);
  WorkStealingPool pool(threads);
  const NodeId root = 0;
  auto stats = pool.run(std::span(&root, 1), [&](NodeId n, WorkStealingPool::Context& ctx) {
    auto& mine = tally[ctx.worker()];
    while (n != kNoParent) {
      const auto& node = tree.node(n);
      const std::uint64_t inherited = node.parent == kNoParent ? kRootSeed : style[node.parent];
      style[n] = work_kernel(node_input(tree, n, inherited), node_iterations(node, work_units));
      mine.sum += style[n];
      ++mine.visits;
      if (log) log->record(Phase::style_top_down, n);
      n = fork_children(tree, n, ctx);
    }
  });

  TrialResult result;
  result.pass_kind = PassKind::styling;
  result.threads = threads;
  result.elapsed_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
  for (const auto& t : tally) {
    result.checksum += t.sum;
    result.visits += t.visits;
  }
  result.digest = result.checksum;
  result.per_worker_busy_ms = std::move(stats.busy_ms);
  return result;
}

TrialResult layout_pass(const DomTree& tree, unsigned threads, std::uint32_t work_units, VisitLog* log) {
  if (tree.empty()) throw Error(ErrorKind::input, "layout pass over an empty tree");
  if (threads == 0) throw Error(ErrorKind::configuration, "threads must be >= 1");

  using clock = std::chrono::steady_clock;
  const auto start = clock::now();

  const auto size = tree.size();
  std::vector<std::uint64_t> width(size);
  std::vector<std::uint64_t> height(size);
  std::vector<std::uint64_t> content(size);
  std::unique_ptr<std::atomic<std::uint32_t>[]> unfinished(new std::atomic<std::uint32_t>[size]);
  for (NodeId n = 0; n < size; ++n) {
    unfinished[n].store(static_cast<std::uint32_t>(tree.node(n).children.size()), std::memory_order_relaxed);
  }
  std::vector<WorkerTally> tally(threads);
  WorkStealingPool pool(threads);
  const NodeId root = 0;

  // Phase 1: widths flow down from the parent.
  auto down = pool.run(std::span(&root, 1), [&](NodeId n, WorkStealingPool::Context& ctx) {
    auto& mine = tally[ctx.worker()];
    while (n != kNoParent) {
      const auto& node = tree.node(n);
      const std::uint64_t inherited = node.parent == kNoParent ? kRootSeed : width[node.parent];
      width[n] = work_kernel(node_input(tree, n, inherited), node_iterations(node, work_units));
      ++mine.visits;
      if (log) log->record(Phase::width_top_down, n);
      n = fork_children(tree, n, ctx);
    }
  });

  // Phase 2: descend to the leaves, then climb; the worker that finishes a
  // node's last child computes that node.
  auto up = pool.run(std::span(&root, 1), [&](NodeId n, WorkStealingPool::Context& ctx) {
    auto& mine = tally[ctx.worker()];
    for (NodeId next = fork_children(tree, n, ctx); next != kNoParent; next = fork_children(tree, n, ctx)) {
      n = next;
    }
    while (true) {
      const auto& node = tree.node(n);
      std::uint64_t h = 1;
      std::uint64_t c = width[n];
      for (NodeId child : node.children) {
        h += height[child];
        c += content[child];
      }
      height[n] = h;
      content[n] = work_kernel(c, node_iterations(node, work_units));
      ++mine.up_visits;
      if (log) log->record(Phase::height_bottom_up, n);
      if (node.parent == kNoParent) break;
      if (unfinished[node.parent].fetch_sub(1, std::memory_order_acq_rel) != 1) break;
      n = node.parent;
    }
  });

  TrialResult result;
  result.pass_kind = PassKind::layout;
  result.threads = threads;
  result.elapsed_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
  result.checksum = height[0];
  result.digest = content[0];
  for (const auto& t : tally) {
    result.visits += t.visits;
    result.bottom_up_visits += t.up_visits;
  }
  result.per_worker_busy_ms.resize(threads);
  for (unsigned w = 0; w < threads; ++w) result.per_worker_busy_ms[w] = down.busy_ms[w] + up.busy_ms[w];
  return result;
}

// ---------------------------------------------------------------------------
// Modeled timing

double modeled_elapsed_ms(const DomTree& tree, PassKind kind, unsigned threads, std::uint32_t work_units,
                          const ModeledCost& cost) {
  if (tree.empty()) throw Error(ErrorKind::input, "modeled timing over an empty tree");
  if (threads == 0) throw Error(ErrorKind::configuration, "threads must be >= 1");

  // Nodes are stored parent-before-child, so one forward sweep gives every
  // root-to-node path cost.
  std::vector<double> path(tree.size());
  double work = 0.0;
  double span = 0.0;
  std::uint64_t spawned = 0;
  for (NodeId n = 0; n < tree.size(); ++n) {
    const auto& node = tree.node(n);
    const double c = static_cast<double>(node_iterations(node, work_units)) * cost.ns_per_work_unit;
    work += c;
    path[n] = c + (node.parent == kNoParent ? 0.0 : path[node.parent]);
    span = std::max(span, path[n]);
    if (node.children.size() > 1) spawned += node.children.size() - 1;
  }

  const double phases = kind == PassKind::styling ? 1.0 : 2.0;
  double ns = 0.0;
  if (threads == 1) {
    ns = phases * work;
  } else {
    const double p = static_cast<double>(threads);
    const double phase = std::max(work / p, span) + static_cast<double>(spawned) * cost.task_ns / p;
    ns = phases * phase + (p - 1.0) * cost.thread_start_ns;
  }
  return ns / 1e6;
}

// ---------------------------------------------------------------------------
// Bench driver

void WorkConfig::validate() const {
  if (thread_counts.empty()) throw Error(ErrorKind::configuration, "thread_counts is empty");
  std::set<unsigned> seen;
  for (unsigned t : thread_counts) {
    if (t == 0) throw Error(ErrorKind::configuration, "thread counts must be positive");
    if (!seen.insert(t).second) throw Error(ErrorKind::configuration, "thread counts must be distinct");
  }
  if (!seen.contains(1)) throw Error(ErrorKind::configuration, "thread_counts must include the serial baseline 1");
  if (trials_per_config == 0) throw Error(ErrorKind::configuration, "trials must be >= 1");
  if (per_node_work_units == 0) throw Error(ErrorKind::configuration, "per_node_work_units must be >= 1");
}

std::vector<TrialResult> run_bench(const DomTree& tree, std::string_view page_id, const WorkConfig& config) {
  config.validate();
  std::vector<TrialResult> results;
  results.reserve(config.thread_counts.size() * config.trials_per_config * 2);
  for (unsigned threads : config.thread_counts) {
    for (unsigned trial = 0; trial < config.trials_per_config; ++trial) {
      for (PassKind kind : {PassKind::styling, PassKind::layout}) {
        auto r = kind == PassKind::styling ? styling_pass(tree, threads, config.per_node_work_units)
                                           : layout_pass(tree, threads, config.per_node_work_units);
        if (config.timing == TimingMode::modeled) {
          // Spinning work-stealing workers count as active for the whole pass.
          r.elapsed_ms = modeled_elapsed_ms(tree, kind, threads, config.per_node_work_units, config.modeled);
          r.per_worker_busy_ms.assign(threads, r.elapsed_ms);
        }
        r.page_id = std::string(page_id);
        r.trial_index = trial;
        results.push_back(std::move(r));
      }
    }
  }
  return results;
}

double estimate_energy(const TrialResult& result, const PowerModel& model) {
  const double elapsed_s = result.elapsed_ms / 1000.0;
  const double busy_s = sum(result.per_worker_busy_ms) / 1000.0;
  return model.idle_power_w * elapsed_s + model.per_core_active_power_w * busy_s;
}

double kernel_ns_per_unit() {
  using clock = std::chrono::steady_clock;
  constexpr std::uint64_t kIterations = 1 << 22;
  double best = 0.0;
  for (int rep = 0; rep < 3; ++rep) {
    const auto start = clock::now();
    volatile std::uint64_t sink = work_kernel(static_cast<std::uint64_t>(rep) + 1, kIterations);
    (void)sink;
    const double ns = std::chrono::duration<double, std::nano>(clock::now() - start).count() / kIterations;
    best = rep == 0 ? ns : std::min(best, ns);
  }
  return best;
}

}  // namespace webpar
