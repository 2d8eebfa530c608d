#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "webpar/dom.hpp"

namespace webpar {

enum class PassKind { styling, layout };

std::string_view to_string(PassKind kind);
PassKind parse_pass_kind(std::string_view text);

// Fixed-iteration integer mixing; the per-node unit of synthetic work.
inline std::uint64_t work_kernel(std::uint64_t x, std::uint64_t iterations) noexcept {
  for (std::uint64_t i = 0; i < iterations; ++i) {
    x ^= x >> 29;
    x *= 0xbf58476d1ce4e5b9ULL;
    x += i;
  }
  return x;
}

// Heavier-attributed nodes cost proportionally more.
inline std::uint64_t node_iterations(const DomNode& node, std::uint32_t work_units) noexcept {
  return static_cast<std::uint64_t>(work_units) * (1 + node.attribute_count);
}

enum class Phase { style_top_down = 0, width_top_down = 1, height_bottom_up = 2 };

// Instrumented mode: records a global sequence number for every node visit
// in every phase. Thread-safe; slower than the plain passes.
class VisitLog {
 public:
  explicit VisitLog(std::size_t nodes);

  void record(Phase phase, NodeId node) noexcept;
  void reset() noexcept;

  std::uint32_t visits(Phase phase, NodeId node) const;
  std::uint64_t sequence(Phase phase, NodeId node) const;

  bool each_node_once(Phase phase) const;
  // Parent recorded before every child.
  bool parents_before_children(const DomTree& tree, Phase phase) const;
  // Every child recorded before its parent.
  bool children_before_parents(const DomTree& tree, Phase phase) const;

 private:
  static constexpr std::size_t kPhases = 3;
  std::size_t nodes_;
  std::atomic<std::uint64_t> clock_{0};
  std::unique_ptr<std::atomic<std::uint64_t>[]> sequence_;
  std::unique_ptr<std::atomic<std::uint32_t>[]> count_;
};

struct TrialResult {
  std::string page_id;
  PassKind pass_kind = PassKind::styling;
  unsigned threads = 1;
  unsigned trial_index = 0;
  double elapsed_ms = 0.0;
  // Styling: wrapping sum of all style values. Layout: root height.
  std::uint64_t checksum = 0;
  // Layout: root content value, which folds every kernel result. Styling: equal to checksum.
  std::uint64_t digest = 0;
  std::uint64_t visits = 0;            // top-down visits
  std::uint64_t bottom_up_visits = 0;  // layout only
  std::vector<double> per_worker_busy_ms;
};

// Top-down pass: a node's style is derived from its parent's style, so a node
// is computed only after its parent.
TrialResult styling_pass(const DomTree& tree, unsigned threads, std::uint32_t work_units,
                         VisitLog* log = nullptr);

// Top-down width pass followed by a bottom-up height pass. Height is
// 1 + the sum of the children's heights, so the root height equals dom-size.
TrialResult layout_pass(const DomTree& tree, unsigned threads, std::uint32_t work_units,
                        VisitLog* log = nullptr);

enum class TimingMode { wall, modeled };

std::string_view to_string(TimingMode mode);
TimingMode parse_timing_mode(std::string_view text);

// Deterministic execution-time model used by TimingMode::modeled. A phase
// with total work W and critical path S on P workers takes
// max(W / P, S) + spawned_tasks * task_ns / P, plus (P - 1) * thread_start_ns
// per pass; one worker takes exactly W.
struct ModeledCost {
  double ns_per_work_unit = 1.0;
  double thread_start_ns = 20'000.0;
  double task_ns = 100.0;
};

double modeled_elapsed_ms(const DomTree& tree, PassKind kind, unsigned threads, std::uint32_t work_units,
                          const ModeledCost& cost);

struct WorkConfig {
  std::vector<unsigned> thread_counts{1, 2, 4};
  unsigned trials_per_config = 5;
  std::uint32_t per_node_work_units = 200;
  TimingMode timing = TimingMode::wall;
  ModeledCost modeled;

  // Throws Error(configuration) unless thread counts are distinct, positive
  // and include 1, and trials / work units are positive.
  void validate() const;
};

// trials x |thread_counts| results per pass kind, in execution order
// (thread count, then trial, styling before layout).
std::vector<TrialResult> run_bench(const DomTree& tree, std::string_view page_id, const WorkConfig& config);

struct PowerModel {
  double idle_power_w = 10.0;
  double per_core_active_power_w = 5.0;
};

// idle * elapsed + active * sum(busy), seconds and watts in, joules out.
double estimate_energy(const TrialResult& result, const PowerModel& model);

// Measured nanoseconds per work_kernel iteration on this machine.
double kernel_ns_per_unit();

}  // namespace webpar
