#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "webpar/dom.hpp"

namespace webpar {

// Per-pass work-stealing pool over node-id tasks. Each worker owns a deque:
// the owner pushes and pops at the back (LIFO, keeps subtrees cache-warm),
// thieves take from the front (FIFO, grabs the largest pending subtrees).
// Workers are started by run() and joined before it returns; worker 0 is the
// calling thread, so a one-worker pool never creates a thread.
class WorkStealingPool {
 public:
  class Context {
   public:
    void spawn(NodeId node) {
      pool_.pending_.fetch_add(1, std::memory_order_relaxed);
      auto& q = pool_.queues_[worker_];
      std::lock_guard lock(q.mutex);
      q.items.push_back(node);
    }
    unsigned worker() const { return worker_; }

   private:
    friend class WorkStealingPool;
    Context(WorkStealingPool& pool, unsigned worker) : pool_(pool), worker_(worker) {}
    WorkStealingPool& pool_;
    unsigned worker_;
  };

  struct Stats {
    // Wall time each worker spent inside the scheduling loop (running tasks
    // or searching for them), in milliseconds.
    std::vector<double> busy_ms;
    std::uint64_t steals = 0;
  };

  explicit WorkStealingPool(unsigned workers) : queues_(workers == 0 ? 1 : workers) {}

  unsigned workers() const { return static_cast<unsigned>(queues_.size()); }

  // Runs task(node, context) for every seed and every spawned node until no
  // task is left anywhere. `task` must not throw.
  template <class Task>
  Stats run(std::span<const NodeId> seeds, Task&& task) {
    const unsigned n = workers();
    for (std::size_t i = 0; i < seeds.size(); ++i) queues_[i % n].items.push_back(seeds[i]);
    pending_.store(static_cast<std::int64_t>(seeds.size()), std::memory_order_release);
    steals_.store(0, std::memory_order_relaxed);

    Stats stats;
    stats.busy_ms.assign(n, 0.0);
    {
      std::vector<std::jthread> threads;
      threads.reserve(n - 1);
      for (unsigned w = 1; w < n; ++w) {
        threads.emplace_back([this, w, &task, &stats] { stats.busy_ms[w] = worker_loop(w, task); });
      }
      stats.busy_ms[0] = worker_loop(0, task);
    }
    stats.steals = steals_.load(std::memory_order_relaxed);
    return stats;
  }

 private:
  struct alignas(64) Queue {
    std::mutex mutex;
    std::deque<NodeId> items;
  };

  bool pop_local(unsigned w, NodeId& out) {
    auto& q = queues_[w];
    std::lock_guard lock(q.mutex);
    if (q.items.empty()) return false;
    out = q.items.back();
    q.items.pop_back();
    return true;
  }

  bool steal(unsigned w, NodeId& out) {
    const unsigned n = workers();
    for (unsigned k = 1; k < n; ++k) {
      auto& q = queues_[(w + k) % n];
      std::lock_guard lock(q.mutex);
      if (q.items.empty()) continue;
      out = q.items.front();
      q.items.pop_front();
      steals_.fetch_add(1, std::memory_order_relaxed);
      return true;
    }
    return false;
  }

  template <class Task>
  double worker_loop(unsigned w, Task& task) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    Context ctx(*this, w);
    unsigned idle_rounds = 0;
    while (true) {
      NodeId node;
      if (pop_local(w, node) || steal(w, node)) {
        task(node, ctx);
        pending_.fetch_sub(1, std::memory_order_acq_rel);
        idle_rounds = 0;
        continue;
      }
      if (pending_.load(std::memory_order_acquire) == 0) break;
      // Yield early: the host may have fewer cores than workers.
      if (++idle_rounds > 16) std::this_thread::yield();
    }
    return std::chrono::duration<double, std::milli>(clock::now() - start).count();
  }

  std::vector<Queue> queues_;
  std::atomic<std::int64_t> pending_{0};
  std::atomic<std::uint64_t> steals_{0};
};

}  // namespace webpar
