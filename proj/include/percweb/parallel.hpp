#pragma once

// Deterministic parallel reduction over sample indices.
//
// Samples are split into contiguous blocks, one per worker; each worker folds
// its block into a private accumulator and the accumulators are merged in
// worker order. Accumulators hold integer tallies, so the merged result is
// independent of the worker count.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace percweb {

// Set by the CLI's SIGINT handler; long loops poll it and stop early.
std::atomic<bool>& interrupt_flag();
inline bool interrupted() { return interrupt_flag().load(std::memory_order_relaxed); }

struct Tally {
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;

  void add(bool success) {
    successes += success ? 1 : 0;
    ++trials;
  }
  Tally& operator+=(const Tally& other) {
    successes += other.successes;
    trials += other.trials;
    return *this;
  }
  friend Tally operator+(Tally a, const Tally& b) { return a += b; }
  friend bool operator==(const Tally&, const Tally&) = default;
};

// body(index, accumulator&) is called once per index in [0, count) unless an
// interrupt is raised; merge(into, from) combines accumulators.
template <typename Acc, typename Body, typename Merge>
Acc parallel_reduce(std::uint64_t count, int workers, const Acc& init, Body body, Merge merge) {
  workers = std::max(1, workers);
  if (static_cast<std::uint64_t>(workers) > count) workers = static_cast<int>(std::max<std::uint64_t>(count, 1));
  std::vector<Acc> partial(static_cast<std::size_t>(workers), init);
  auto run_block = [&](int w) {
    const std::uint64_t begin = count * static_cast<std::uint64_t>(w) / workers;
    const std::uint64_t end = count * static_cast<std::uint64_t>(w + 1) / workers;
    for (std::uint64_t i = begin; i < end; ++i) {
      if (interrupted()) break;
      body(i, partial[static_cast<std::size_t>(w)]);
    }
  };
  if (workers == 1) {
    run_block(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(run_block, w);
    for (auto& t : pool) t.join();
  }
  Acc total = init;
  for (const auto& p : partial) merge(total, p);
  return total;
}

template <typename Predicate>
Tally parallel_tally(std::uint64_t count, int workers, Predicate predicate) {
  return parallel_reduce(
      count, workers, Tally{}, [&](std::uint64_t i, Tally& t) { t.add(predicate(i)); },
      [](Tally& into, const Tally& from) { into += from; });
}

// Runs fn(i) for every i, results stored by index.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::uint64_t count, int workers, Fn fn) {
  std::vector<T> out(count);
  parallel_reduce(
      count, workers, 0, [&](std::uint64_t i, int&) { out[i] = fn(i); }, [](int&, const int&) {});
  return out;
}

}  // namespace percweb
