#pragma once

// Deterministic parallel map-reduce. Work is split into fixed-size blocks
// (independent of the worker count); each block is summed with compensation
// and the per-block partials are combined with a fixed pairwise tree, so the
// result is bit-identical for any number of threads.

#include <atomic>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "mbqc/core.hpp"

namespace mbqc {

// Worker count: explicit request > MBQC_THREADS env var > hardware default.
inline unsigned resolve_thread_count(unsigned requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MBQC_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? hc : 1;
}

inline constexpr std::uint64_t kReductionBlock = 4096;

// Sum f(i) for i in [0, n) deterministically; optionally multithreaded.
template <typename F>
double deterministic_block_sum(std::uint64_t n, F&& f, unsigned threads = 0) {
  if (n == 0) return 0.0;
  const std::uint64_t nblocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partials(nblocks, 0.0);
  unsigned workers = resolve_thread_count(threads);
  if (workers > nblocks) workers = static_cast<unsigned>(nblocks);

  auto run_block = [&](std::uint64_t b) {
    CompensatedSum acc;
    const std::uint64_t lo = b * kReductionBlock;
    const std::uint64_t hi = std::min(n, lo + kReductionBlock);
    for (std::uint64_t i = lo; i < hi; ++i) acc.add(f(i));
    partials[b] = acc.value();
  };

  if (workers <= 1) {
    for (std::uint64_t b = 0; b < nblocks; ++b) run_block(b);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          std::uint64_t b = next.fetch_add(1);
          if (b >= nblocks) return;
          run_block(b);
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  return pairwise_combine(std::move(partials));
}

}  // namespace mbqc
