#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace shadowcert {

// Process-wide worker cap. 0 means hardware concurrency.
void set_thread_limit(unsigned threads) noexcept;
unsigned thread_limit() noexcept;

// Runs fn(shard) for shard in [0, shards). Work is statically partitioned and
// every shard writes only its own slot, so results never depend on the number
// of workers. The first exception thrown by any shard is rethrown.
template <class Fn>
void parallel_shards(std::size_t shards, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(thread_limit(), shards);
  if (workers <= 1) {
    for (std::size_t s = 0; s < shards; ++s) fn(s);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t s = w; s < shards; s += workers) fn(s);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace shadowcert
