#include "shadowcert/parallel.hpp"

#include <atomic>

namespace shadowcert {

namespace {
std::atomic<unsigned> g_limit{0};
}

void set_thread_limit(unsigned threads) noexcept { g_limit.store(threads); }

unsigned thread_limit() noexcept {
  const unsigned v = g_limit.load();
  if (v != 0) return v;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace shadowcert
