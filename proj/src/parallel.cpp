#include "pflow/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace pflow {

namespace {

int initial_threads() {
  if (const char* env = std::getenv("PFLOW_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

std::atomic<int>& threads_setting() {
  static std::atomic<int> value{initial_threads()};
  return value;
}

constexpr std::size_t kMinChunk = 2048;

}  // namespace

int thread_count() { return threads_setting().load(); }

void set_thread_count(int threads) { threads_setting().store(std::max(1, threads)); }

void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(thread_count());
  if (workers <= 1 || count < 2 * kMinChunk) {
    body(0, count);
    return;
  }
  const std::size_t chunks = std::min(workers, count / kMinChunk);
  const std::size_t per = (count + chunks - 1) / chunks;
  std::vector<std::jthread> pool;
  pool.reserve(chunks - 1);
  for (std::size_t c = 1; c < chunks; ++c) {
    const std::size_t b = c * per;
    const std::size_t e = std::min(count, b + per);
    if (b < e) pool.emplace_back([&body, b, e] { body(b, e); });
  }
  body(0, std::min(count, per));
}

}  // namespace pflow
