#include "dinilab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace dinilab {

namespace {

constexpr std::size_t kBlock = 4096;
// below this many items threads cost more than they save
constexpr std::size_t kMinParallel = 16384;

std::atomic<int> g_override{0};

int env_threads() {
  static const int n = [] {
    if (const char* s = std::getenv("LAB_THREADS")) {
      const int v = std::atoi(s);
      if (v >= 1) return v;
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }();
  return n;
}

void run_chunks(std::size_t chunks, const std::function<void(std::size_t)>& job) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) job(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t c = next++; c < chunks; c = next++) job(c);
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(loop);
  loop();
  for (auto& t : pool) t.join();
}

}  // namespace

int thread_count() {
  const int o = g_override.load();
  return o >= 1 ? o : env_threads();
}

void set_thread_count(int n) { g_override.store(n < 0 ? 0 : n); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  if (n < kMinParallel || thread_count() == 1) {
    body(0, n);
    return;
  }
  const std::size_t chunks = (n + kBlock - 1) / kBlock;
  run_chunks(chunks, [&](std::size_t c) { body(c * kBlock, std::min(n, (c + 1) * kBlock)); });
}

double parallel_sum(std::size_t n, const std::function<double(std::size_t, std::size_t)>& partial) {
  const std::size_t chunks = (n + kBlock - 1) / kBlock;
  std::vector<double> part(chunks, 0.0);
  if (n < kMinParallel || thread_count() == 1) {
    for (std::size_t c = 0; c < chunks; ++c) part[c] = partial(c * kBlock, std::min(n, (c + 1) * kBlock));
  } else {
    run_chunks(chunks, [&](std::size_t c) { part[c] = partial(c * kBlock, std::min(n, (c + 1) * kBlock)); });
  }
  double s = 0.0;
  for (double v : part) s += v;
  return s;
}

double parallel_max(std::size_t n, const std::function<double(std::size_t, std::size_t)>& partial) {
  const std::size_t chunks = (n + kBlock - 1) / kBlock;
  std::vector<double> part(chunks, 0.0);
  if (n < kMinParallel || thread_count() == 1) {
    for (std::size_t c = 0; c < chunks; ++c) part[c] = partial(c * kBlock, std::min(n, (c + 1) * kBlock));
  } else {
    run_chunks(chunks, [&](std::size_t c) { part[c] = partial(c * kBlock, std::min(n, (c + 1) * kBlock)); });
  }
  double m = 0.0;
  for (double v : part) m = std::max(m, v);
  return m;
}

}  // namespace dinilab
