#pragma once

#include <thread>
#include <vector>

namespace splat {

inline int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Static partition of [0, n) into contiguous chunks, one per worker. The split
// depends only on (n, threads), so results merged in worker order are
// reproducible for a fixed thread count.
template <typename Fn>  // Fn(int begin, int end, int worker)
void parallel_chunks(int n, int threads, Fn&& fn) {
  if (n <= 0) return;
  const int workers = std::min(std::max(threads, 1), n);
  if (workers == 1) {
    fn(0, n, 0);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int base = n / workers, rem = n % workers;
  int begin = 0;
  for (int w = 0; w < workers; ++w) {
    const int len = base + (w < rem ? 1 : 0);
    pool.emplace_back([&fn, begin, len, w] { fn(begin, begin + len, w); });
    begin += len;
  }
  for (auto& t : pool) t.join();
}

}  // namespace splat
