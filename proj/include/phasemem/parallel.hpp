#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace phasemem::parallel {

/// Process-wide worker count; 0 means hardware concurrency.
void set_threads(int n);
int threads();

/// Split [0, n) into one contiguous chunk per worker and run
/// fn(chunk_index, begin, end) on each. Results must be merged by the caller
/// in chunk order; with that discipline outputs are deterministic for a fixed
/// worker count.
inline void for_chunks(int n, int workers,
                       const std::function<void(int, int, int)>& fn) {
  if (workers <= 1 || n < 2 * workers) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::thread> pool;
  const int per = (n + workers - 1) / workers;
  int chunk = 0;
  for (int begin = 0; begin < n; begin += per, ++chunk) {
    const int end = std::min(n, begin + per);
    pool.emplace_back(fn, chunk, begin, end);
  }
  for (auto& t : pool) t.join();
}

inline int chunk_count(int n, int workers) {
  if (workers <= 1 || n < 2 * workers) return 1;
  const int per = (n + workers - 1) / workers;
  return (n + per - 1) / per;
}

}  // namespace phasemem::parallel
