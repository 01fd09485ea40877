#pragma once

// Chunked parallel execution over an index range. Results must be merged per
// chunk in index order by the caller so thread count never changes output.
// NDS_THREADS caps the worker count.

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace nds {

inline int max_threads() {
  if (const char* env = std::getenv("NDS_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn(chunk_index, begin, end) over a partition of [0, n).
/// Chunks are contiguous and their count is deterministic for a given n.
inline void parallel_chunks(long n, const std::function<void(size_t, long, long)>& fn) {
  if (n <= 0) return;
  int workers = max_threads();
  long per = 256;  // keep chunk count stable: ~n/256 chunks, capped
  long nchunks = (n + per - 1) / per;
  if (nchunks < workers) {
    nchunks = std::min<long>(workers, n);
    per = (n + nchunks - 1) / nchunks;
    nchunks = (n + per - 1) / per;
  }
  if (workers == 1 || nchunks == 1) {
    for (long c = 0; c < nchunks; ++c) fn(static_cast<size_t>(c), c * per, std::min(n, (c + 1) * per));
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<long> next{0};
  auto worker = [&]() {
    while (true) {
      long c = next.fetch_add(1);
      if (c >= nchunks) break;
      fn(static_cast<size_t>(c), c * per, std::min(n, (c + 1) * per));
    }
  };
  int nw = static_cast<int>(std::min<long>(workers, nchunks));
  pool.reserve(nw);
  for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace nds
