#ifndef ADCBOUND_PARALLEL_HPP
#define ADCBOUND_PARALLEL_HPP

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace adcbound {

// Worker count: explicit request, else ADCBOUND_WORKERS, else hardware.
inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ADCBOUND_WORKERS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Splits [0, n) into `workers` contiguous chunks and runs fn(chunk, begin,
// end) on each.  Chunk boundaries depend only on (n, workers), so per-chunk
// results can be combined deterministically.
template <class Fn>
void parallel_chunks(std::size_t n, int workers, Fn&& fn) {
  if (n == 0) return;
  int w = workers < 1 ? 1 : workers;
  if (static_cast<std::size_t>(w) > n) w = static_cast<int>(n);
  if (w == 1) {
    fn(0, std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(w));
  std::size_t base = n / static_cast<std::size_t>(w);
  std::size_t rem = n % static_cast<std::size_t>(w);
  std::size_t begin = 0;
  for (int c = 0; c < w; ++c) {
    std::size_t len = base + (static_cast<std::size_t>(c) < rem ? 1 : 0);
    std::size_t end = begin + len;
    threads.emplace_back([&fn, c, begin, end] { fn(c, begin, end); });
    begin = end;
  }
  for (auto& t : threads) t.join();
}

}  // namespace adcbound

#endif
