#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace regadj::detail {

/// Runs f(first, last) over fixed chunks of [0, total). Chunk boundaries do
/// not depend on `threads`, and callers write only to per-index slots, so
/// output is identical for every thread count. The first exception thrown by
/// any chunk is rethrown on the calling thread.
template <class F>
void parallel_chunks(std::uint64_t total, std::uint64_t chunk, unsigned threads, F&& f) {
  if (total == 0) return;
  const std::uint64_t chunks = (total + chunk - 1) / chunk;
  const unsigned workers =
      static_cast<unsigned>(std::clamp<std::uint64_t>(threads, 1, chunks));

  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto work = [&] {
    while (true) {
      const std::uint64_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        f(c * chunk, std::min(total, (c + 1) * chunk));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(chunks);
        return;
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace regadj::detail
