#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

namespace treenet {

inline unsigned default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs f(chunk_index) or f(chunk_index, worker_index) for every chunk in
// [0, chunks). Work is partitioned into chunks up front and each chunk
// writes only its own output slot, so the combined result is identical for
// any worker count; the scheduler only decides who computes which slot.
// The worker index (always 0 on the serial path) lets callers keep one
// scratch object per worker instead of per chunk.
template <class F>
void parallel_chunks(std::size_t chunks, unsigned threads, F&& f) {
  constexpr bool wants_worker = std::is_invocable_v<F&, std::size_t, std::size_t>;
  auto call = [&f](std::size_t chunk, std::size_t worker) {
    if constexpr (wants_worker)
      f(chunk, worker);
    else
      f(chunk);
  };
  if (chunks == 0) return;
  if (threads <= 1 || chunks == 1) {
    for (std::size_t i = 0; i < chunks; ++i) call(i, 0);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&](std::size_t wid) {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= chunks) return;
      try {
        call(i, wid);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned n = threads < chunks ? threads : unsigned(chunks);
  pool.reserve(n);
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker, std::size_t(t));
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace treenet
