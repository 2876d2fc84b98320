#ifndef THMM_PARALLEL_HPP
#define THMM_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace thmm {

/// Runs fn(slot) for slot in [0, count) on up to `threads` workers, one
/// slot per worker. The first exception thrown is rethrown on the caller.
template <typename Fn>
void run_slots(std::size_t count, std::size_t threads, Fn&& fn) {
  if (count == 0) return;
  if (threads <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
      workers.emplace_back([&, i] {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
  }
  if (error) std::rethrow_exception(error);
}

/// Fixed-size work chunks processed in waves of `threads`. Per chunk,
/// work(worker_slot, chunk_index) runs in parallel; then merge(worker_slot,
/// chunk_index) runs on the caller in ascending chunk order. Results are
/// therefore independent of the thread count.
template <typename Work, typename Merge>
void chunked_waves(std::size_t chunks, std::size_t threads, Work&& work, Merge&& merge) {
  threads = std::max<std::size_t>(threads, 1);
  for (std::size_t first = 0; first < chunks; first += threads) {
    const std::size_t wave = std::min(threads, chunks - first);
    run_slots(wave, threads, [&](std::size_t slot) { work(slot, first + slot); });
    for (std::size_t slot = 0; slot < wave; ++slot) merge(slot, first + slot);
  }
}

}  // namespace thmm

#endif  // THMM_PARALLEL_HPP
