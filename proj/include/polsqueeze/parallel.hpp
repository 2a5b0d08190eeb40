#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "polsqueeze/errors.hpp"

namespace polsqueeze {

struct AbortRecord {
  std::size_t index;
  std::string message;
};

/// Result slot per index; a TrajectoryAbort thrown by the task leaves the
/// slot empty and is recorded. Any other exception is rethrown after all
/// workers join. Output order is the index order, independent of `threads`.
template <class T>
struct IndexedResults {
  std::vector<std::optional<T>> values;
  std::vector<AbortRecord> aborts;
};

template <class T, class Task>
IndexedResults<T> parallel_map(std::size_t count, unsigned threads, Task&& task) {
  IndexedResults<T> out;
  out.values.resize(count);
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        out.values[i].emplace(task(i));
      } catch (const TrajectoryAbort& e) {
        std::lock_guard lock(mutex);
        out.aborts.push_back({i, e.what()});
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
      }
    }
  };

  const unsigned n_workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  std::sort(out.aborts.begin(), out.aborts.end(),
            [](const AbortRecord& a, const AbortRecord& b) { return a.index < b.index; });
  return out;
}

}  // namespace polsqueeze
