#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace cmc {

/// Runs fn(i) for i in [0, count) on `workers` threads. Worker w takes the
/// indices w, w + workers, ..., so the assignment is fixed by index. If any
/// call throws, the exception of the lowest failing index is rethrown after
/// all workers finish.
template <class Fn>
void parallel_for_index(std::size_t count, std::size_t workers, Fn&& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  if (workers > count) workers = count;
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace cmc
