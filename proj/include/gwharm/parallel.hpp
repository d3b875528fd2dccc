#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "gwharm/errors.hpp"

namespace gwharm {

/// Number of worker threads: explicit request > GWH_THREADS > 1.
inline std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GWH_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
      throw ConfigError(std::string("GWH_THREADS is not a number: ") + env);
    }
  }
  return 1;
}

/// Deterministic parallel loop: body(i) must depend only on i (each work
/// item owns an index-keyed rng stream and writes to its own slot), so
/// results are identical for every thread count. Exceptions from workers
/// are rethrown on the calling thread.
template <typename Body>
void parallel_for(std::size_t n, std::size_t n_threads, Body&& body) {
  if (n == 0) return;
  if (n_threads <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t workers = std::min(n_threads, n);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace gwharm
