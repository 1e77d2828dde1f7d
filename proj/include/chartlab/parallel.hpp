#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

#include "chartlab/common.hpp"

namespace chartlab {

/// Worker count used by every data-parallel loop in the library. Defaults to
/// CHARTLAB_THREADS when set, otherwise the hardware concurrency.
int thread_count();
void set_thread_count(int n);

/// Runs fn(i) for i in [begin, end) over contiguous blocks, one block per
/// worker. Callers must only write to slots owned by i; any reduction across
/// i has to happen afterwards in index order so results do not depend on the
/// worker count. The exception from the lowest failing block is rethrown.
template <class Fn>
void parallel_for(Index begin, Index end, Fn&& fn) {
  const Index n = end - begin;
  if (n <= 0) return;
  const Index workers = std::min<Index>(thread_count(), n);
  if (workers <= 1) {
    for (Index i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (Index w = 0; w < workers; ++w) {
    const Index lo = begin + n * w / workers;
    const Index hi = begin + n * (w + 1) / workers;
    pool.emplace_back([&, lo, hi, w] {
      try {
        for (Index i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace chartlab
