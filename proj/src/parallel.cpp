#include "chartlab/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace chartlab {
namespace {

int initial_thread_count() {
  if (const char* env = std::getenv("CHARTLAB_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::atomic<int>& threads() {
  static std::atomic<int> n{initial_thread_count()};
  return n;
}

}  // namespace

int thread_count() { return threads().load(); }

void set_thread_count(int n) { threads().store(std::max(1, n)); }

}  // namespace chartlab
