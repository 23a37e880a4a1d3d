#include "tpf/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace tpf {

unsigned default_thread_count() {
  if (const char* env = std::getenv("TPF_THREADS"); env != nullptr && *env != '\0') {
    try {
      const int n = std::stoi(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
      // fall through to hardware concurrency
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

unsigned resolve_threads(unsigned requested) {
  return requested == 0 ? default_thread_count() : requested;
}

void parallel_for(Index n_tasks, unsigned workers, const std::function<void(Index)>& body) {
  if (n_tasks <= 0) return;
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_tasks)));
  if (workers == 1) {
    for (Index t = 0; t < n_tasks; ++t) body(t);
    return;
  }

  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (Index t = w; t < n_tasks; t += workers) body(t);
        } catch (...) {
          std::scoped_lock lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace tpf
