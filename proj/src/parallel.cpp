#include "cde/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace cde {

namespace {

thread_local bool inside_worker = false;

} // namespace

size_t
thread_count()
{
  size_t count = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CDE_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1)
        count = std::min(count, static_cast<size_t>(cap));
    } catch (const std::exception&) {
      // ignore malformed values
    }
  }
  return count;
}

void
parallel_for(size_t count, const std::function<void(size_t)>& body)
{
  const size_t workers = inside_worker ? 1 : std::min(thread_count(), count);
  if (workers <= 1) {
    for (size_t i = 0; i < count; ++i)
      body(i);
    return;
  }

  std::atomic<size_t> next{ 0 };
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    inside_worker = true;
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= count)
        return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure)
          failure = std::current_exception();
      }
    }
  };

  std::vector<std::jthread> pool;
  for (size_t w = 0; w < workers; ++w)
    pool.emplace_back(run);
  pool.clear();
  if (failure)
    std::rethrow_exception(failure);
}

} // namespace cde
