#include "contiv/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace contiv {

namespace {

std::atomic<std::size_t> configured_jobs{0};
thread_local bool inside_worker = false;

std::size_t
env_jobs()
{
  const char* v = std::getenv("CONTIV_JOBS");
  if (v == nullptr) {
    return 0;
  }
  try {
    const long k = std::stol(v);
    return k > 0 ? static_cast<std::size_t>(k) : 0;
  } catch (const std::exception&) {
    return 0;
  }
}

} // namespace

void
set_default_jobs(std::size_t jobs)
{
  configured_jobs.store(jobs);
}

std::size_t
default_jobs()
{
  if (const auto j = configured_jobs.load(); j > 0) {
    return j;
  }
  if (const auto j = env_jobs(); j > 0) {
    return j;
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

void
parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t jobs)
{
  if (jobs == 0) {
    jobs = default_jobs();
  }
  jobs = std::min(jobs, n);
  if (jobs <= 1 || inside_worker) {
    for (std::size_t i = 0; i < n; ++i) {
      body(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    inside_worker = true;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) {
        break;
      }
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) {
          error = std::current_exception();
        }
        next.store(n);
      }
    }
    inside_worker = false;
  };
  std::vector<std::thread> threads;
  threads.reserve(jobs - 1);
  for (std::size_t t = 0; t + 1 < jobs; ++t) {
    threads.emplace_back(worker);
  }
  worker();
  for (auto& t : threads) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

} // namespace contiv
