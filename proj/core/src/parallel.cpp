#include "modip/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace modip {

namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int n)
{
  if (n < 1) { throw ConfigError("thread count must be >= 1"); }
  g_threads = n;
}

int num_threads() { return g_threads; }

void parallel_for(Index count, std::function<void(Index)> const &body)
{
  int const nt = int(std::min<Index>(g_threads, count));
  if (nt <= 1) {
    for (Index i = 0; i < count; ++i) { body(i); }
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (Index i = next++; i < count && !failed; i = next++) {
      try {
        body(i);
      } catch (...) {
        if (!failed.exchange(true)) { error = std::current_exception(); }
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(size_t(nt - 1));
  for (int t = 1; t < nt; ++t) { pool.emplace_back(worker); }
  worker();
  pool.clear();
  if (error) { std::rethrow_exception(error); }
}

} // namespace modip
