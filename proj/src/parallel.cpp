#include "tcemb/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace tcemb {

int thread_budget() {
  const char* env = std::getenv("TC_THREADS");
  if (env == nullptr) return 1;
  const int requested = std::atoi(env);
  if (requested <= 1) return 1;
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  return hw > 0 ? std::min(requested, hw) : requested;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const int budget = thread_budget();
  if (budget <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      body(i);
    }
  };
  std::vector<std::thread> threads;
  const int n_threads = std::min<std::size_t>(static_cast<std::size_t>(budget), count);
  threads.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
}

}  // namespace tcemb
