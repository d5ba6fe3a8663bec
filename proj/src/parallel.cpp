#include "fresco/parallel.hpp"

#include <atomic>
#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace fresco {

int thread_count() {
  static int n = [] {
    if (const char* env = std::getenv("FRESCO_THREADS")) {
      int v = std::atoi(env);
      if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
  }();
  return n;
}

namespace {

thread_local bool g_in_worker = false;

struct Pool {
  std::mutex mu;
  std::condition_variable cv_work;
  std::condition_variable cv_done;
  const std::function<void(std::int64_t)>* fn = nullptr;
  std::atomic<std::int64_t> next{0};
  std::int64_t total = 0;
  std::int64_t grain = 1;
  int active = 0;
  std::uint64_t epoch = 0;
  bool shutdown = false;
  std::vector<std::thread> workers;

  explicit Pool(int n) {
    for (int i = 0; i < n; ++i) workers.emplace_back([this] { worker(); });
  }

  ~Pool() {
    {
      std::lock_guard<std::mutex> lk(mu);
      shutdown = true;
    }
    cv_work.notify_all();
    for (auto& w : workers) w.join();
  }

  void drain() {
    while (true) {
      std::int64_t i = next.fetch_add(grain);
      if (i >= total) break;
      std::int64_t end = std::min(total, i + grain);
      for (; i < end; ++i) (*fn)(i);
    }
  }

  void worker() {
    g_in_worker = true;
    std::uint64_t seen = 0;
    while (true) {
      {
        std::unique_lock<std::mutex> lk(mu);
        cv_work.wait(lk, [&] { return shutdown || epoch != seen; });
        if (shutdown) return;
        seen = epoch;
        ++active;
      }
      drain();
      {
        std::lock_guard<std::mutex> lk(mu);
        if (--active == 0) cv_done.notify_all();
      }
    }
  }

  void run(std::int64_t n, const std::function<void(std::int64_t)>& f, std::int64_t g) {
    std::unique_lock<std::mutex> lk(mu);
    cv_done.wait(lk, [&] { return active == 0; });
    fn = &f;
    total = n;
    grain = g;
    next.store(0);
    ++epoch;
    lk.unlock();
    cv_work.notify_all();
    drain();  // caller participates
    lk.lock();
    cv_done.wait(lk, [&] { return active == 0; });
    fn = nullptr;
  }
};

}  // namespace

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& f,
                  std::int64_t grain) {
  if (n <= 0) return;
  if (grain < 1) grain = 1;
  int nthreads = thread_count();
  if (nthreads <= 1 || g_in_worker || n <= grain) {
    for (std::int64_t i = 0; i < n; ++i) f(i);
    return;
  }
  static Pool pool(thread_count() - 1);
  pool.run(n, f, grain);
}

}  // namespace fresco
