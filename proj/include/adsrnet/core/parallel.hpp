#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace adsrnet {

/// Fixed-size worker pool used by the heavy kernels. Work is split with
/// static chunking: parallel_for divides [begin,end) into one contiguous
/// range per worker, so each index is processed by exactly one body call
/// and per-element arithmetic never depends on the worker count. Results
/// are bit-identical for any thread count as long as bodies only write
/// disjoint outputs.
class ThreadPool {
 public:
  explicit ThreadPool(int threads) {
    if (threads < 1) throw std::invalid_argument("ThreadPool: threads must be >= 1");
    for (int i = 0; i < threads - 1; ++i) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  ~ThreadPool() {
    {
      std::unique_lock<std::mutex> lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers_) t.join();
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int threads() const { return static_cast<int>(workers_.size()) + 1; }

  // Runs body(lo, hi) over a static partition of [begin, end). The calling
  // thread executes the first chunk; remaining chunks go to the workers.
  // Blocks until every chunk finishes. Exceptions thrown by bodies are
  // rethrown on the caller (first one wins).
  void parallel_for(std::int64_t begin, std::int64_t end,
                    const std::function<void(std::int64_t, std::int64_t)>& body) {
    std::int64_t count = end - begin;
    if (count <= 0) return;
    int nt = threads();
    std::int64_t chunk = (count + nt - 1) / nt;
    if (nt == 1 || count == 1) {
      body(begin, end);
      return;
    }

    std::vector<std::pair<std::int64_t, std::int64_t>> ranges;
    for (std::int64_t lo = begin; lo < end; lo += chunk) {
      std::int64_t hi = lo + chunk < end ? lo + chunk : end;
      ranges.emplace_back(lo, hi);
    }

    std::exception_ptr error;
    std::int64_t remaining = static_cast<std::int64_t>(ranges.size()) - 1;
    std::mutex done_mu;
    std::condition_variable done_cv;

    {
      std::unique_lock<std::mutex> lk(mu_);
      for (std::size_t i = 1; i < ranges.size(); ++i) {
        auto [lo, hi] = ranges[i];
        queue_.push_back([&, lo, hi] {
          try {
            body(lo, hi);
          } catch (...) {
            std::unique_lock<std::mutex> dlk(done_mu);
            if (!error) error = std::current_exception();
          }
          std::unique_lock<std::mutex> dlk(done_mu);
          if (--remaining == 0) done_cv.notify_one();
        });
      }
    }
    cv_.notify_all();

    try {
      body(ranges[0].first, ranges[0].second);
    } catch (...) {
      std::unique_lock<std::mutex> dlk(done_mu);
      if (!error) error = std::current_exception();
    }

    std::unique_lock<std::mutex> dlk(done_mu);
    done_cv.wait(dlk, [&] { return remaining == 0; });
    if (error) std::rethrow_exception(error);
  }

 private:
  void worker_loop() {
    for (;;) {
      std::function<void()> job;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [this] { return stop_ || !queue_.empty(); });
        if (stop_ && queue_.empty()) return;
        job = std::move(queue_.front());
        queue_.erase(queue_.begin());
      }
      job();
    }
  }

  std::vector<std::thread> workers_;
  std::vector<std::function<void()>> queue_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stop_ = false;
};

namespace detail {

inline int& global_thread_count() {
  static int n = 1;
  return n;
}

}  // namespace detail

/// Global pool shared by all kernels. Defaults to a single thread; the CLI
/// sets it from --threads. Resizing destroys and rebuilds the pool, so it
/// must not be called while kernels are running.
inline ThreadPool& global_pool() {
  static std::unique_ptr<ThreadPool> pool =
      std::make_unique<ThreadPool>(detail::global_thread_count());
  if (pool->threads() != detail::global_thread_count()) {
    pool = std::make_unique<ThreadPool>(detail::global_thread_count());
  }
  return *pool;
}

inline void set_global_threads(int n) {
  if (n < 1) throw std::invalid_argument("set_global_threads: n must be >= 1");
  detail::global_thread_count() = n;
  global_pool();
}

inline void parallel_for(std::int64_t begin, std::int64_t end,
                         const std::function<void(std::int64_t, std::int64_t)>& body) {
  global_pool().parallel_for(begin, end, body);
}

}  // namespace adsrnet
