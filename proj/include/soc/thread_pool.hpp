#pragma once

// Persistent worker pool with a blocking parallel_for. The calling thread
// works on its own batch, so nested calls from inside a task cannot deadlock.

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace soc {

class WorkerPool {
 public:
  /// n_workers counts the caller; 0 picks hardware_concurrency.
  explicit WorkerPool(std::size_t n_workers = 0);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t size() const { return threads_.size() + 1; }

  /// Runs fn(0) .. fn(n-1) and returns once all have finished. The first
  /// exception thrown by any index is rethrown here.
  void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

  /// Worker count from SOC_WORKERS if set and positive, else `fallback`.
  static std::size_t workers_from_env(std::size_t fallback = 0);

 private:
  struct Batch {
    const std::function<void(std::size_t)>* fn = nullptr;
    std::size_t n = 0;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex mu;
    std::condition_variable cv;
    std::exception_ptr error;
  };

  static void run_some(Batch& b);
  void worker_loop();

  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::shared_ptr<Batch>> queue_;
  bool stop_ = false;
};

}  // namespace soc
