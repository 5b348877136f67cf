#include "soc/thread_pool.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace soc {

WorkerPool::WorkerPool(std::size_t n_workers) {
  if (n_workers == 0) n_workers = std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t k = 1; k < n_workers; ++k) threads_.emplace_back([this] { worker_loop(); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  for (auto& t : threads_) t.join();
}

std::size_t WorkerPool::workers_from_env(std::size_t fallback) {
  if (const char* v = std::getenv("SOC_WORKERS")) {
    try {
      const long n = std::stol(v);
      if (n > 0) return static_cast<std::size_t>(n);
    } catch (...) {
    }
  }
  return fallback;
}

void WorkerPool::run_some(Batch& b) {
  for (;;) {
    const std::size_t k = b.next.fetch_add(1);
    if (k >= b.n) return;
    try {
      (*b.fn)(k);
    } catch (...) {
      std::lock_guard lock(b.mu);
      if (!b.error) b.error = std::current_exception();
    }
    if (b.done.fetch_add(1) + 1 == b.n) {
      std::lock_guard lock(b.mu);
      b.cv.notify_all();
    }
  }
}

void WorkerPool::worker_loop() {
  for (;;) {
    std::shared_ptr<Batch> batch;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
      if (stop_) return;
      batch = queue_.front();
      if (batch->next.load() >= batch->n) {
        queue_.pop_front();
        continue;
      }
    }
    run_some(*batch);
  }
}

void WorkerPool::parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  if (threads_.empty() || n == 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  auto batch = std::make_shared<Batch>();
  batch->fn = &fn;
  batch->n = n;
  {
    std::lock_guard lock(mu_);
    queue_.push_back(batch);
  }
  cv_.notify_all();
  run_some(*batch);
  {
    std::unique_lock lock(batch->mu);
    batch->cv.wait(lock, [&] { return batch->done.load() == batch->n; });
  }
  {
    std::lock_guard lock(mu_);
    std::erase(queue_, batch);
  }
  if (batch->error) std::rethrow_exception(batch->error);
}

}  // namespace soc
