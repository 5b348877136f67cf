#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>

#include "soc/thread_pool.hpp"

using namespace soc;

TEST_SUITE("thread_pool") {
  TEST_CASE("every index runs exactly once") {
    for (std::size_t workers : {1u, 2u, 5u}) {
      WorkerPool pool(workers);
      CHECK(pool.size() == workers);
      std::vector<std::atomic<int>> hits(1000);
      pool.parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
      for (const auto& h : hits) CHECK(h.load() == 1);
      pool.parallel_for(0, [](std::size_t) { FAIL("called"); });
    }
  }

  TEST_CASE("nested batches do not deadlock") {
    WorkerPool pool(3);
    std::atomic<int> total{0};
    pool.parallel_for(6, [&](std::size_t) { pool.parallel_for(50, [&](std::size_t) { total++; }); });
    CHECK(total.load() == 300);
  }

  TEST_CASE("exceptions propagate to the caller") {
    WorkerPool pool(2);
    CHECK_THROWS_AS(pool.parallel_for(20,
                                      [](std::size_t i) {
                                        if (i == 7) throw std::runtime_error("boom");
                                      }),
                    std::runtime_error);
    std::atomic<int> n{0};
    pool.parallel_for(10, [&](std::size_t) { n++; });
    CHECK(n.load() == 10);
  }

  TEST_CASE("worker count from the environment") {
    ::setenv("SOC_WORKERS", "3", 1);
    CHECK(WorkerPool::workers_from_env(7) == 3);
    ::setenv("SOC_WORKERS", "zero", 1);
    CHECK(WorkerPool::workers_from_env(7) == 7);
    ::unsetenv("SOC_WORKERS");
    CHECK(WorkerPool::workers_from_env(7) == 7);
  }
}
