#pragma once

#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace fashioncut {

// Minimal fork-join pool for data-parallel loops. Work is split into
// static contiguous chunks, so the set of items each worker touches is a
// pure function of (n, num_threads) and results stay bit-reproducible.
class ThreadPool {
 public:
  static ThreadPool& instance() {
    static ThreadPool pool;
    return pool;
  }

  int num_threads() const { return static_cast<int>(workers_.size()) + 1; }

  // fn(begin, end, slot) over [0, n); caller's thread runs slot 0.
  // Concurrent external callers are serialized on the job slot; a caller's
  // own serial work still overlaps with another caller's parallel section.
  void parallel_chunks(int64_t n, const std::function<void(int64_t, int64_t, int)>& fn) {
    const int nt = num_threads();
    if (n <= 0) return;
    if (nt == 1 || n == 1) {
      fn(0, n, 0);
      return;
    }
    std::lock_guard<std::mutex> submit_lk(submit_mu_);
    const int64_t chunk = (n + nt - 1) / nt;
    {
      std::unique_lock<std::mutex> lk(mu_);
      job_ = &fn;
      job_n_ = n;
      job_chunk_ = chunk;
      pending_ = 0;
      for (size_t i = 0; i < workers_.size(); ++i) {
        int slot = static_cast<int>(i) + 1;
        if (slot * chunk < n) ++pending_;
      }
      ++generation_;
      cv_start_.notify_all();
    }
    fn(0, std::min<int64_t>(chunk, n), 0);
    std::unique_lock<std::mutex> lk(mu_);
    cv_done_.wait(lk, [&] { return pending_ == 0; });
    job_ = nullptr;
  }

  ~ThreadPool() {
    {
      std::unique_lock<std::mutex> lk(mu_);
      stop_ = true;
      ++generation_;
      cv_start_.notify_all();
    }
    for (auto& t : workers_) t.join();
  }

 private:
  ThreadPool() {
    unsigned hw = std::thread::hardware_concurrency();
    int nt = hw == 0 ? 2 : static_cast<int>(hw);
    for (int i = 1; i < nt; ++i) {
      workers_.emplace_back([this, i] { worker_loop(i); });
    }
  }

  void worker_loop(int slot) {
    uint64_t seen = 0;
    for (;;) {
      const std::function<void(int64_t, int64_t, int)>* job = nullptr;
      int64_t begin = 0, end = 0;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_start_.wait(lk, [&] { return generation_ != seen; });
        seen = generation_;
        if (stop_) return;
        begin = slot * job_chunk_;
        if (job_ == nullptr || begin >= job_n_) continue;
        end = std::min<int64_t>(begin + job_chunk_, job_n_);
        job = job_;
      }
      (*job)(begin, end, slot);
      {
        std::unique_lock<std::mutex> lk(mu_);
        if (--pending_ == 0) cv_done_.notify_all();
      }
    }
  }

  std::vector<std::thread> workers_;
  std::mutex submit_mu_;
  std::mutex mu_;
  std::condition_variable cv_start_, cv_done_;
  const std::function<void(int64_t, int64_t, int)>* job_ = nullptr;
  int64_t job_n_ = 0, job_chunk_ = 0;
  int pending_ = 0;
  uint64_t generation_ = 0;
  bool stop_ = false;
};

// Convenience: parallel loop over items, fn(i, slot).
inline void parallel_for(int64_t n, const std::function<void(int64_t, int)>& fn) {
  ThreadPool::instance().parallel_chunks(n, [&](int64_t b, int64_t e, int slot) {
    for (int64_t i = b; i < e; ++i) fn(i, slot);
  });
}

}  // namespace fashioncut
