#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace vigil {

/// Fixed-size worker pool with an optionally bounded queue.
class ThreadPool {
 public:
  using Task = std::function<void()>;

  /// `capacity == 0` means unbounded.
  explicit ThreadPool(std::size_t workers, std::size_t capacity = 0) : capacity_(capacity) {
    if (workers == 0) workers = 1;
    threads_.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) threads_.emplace_back([this] { work(); });
  }

  ~ThreadPool() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    ready_.notify_all();
    for (auto& t : threads_) t.join();
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  /// Never blocks. Returns false when the queue is at capacity.
  bool try_submit(Task task) {
    {
      std::lock_guard lock(mutex_);
      if (stopping_ || (capacity_ != 0 && queue_.size() >= capacity_)) return false;
      queue_.push_back(std::move(task));
    }
    ready_.notify_one();
    return true;
  }

  /// Blocks while a bounded queue is full.
  void submit(Task task) {
    {
      std::unique_lock lock(mutex_);
      space_.wait(lock, [&] { return stopping_ || capacity_ == 0 || queue_.size() < capacity_; });
      queue_.push_back(std::move(task));
    }
    ready_.notify_one();
  }

  /// Blocks until the queue is empty and no task is running.
  void wait_idle() {
    std::unique_lock lock(mutex_);
    idle_.wait(lock, [&] { return queue_.empty() && active_ == 0; });
  }

  std::size_t workers() const { return threads_.size(); }

  std::size_t queued() const {
    std::lock_guard lock(mutex_);
    return queue_.size();
  }

 private:
  void work() {
    for (;;) {
      Task task;
      {
        std::unique_lock lock(mutex_);
        ready_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
        if (queue_.empty()) return;
        task = std::move(queue_.front());
        queue_.pop_front();
        ++active_;
      }
      space_.notify_one();
      task();
      {
        std::lock_guard lock(mutex_);
        --active_;
        if (queue_.empty() && active_ == 0) idle_.notify_all();
      }
    }
  }

  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::condition_variable space_;
  std::condition_variable idle_;
  std::deque<Task> queue_;
  std::size_t active_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

}  // namespace vigil
