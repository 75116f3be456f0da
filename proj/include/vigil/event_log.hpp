#pragma once

#include <mutex>
#include <string>
#include <vector>

namespace vigil {

/// Ordered, thread-safe record of runtime events. Used by tests to assert
/// orderings such as cancel-before-commit.
class EventLog {
 public:
  void emit(std::string event) {
    std::lock_guard lock(mutex_);
    events_.push_back(std::move(event));
  }

  std::vector<std::string> events() const {
    std::lock_guard lock(mutex_);
    return events_;
  }

  /// Index of the first event starting with `prefix`, or -1.
  long find(const std::string& prefix) const {
    std::lock_guard lock(mutex_);
    for (std::size_t i = 0; i < events_.size(); ++i)
      if (events_[i].rfind(prefix, 0) == 0) return static_cast<long>(i);
    return -1;
  }

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> events_;
};

}  // namespace vigil
