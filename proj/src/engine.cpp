#include "sufstat/engine.hpp"

#include <cmath>

namespace sufstat {

void FitConfig::validate() const {
  if (batch_size && *batch_size == 0) throw Error("batch_size must be >= 1 or \"all\"");
  if (batches_per_epoch && *batches_per_epoch == 0)
    throw Error("batches_per_epoch must be >= 1 or \"all\"");
  if (max_iterations == 0) throw Error("max_iterations must be >= 1");
  if (!(stop_threshold >= 0.0)) throw Error("stop_threshold must be >= 0");
  if (!(inertia >= 0.0 && inertia < 1.0)) throw Error("inertia must lie in [0, 1)");
  if (worker_count == 0) throw Error("worker_count must be >= 1");
}

WorkerPool::WorkerPool(std::size_t workers) {
  if (workers == 0) throw Error("worker pool needs at least one worker");
  threads_.reserve(workers - 1);
  for (std::size_t i = 1; i < workers; ++i) threads_.emplace_back([this] { worker_loop(); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  for (auto& t : threads_) t.join();
}

// Pulls tasks of the current generation until none remain. Called with the
// mutex unlocked.
void WorkerPool::drain() {
  for (;;) {
    std::size_t index;
    const std::function<void(std::size_t)>* task;
    {
      std::lock_guard lock(mutex_);
      if (next_ >= count_ || error_) return;
      index = next_++;
      task = task_;
      ++busy_;
    }
    std::exception_ptr failure;
    try {
      (*task)(index);
    } catch (...) {
      failure = std::current_exception();
    }
    {
      std::lock_guard lock(mutex_);
      if (failure && !error_) error_ = failure;
      --busy_;
    }
    done_.notify_all();
  }
}

void WorkerPool::worker_loop() {
  std::uint64_t seen = 0;
  for (;;) {
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [&] { return stopping_ || generation_ != seen; });
      if (stopping_) return;
      seen = generation_;
    }
    drain();
  }
}

void WorkerPool::run(std::size_t count, const std::function<void(std::size_t)>& task) {
  if (count == 0) return;
  {
    std::lock_guard lock(mutex_);
    task_ = &task;
    count_ = count;
    next_ = 0;
    busy_ = 0;
    error_ = nullptr;
    ++generation_;
  }
  wake_.notify_all();
  drain();
  std::exception_ptr failure;
  {
    std::unique_lock lock(mutex_);
    done_.wait(lock, [&] { return busy_ == 0 && (next_ >= count_ || error_); });
    failure = error_;
    task_ = nullptr;
    count_ = 0;
    next_ = 0;
  }
  if (failure) std::rethrow_exception(failure);
}

namespace detail {

std::vector<Task> plan_tasks(std::span<const std::size_t> batch_sizes, std::size_t workers) {
  std::vector<Task> tasks;
  const std::size_t chunks =
      batch_sizes.empty() ? 1 : std::max<std::size_t>(1, workers / batch_sizes.size());
  for (std::size_t b = 0; b < batch_sizes.size(); ++b) {
    const std::size_t n = batch_sizes[b];
    const std::size_t parts = std::max<std::size_t>(1, std::min(chunks, n));
    for (std::size_t p = 0; p < parts; ++p)
      tasks.push_back(Task{b, n * p / parts, n * (p + 1) / parts});
  }
  return tasks;
}

}  // namespace detail
}  // namespace sufstat
