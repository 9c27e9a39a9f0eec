#pragma once

#include <algorithm>
#include <concepts>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

#include "sufstat/data.hpp"
#include "sufstat/error.hpp"
#include "sufstat/stats.hpp"

namespace sufstat {

struct FitConfig {
  BatchSize batch_size;                      // nullopt: the whole source is one batch
  std::optional<std::size_t> batches_per_epoch;  // nullopt: update once per pass
  std::size_t max_iterations = 100;
  double stop_threshold = 0.1;  // absolute log-likelihood improvement
  double inertia = 0.0;
  std::size_t worker_count = 1;
  bool deterministic_merge = true;
  std::uint64_t rng_seed = 0;
  std::size_t kmeans_max_iterations = 10;  // Lloyd budget when k-means initializes a model

  void validate() const;
};

struct FitReport {
  // Total training log-likelihood of each epoch, measured during the
  // E-step of that epoch (i.e. under the parameters entering it).
  std::vector<double> log_likelihood;
  std::size_t iterations_run = 0;
  // Last epoch-over-epoch improvement; NaN when fewer than two epochs ran.
  double improvement_at_stop = std::numeric_limits<double>::quiet_NaN();
};

// The training protocol every model implements. `summarize` accumulates a
// batch into `into` and must be a pure function of (model, batch);
// `from_summaries` is the only mutating step.
template <class M>
concept Trainable = requires(const M& model, M& target, const SufficientStats& stats,
                             SufficientStats& into, typename M::view_type batch, double inertia) {
  { model.zero_stats() } -> std::same_as<SufficientStats>;
  model.summarize(batch, into);
  target.from_summaries(stats, inertia);
  { model.is_iterative() } -> std::convertible_to<bool>;
};

// Fixed set of threads executing index-addressed tasks. The calling thread
// takes part, so a pool of size 1 spawns nothing.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t size() const noexcept { return threads_.size() + 1; }

  // Runs task(i) for every i in [0, count). After the first task throws,
  // no new task starts; the first exception is rethrown once in-flight
  // tasks finish.
  void run(std::size_t count, const std::function<void(std::size_t)>& task);

 private:
  void worker_loop();
  void drain();

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t)>* task_ = nullptr;
  std::size_t count_ = 0;
  std::size_t next_ = 0;
  std::size_t busy_ = 0;
  std::uint64_t generation_ = 0;
  bool stopping_ = false;
  std::exception_ptr error_;
};

namespace detail {

// Row range [begin, end) of one summarize task within batch `batch`.
struct Task {
  std::size_t batch;
  std::size_t begin;
  std::size_t end;
};

// Splits a window of batches into tasks: one per batch, except that when
// the window holds fewer batches than workers each batch is cut into
// `workers / batches` contiguous chunks. Depends only on the batch sizes
// and the worker count.
std::vector<Task> plan_tasks(std::span<const std::size_t> batch_sizes, std::size_t workers);

template <class View>
std::size_t view_size(const View& v) {
  return v.size();
}

}  // namespace detail

// Summarizes a window of batches against an immutable model and merges the
// partial statistics into `into`. With deterministic merging the partials
// are merged in task order, so the result is bitwise reproducible for a
// given worker count.
template <Trainable M>
void summarize_window(const M& model, std::span<const LoadedBatch<typename M::view_type>> window,
                      WorkerPool* pool, bool deterministic, SufficientStats& into) {
  if (pool == nullptr || pool->size() == 1) {
    for (const auto& b : window) {
      SufficientStats part = model.zero_stats();
      model.summarize(b.view, part);
      into.merge(part);
    }
    return;
  }
  std::vector<std::size_t> sizes;
  sizes.reserve(window.size());
  for (const auto& b : window) sizes.push_back(detail::view_size(b.view));
  const auto tasks = detail::plan_tasks(sizes, pool->size());

  if (deterministic) {
    std::vector<SufficientStats> partials(tasks.size());
    pool->run(tasks.size(), [&](std::size_t i) {
      const auto& t = tasks[i];
      SufficientStats part = model.zero_stats();
      model.summarize(window[t.batch].view.slice(t.begin, t.end), part);
      partials[i] = std::move(part);
    });
    for (const auto& p : partials) into.merge(p);
  } else {
    std::mutex merge_mutex;
    pool->run(tasks.size(), [&](std::size_t i) {
      const auto& t = tasks[i];
      SufficientStats part = model.zero_stats();
      model.summarize(window[t.batch].view.slice(t.begin, t.end), part);
      std::lock_guard lock(merge_mutex);
      into.merge(part);
    });
  }
}

namespace detail {

struct EpochResult {
  SufficientStats last_stats;
  double log_likelihood = 0.0;
  double total_weight = 0.0;
  std::size_t rows = 0;
};

// One pass over the source. Updates the model after every
// `batches_per_epoch` batches when `update` is set (statistics reset after
// each update); otherwise only summarizes.
template <Trainable M>
EpochResult run_epoch(M& model, BatchSource<typename M::view_type>& source,
                         const FitConfig& config, WorkerPool* pool, bool update) {
  using View = typename M::view_type;
  const std::size_t workers = pool ? pool->size() : 1;
  const std::size_t group_limit =
      config.batches_per_epoch.value_or(std::numeric_limits<std::size_t>::max());

  EpochResult result;
  SufficientStats group = model.zero_stats();
  std::size_t in_group = 0;
  auto flush = [&] {
    result.log_likelihood += group.log_likelihood();
    result.total_weight += group.total_weight();
    if (update && group.total_weight() > 0.0) model.from_summaries(group, config.inertia);
    result.last_stats = std::move(group);
    group = model.zero_stats();
    in_group = 0;
  };

  source.rewind();
  std::vector<LoadedBatch<View>> window;
  bool exhausted = false;
  while (!exhausted) {
    window.clear();
    const std::size_t want = std::min(workers, group_limit - in_group);
    while (window.size() < want) {
      auto b = source.next();
      if (!b) {
        exhausted = true;
        break;
      }
      result.rows += view_size(b->view);
      window.push_back(std::move(*b));
    }
    if (window.empty()) break;
    summarize_window(model, std::span<const LoadedBatch<View>>(window), pool,
                     config.deterministic_merge, group);
    in_group += window.size();
    if (in_group >= group_limit) flush();
  }
  if (in_group > 0) flush();
  return result;
}

}  // namespace detail

// Summarizes one full epoch without touching the model.
template <Trainable M>
SufficientStats parallel_summarize(const M& model, BatchSource<typename M::view_type>& source,
                                   const FitConfig& config) {
  config.validate();
  using View = typename M::view_type;
  WorkerPool pool(config.worker_count);
  SufficientStats total = model.zero_stats();
  source.rewind();
  std::vector<LoadedBatch<View>> window;
  bool exhausted = false;
  while (!exhausted) {
    window.clear();
    while (window.size() < pool.size()) {
      auto b = source.next();
      if (!b) {
        exhausted = true;
        break;
      }
      window.push_back(std::move(*b));
    }
    if (window.empty()) break;
    summarize_window(model, std::span<const LoadedBatch<View>>(window), &pool,
                     config.deterministic_merge, total);
  }
  return total;
}

// Trains `model` in place. Single-pass models get one summarize pass and
// one update per batch group; iterative (EM) models repeat epochs until the
// log-likelihood improvement drops below the stop threshold or the
// iteration budget runs out.
template <Trainable M>
FitReport fit(M& model, BatchSource<typename M::view_type>& source, const FitConfig& config) {
  config.validate();
  WorkerPool pool(config.worker_count);
  FitReport report;
  const std::size_t epochs = model.is_iterative() ? config.max_iterations : 1;
  for (std::size_t it = 0; it < epochs; ++it) {
    auto epoch = detail::run_epoch(model, source, config, &pool, true);
    if (epoch.rows == 0) throw Error("fit: the data source yielded no rows");
    if (!(epoch.total_weight > 0.0)) throw Error("fit: total sample weight is zero");
    report.log_likelihood.push_back(epoch.log_likelihood);
    report.iterations_run = it + 1;
    if (it > 0) {
      const double prev = report.log_likelihood[it - 1];
      report.improvement_at_stop = epoch.log_likelihood - prev;
      if (report.improvement_at_stop < config.stop_threshold) break;
    }
  }
  return report;
}

}  // namespace sufstat
