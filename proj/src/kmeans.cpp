#include "sufstat/kmeans.hpp"

#include <limits>
#include <random>
#include <string>

#include "sufstat/error.hpp"

namespace sufstat {

KMeansModel::KMeansModel(std::size_t dim, std::vector<double> centroids)
    : dim_(dim), centroids_(std::move(centroids)) {
  if (dim_ == 0 || centroids_.empty() || centroids_.size() % dim_ != 0)
    throw Error("KMeans centroids must form k >= 1 rows of the data width");
  for (double c : centroids_)
    if (!std::isfinite(c)) throw Error("KMeans centroids must be finite");
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total;
}

std::size_t KMeansModel::assign(std::span<const double> x) const {
  if (x.size() != dim_)
    throw Error("point has " + std::to_string(x.size()) + " coordinates, centroids have " +
                std::to_string(dim_));
  std::size_t best = 0;
  double best_d = squared_distance(x, centroid(0));
  for (std::size_t j = 1; j < k(); ++j) {
    const double d = squared_distance(x, centroid(j));
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

KMeansModel kmeanspp_init(const DataView& data, std::size_t k, Rng& rng) {
  validate_rows(data);
  const std::size_t n = data.size();
  if (k == 0) throw Error("k must be >= 1");
  if (n == 0) throw Error("k-means needs at least one row");

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < n; ++i)
    if (data.weight(i) > 0.0) candidates.push_back(i);
  if (candidates.empty()) throw Error("k-means needs a row with positive weight");

  std::vector<double> centroids;
  centroids.reserve(k * data.dim());
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  auto first = data.row(candidates[pick(rng)]);
  centroids.insert(centroids.end(), first.begin(), first.end());

  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = squared_distance(data.row(i), first);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t c = 1; c < k; ++c) {
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) mass += data.weight(i) * nearest[i];
    if (!(mass > 0.0))
      throw Error("k = " + std::to_string(k) + " exceeds the number of distinct rows (" +
                  std::to_string(c) + ")");
    const double target = unit(rng) * mass;
    double running = 0.0;
    std::size_t chosen = n;
    std::size_t last_positive = n;
    for (std::size_t i = 0; i < n; ++i) {
      const double m = data.weight(i) * nearest[i];
      if (m <= 0.0) continue;
      last_positive = i;
      running += m;
      if (target < running) {
        chosen = i;
        break;
      }
    }
    if (chosen == n) chosen = last_positive;
    auto row = data.row(chosen);
    centroids.insert(centroids.end(), row.begin(), row.end());
    for (std::size_t i = 0; i < n; ++i)
      nearest[i] = std::min(nearest[i], squared_distance(data.row(i), row));
  }
  return KMeansModel(data.dim(), std::move(centroids));
}

KMeansFit lloyd_refine(const DataView& data, KMeansModel init, std::size_t max_iterations) {
  validate_rows(data);
  if (data.dim() != init.dim()) throw Error("data width does not match centroid width");
  const std::size_t n = data.size();
  const std::size_t k = init.k();
  const std::size_t d = init.dim();

  KMeansFit fit{std::move(init), 0, {}, {}};
  std::vector<std::size_t> labels(n, std::numeric_limits<std::size_t>::max());
  std::vector<double> distance(n);

  for (std::size_t it = 0; it < max_iterations; ++it) {
    std::size_t moved = 0;
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = fit.model.assign(data.row(i));
      distance[i] = squared_distance(data.row(i), fit.model.centroid(j));
      objective += data.weight(i) * distance[i];
      if (labels[i] != j) ++moved;
      labels[i] = j;
    }
    fit.objective.push_back(objective);
    fit.iterations = it + 1;
    // The first pass only establishes labels.
    if (it == 0) moved = 0;
    fit.reassignments.push_back(moved);
    if (it > 0 && moved == 0) break;

    std::vector<double> sums(k * d, 0.0);
    std::vector<double> mass(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = data.weight(i);
      if (w <= 0.0) continue;
      mass[labels[i]] += w;
      auto row = data.row(i);
      for (std::size_t c = 0; c < d; ++c) sums[labels[i] * d + c] += w * row[c];
    }
    std::vector<double> centroids = fit.model.centroids();
    for (std::size_t j = 0; j < k; ++j) {
      if (mass[j] > 0.0) {
        for (std::size_t c = 0; c < d; ++c) centroids[j * d + c] = sums[j * d + c] / mass[j];
        continue;
      }
      // Empty cluster: move it onto the row farthest from its centroid.
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (distance[i] > distance[far]) far = i;
      auto row = data.row(far);
      std::copy(row.begin(), row.end(), centroids.begin() + static_cast<std::ptrdiff_t>(j * d));
      distance[far] = 0.0;
    }
    fit.model = KMeansModel(d, std::move(centroids));
  }
  return fit;
}

KMeansFit lloyd_fit(const DataView& data, std::size_t k, const FitConfig& config) {
  config.validate();
  Rng rng(config.rng_seed);
  return lloyd_refine(data, kmeanspp_init(data, k, rng), config.max_iterations);
}

}  // namespace sufstat
