#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sufstat/data.hpp"
#include "sufstat/engine.hpp"
#include "sufstat/math.hpp"

namespace sufstat {

class KMeansModel {
 public:
  // `centroids` is k rows of `dim` values.
  KMeansModel(std::size_t dim, std::vector<double> centroids);

  std::size_t k() const noexcept { return dim_ == 0 ? 0 : centroids_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<double>& centroids() const noexcept { return centroids_; }
  std::span<const double> centroid(std::size_t j) const {
    return std::span<const double>(centroids_).subspan(j * dim_, dim_);
  }

  // Nearest centroid by squared Euclidean distance; ties go to the lowest
  // index.
  std::size_t assign(std::span<const double> x) const;

  bool operator==(const KMeansModel& o) const {
    return dim_ == o.dim_ && centroids_ == o.centroids_;
  }

 private:
  std::size_t dim_;
  std::vector<double> centroids_;
};

struct KMeansFit {
  KMeansModel model;
  std::size_t iterations = 0;
  // Weighted within-cluster sum of squares after each assignment step.
  std::vector<double> objective;
  // Rows whose cluster changed in each assignment step (the first step
  // counts rows that moved away from the initial centroids' labelling).
  std::vector<std::size_t> reassignments;
};

double squared_distance(std::span<const double> a, std::span<const double> b);

// k-means++ seeding: the first centroid is a uniformly chosen row, each
// further centroid is drawn with probability proportional to weight times
// squared distance to the nearest chosen centroid. Throws when the data
// holds fewer than k distinct (positive-weight) rows.
KMeansModel kmeanspp_init(const DataView& data, std::size_t k, Rng& rng);

// Lloyd iterations from the given centroids until no row changes cluster
// or `max_iterations` assignment steps have run. A cluster left empty is
// moved onto the row farthest from its assigned centroid.
KMeansFit lloyd_refine(const DataView& data, KMeansModel init, std::size_t max_iterations);

// k-means++ seeding (seeded from config.rng_seed) followed by Lloyd
// iterations bounded by config.max_iterations.
KMeansFit lloyd_fit(const DataView& data, std::size_t k, const FitConfig& config);

}  // namespace sufstat
