#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sufstat/data.hpp"
#include "sufstat/distributions.hpp"
#include "sufstat/engine.hpp"

namespace sufstat {

// Components whose responsibility mass falls below this are reseeded.
inline constexpr double kCollapsedComponentMass = 1e-8;

// General mixture model: prior weights over k components of one family.
//
// Stats layout: [component mass (k)] [component 0 stats] ... [component k-1 stats].
// The stats also carry the E-step log-likelihood and the worst-scoring row.
class GeneralMixtureModel {
 public:
  using view_type = DataView;

  GeneralMixtureModel(std::vector<double> weights, std::vector<Distribution> components);

  std::size_t k() const noexcept { return weights_.size(); }
  std::size_t dim() const noexcept { return components_.front().dim(); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<Distribution>& components() const noexcept { return components_; }

  double log_probability(std::span<const double> x) const;
  std::vector<double> predict_log_proba(std::span<const double> x) const;
  std::vector<double> predict_proba(std::span<const double> x) const;
  std::size_t predict(std::span<const double> x) const;

  SufficientStats zero_stats() const;
  void summarize(const DataView& batch, SufficientStats& into) const;
  void from_summaries(const SufficientStats& stats, double inertia);
  bool is_iterative() const noexcept { return true; }

  bool operator==(const GeneralMixtureModel& o) const {
    return weights_ == o.weights_ && components_ == o.components_;
  }

 private:
  void joint(std::span<const double> x, std::span<double> out) const;

  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<Distribution> components_;
  std::vector<std::size_t> offsets_;
};

struct MixtureFit {
  GeneralMixtureModel model;
  FitReport report;
};

// Statistics of one E-step over the whole source (the model is untouched).
// The returned stats carry the epoch's total log-likelihood.
SufficientStats em_epoch(const GeneralMixtureModel& model, BatchSource<DataView>& source,
                         const FitConfig& config);

// k-means++/Lloyd on the first min(n, 50*k*d) rows (the same rows whatever
// the batch size), per-cluster maximum likelihood, cluster-fraction
// weights, then EM.
MixtureFit mixture_from_samples(const FamilySpec& family, std::size_t k,
                                BatchSource<DataView>& source, const FitConfig& config);

// Rows [0, limit) gathered from the start of the source.
DataBatch initial_sample(BatchSource<DataView>& source, std::size_t limit);

}  // namespace sufstat
