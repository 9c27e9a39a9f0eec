#include "sufstat/mixture.hpp"

#include <cmath>

#include "sufstat/error.hpp"
#include "sufstat/kmeans.hpp"
#include "sufstat/math.hpp"

namespace sufstat {

GeneralMixtureModel::GeneralMixtureModel(std::vector<double> weights,
                                         std::vector<Distribution> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (weights_.empty()) throw Error("GeneralMixtureModel needs at least one component");
  if (weights_.size() != components_.size())
    throw Error("GeneralMixtureModel needs one weight per component");
  double total = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) throw Error("GeneralMixtureModel weights must be >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw Error("invariant violated: GeneralMixtureModel weights must sum to 1 (got " +
                std::to_string(total) + ")");
  std::size_t offset = weights_.size();
  for (const auto& c : components_) {
    if (c.stats_kind() != components_.front().stats_kind() || c.dim() != components_.front().dim())
      throw Error("GeneralMixtureModel components must share family and shape");
    offsets_.push_back(offset);
    offset += c.stats_size();
  }
  log_weights_.resize(weights_.size());
  for (std::size_t j = 0; j < weights_.size(); ++j) log_weights_[j] = std::log(weights_[j]);
}

void GeneralMixtureModel::joint(std::span<const double> x, std::span<double> out) const {
  if (x.size() != dim())
    throw Error("sample has " + std::to_string(x.size()) + " features, mixture expects " +
                std::to_string(dim()));
  for (std::size_t j = 0; j < k(); ++j)
    out[j] = log_weights_[j] == kNegInf ? kNegInf
                                        : log_weights_[j] + components_[j].log_probability(x);
}

double GeneralMixtureModel::log_probability(std::span<const double> x) const {
  std::vector<double> lp(k());
  joint(x, lp);
  return log_sum_exp(lp);
}

std::vector<double> GeneralMixtureModel::predict_log_proba(std::span<const double> x) const {
  std::vector<double> lp(k());
  joint(x, lp);
  const double norm = log_sum_exp(lp);
  if (norm == kNegInf) throw Error("zero-probability sample: every component assigns it probability 0");
  for (auto& v : lp) v -= norm;
  return lp;
}

std::vector<double> GeneralMixtureModel::predict_proba(std::span<const double> x) const {
  auto lp = predict_log_proba(x);
  for (auto& v : lp) v = std::exp(v);
  return lp;
}

std::size_t GeneralMixtureModel::predict(std::span<const double> x) const {
  std::vector<double> lp(k());
  joint(x, lp);
  return argmax(lp);
}

SufficientStats GeneralMixtureModel::zero_stats() const {
  return SufficientStats("GeneralMixtureModel/" + std::to_string(k()) + "/" +
                             components_.front().stats_kind(),
                         offsets_.back() + components_.back().stats_size());
}

void GeneralMixtureModel::summarize(const DataView& batch, SufficientStats& into) const {
  if (into.is_identity()) into = zero_stats();
  if (into.kind() != zero_stats().kind()) throw Error("mixture statistics kind mismatch");
  if (batch.dim() != dim())
    throw Error("data has " + std::to_string(batch.dim()) + " features, mixture expects " +
                std::to_string(dim()));
  validate_rows(batch);
  auto acc = into.values();
  std::vector<double> lp(k());
  double ll = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double w = batch.weight(i);
    const auto x = batch.row(i);
    joint(x, lp);
    const double norm = log_sum_exp(lp);
    if (norm == kNegInf)
      throw Error("row " + std::to_string(batch.offset() + i) + ": zero-probability sample");
    into.add_total_weight(w);
    into.offer_witness(norm, x);
    if (w <= 0.0) continue;
    ll += w * norm;
    for (std::size_t j = 0; j < k(); ++j) {
      const double r = w * std::exp(lp[j] - norm);
      if (r == 0.0) continue;
      acc[j] += r;
      components_[j].accumulate(x, r, acc.subspan(offsets_[j], components_[j].stats_size()));
    }
  }
  into.add_log_likelihood(ll);
}

void GeneralMixtureModel::from_summaries(const SufficientStats& stats, double inertia) {
  if (stats.is_identity()) return;
  if (stats.kind() != zero_stats().kind() || stats.size() != zero_stats().size())
    throw Error("cannot update mixture from statistics of kind " + stats.kind());
  auto acc = stats.values();
  double mass = 0.0;
  for (std::size_t j = 0; j < k(); ++j) mass += acc[j];
  if (!(mass > 0.0)) return;

  for (std::size_t j = 0; j < k(); ++j) {
    const double estimate = acc[j] / mass;
    weights_[j] = inertia == 0.0 ? estimate : inertia * weights_[j] + (1.0 - inertia) * estimate;
    components_[j].from_summaries(acc.subspan(offsets_[j], components_[j].stats_size()), inertia);
  }

  // Collapsed components restart at the worst-explained row.
  if (k() > 1 && stats.witness()) {
    bool rescued = false;
    for (std::size_t j = 0; j < k(); ++j) {
      if (acc[j] >= kCollapsedComponentMass) continue;
      components_[j].recenter(stats.witness()->row);
      weights_[j] = 1.0 / static_cast<double>(k());
      rescued = true;
    }
    if (rescued) {
      double total = 0.0;
      for (double w : weights_) total += w;
      for (double& w : weights_) w /= total;
    }
  }
  for (std::size_t j = 0; j < k(); ++j) log_weights_[j] = std::log(weights_[j]);
}

SufficientStats em_epoch(const GeneralMixtureModel& model, BatchSource<DataView>& source,
                         const FitConfig& config) {
  return parallel_summarize(model, source, config);
}

DataBatch initial_sample(BatchSource<DataView>& source, std::size_t limit) {
  source.rewind();
  DataBatch sample;
  bool first = true;
  while (auto b = source.next()) {
    const auto& v = b->view;
    if (first) {
      sample = DataBatch(v.dim());
      first = false;
    }
    for (std::size_t i = 0; i < v.size() && sample.size() < limit; ++i)
      sample.add_row(v.row(i), v.weight(i));
    if (sample.size() >= limit) break;
  }
  if (first) throw Error("fit: the data source yielded no rows");
  return sample;
}

MixtureFit mixture_from_samples(const FamilySpec& family, std::size_t k,
                                BatchSource<DataView>& source, const FitConfig& config) {
  config.validate();
  if (k == 0) throw Error("k must be >= 1");
  source.rewind();
  auto peek = source.next();
  if (!peek) throw Error("fit: the data source yielded no rows");
  const std::size_t dim = peek->view.dim();
  const DataBatch sample = initial_sample(source, 50 * k * dim);
  validate_rows(sample.view());

  FitConfig kmeans_config = config;
  kmeans_config.max_iterations = config.kmeans_max_iterations;
  const KMeansFit clusters = lloyd_fit(sample.view(), k, kmeans_config);

  const Distribution prototype = blank_distribution(family, dim);
  std::vector<SufficientStats> cluster_stats(k, prototype.zero_stats());
  std::vector<double> cluster_mass(k, 0.0);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const std::size_t j = clusters.model.assign(sample.row(i));
    prototype.accumulate(sample.row(i), sample.weights[i], cluster_stats[j].values());
    cluster_stats[j].add_total_weight(sample.weights[i]);
    cluster_mass[j] += sample.weights[i];
  }
  double total = 0.0;
  for (double m : cluster_mass) total += m;
  std::vector<double> weights(k);
  std::vector<Distribution> components;
  components.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    weights[j] = cluster_mass[j] / total;
    Distribution c = prototype;
    c.recenter(clusters.model.centroid(j));
    c.from_summaries(cluster_stats[j], 0.0);
    components.push_back(std::move(c));
  }
  MixtureFit out{GeneralMixtureModel(std::move(weights), std::move(components)), {}};
  out.report = fit(out.model, source, config);
  return out;
}

}  // namespace sufstat
