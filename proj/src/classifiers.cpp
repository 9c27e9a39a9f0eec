#include "sufstat/classifiers.hpp"

#include <cmath>
#include <numeric>

#include "sufstat/error.hpp"
#include "sufstat/math.hpp"

namespace sufstat {
namespace {

void check_priors(const std::vector<double>& priors) {
  double total = 0.0;
  for (double p : priors) {
    if (!std::isfinite(p) || p < 0.0) throw Error("BayesClassifier priors must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw Error("invariant violated: BayesClassifier priors must sum to 1 (got " +
                std::to_string(total) + ")");
}

}  // namespace

BayesClassifier::BayesClassifier(std::vector<double> priors, std::vector<Distribution> distributions,
                                 bool naive)
    : priors_(std::move(priors)), distributions_(std::move(distributions)), naive_(naive) {
  if (priors_.size() < 2) throw Error("BayesClassifier needs at least two classes");
  if (priors_.size() != distributions_.size())
    throw Error("BayesClassifier needs one distribution per class");
  check_priors(priors_);
  std::size_t offset = priors_.size() + 1;
  for (const auto& d : distributions_) {
    if (d.dim() != distributions_.front().dim() || d.stats_kind() != distributions_.front().stats_kind())
      throw Error("BayesClassifier class distributions must share family and dimension");
    offsets_.push_back(offset);
    offset += d.stats_size();
  }
  log_priors_.resize(priors_.size());
  for (std::size_t c = 0; c < priors_.size(); ++c) log_priors_[c] = std::log(priors_[c]);
  reset_seen();
}

BayesClassifier BayesClassifier::blank(const FamilySpec& family, std::size_t classes,
                                       std::size_t dim) {
  if (classes < 2) throw Error("a classifier needs at least two classes");
  std::vector<Distribution> dists(classes, blank_distribution(family, dim));
  return BayesClassifier(std::vector<double>(classes, 1.0 / static_cast<double>(classes)),
                         std::move(dists), is_univariate(family.family));
}

void BayesClassifier::reset_seen() noexcept {
  seen_class_mass_.assign(priors_.size(), 0.0);
  seen_unlabeled_ = 0.0;
}

std::vector<double> BayesClassifier::joint_log_likelihood(std::span<const double> x) const {
  if (x.size() != dim())
    throw Error("sample has " + std::to_string(x.size()) + " features, classifier expects " +
                std::to_string(dim()));
  std::vector<double> out(priors_.size());
  for (std::size_t c = 0; c < priors_.size(); ++c)
    out[c] = log_priors_[c] == kNegInf ? kNegInf
                                       : log_priors_[c] + distributions_[c].log_probability(x);
  return out;
}

std::vector<double> BayesClassifier::predict_log_proba(std::span<const double> x) const {
  auto lp = joint_log_likelihood(x);
  const double norm = log_sum_exp(lp);
  if (norm == kNegInf) throw Error("zero-probability sample: every class assigns it probability 0");
  for (auto& v : lp) v -= norm;
  return lp;
}

std::vector<double> BayesClassifier::predict_proba(std::span<const double> x) const {
  auto lp = predict_log_proba(x);
  for (auto& v : lp) v = std::exp(v);
  return lp;
}

std::size_t BayesClassifier::predict(std::span<const double> x) const {
  return argmax(joint_log_likelihood(x));
}

double BayesClassifier::log_probability(std::span<const double> x) const {
  return log_sum_exp(joint_log_likelihood(x));
}

SufficientStats BayesClassifier::zero_stats() const {
  const std::size_t size = offsets_.back() + distributions_.back().stats_size();
  return SufficientStats("BayesClassifier/" + std::to_string(priors_.size()) + "/" +
                             distributions_.front().stats_kind(),
                         size);
}

void BayesClassifier::summarize(const DataView& batch, SufficientStats& into) const {
  if (into.is_identity()) into = zero_stats();
  if (into.kind() != zero_stats().kind()) throw Error("classifier statistics kind mismatch");
  if (batch.dim() != dim())
    throw Error("data has " + std::to_string(batch.dim()) + " features, classifier expects " +
                std::to_string(dim()));
  if (!batch.has_labels()) throw Error("classifier training data needs a label column");
  validate_rows(batch);

  const std::size_t C = priors_.size();
  auto acc = into.values();
  std::vector<double> lp(C);
  double ll = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double w = batch.weight(i);
    const int label = batch.label(i);
    const auto x = batch.row(i);
    if (label >= static_cast<int>(C))
      throw Error("row " + std::to_string(batch.offset() + i) + ": label " +
                  std::to_string(label) + " out of range for " + std::to_string(C) + " classes");
    if (label >= 0) {
      const auto c = static_cast<std::size_t>(label);
      acc[c] += w;
      distributions_[c].accumulate(x, w, acc.subspan(offsets_[c], distributions_[c].stats_size()));
      into.add_total_weight(w);
      if (mode_ == TrainingMode::semi_supervised && w > 0.0)
        ll += w * (log_priors_[c] + distributions_[c].log_probability(x));
      continue;
    }
    switch (mode_) {
      case TrainingMode::supervised:
        throw Error("row " + std::to_string(batch.offset() + i) +
                    ": unlabelled row (-1) in supervised training");
      case TrainingMode::labeled_only:
        acc[C] += w;
        break;
      case TrainingMode::semi_supervised: {
        acc[C] += w;
        into.add_total_weight(w);
        if (w <= 0.0) break;
        for (std::size_t c = 0; c < C; ++c)
          lp[c] = log_priors_[c] == kNegInf ? kNegInf
                                            : log_priors_[c] + distributions_[c].log_probability(x);
        const double norm = log_sum_exp(lp);
        if (norm == kNegInf)
          throw Error("row " + std::to_string(batch.offset() + i) + ": zero-probability sample");
        ll += w * norm;
        for (std::size_t c = 0; c < C; ++c) {
          const double r = w * std::exp(lp[c] - norm);
          if (r == 0.0) continue;
          acc[c] += r;
          distributions_[c].accumulate(x, r, acc.subspan(offsets_[c], distributions_[c].stats_size()));
        }
        break;
      }
    }
  }
  into.add_log_likelihood(ll);
}

void BayesClassifier::from_summaries(const SufficientStats& stats, double inertia) {
  if (stats.is_identity()) return;
  if (stats.kind() != zero_stats().kind() || stats.size() != zero_stats().size())
    throw Error("cannot update classifier from statistics of kind " + stats.kind());
  const std::size_t C = priors_.size();
  auto acc = stats.values();
  double mass = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    mass += acc[c];
    seen_class_mass_[c] += acc[c];
  }
  seen_unlabeled_ += acc[C];
  if (!(mass > 0.0)) return;
  for (std::size_t c = 0; c < C; ++c) {
    const double estimate = acc[c] / mass;
    priors_[c] = inertia == 0.0 ? estimate : inertia * priors_[c] + (1.0 - inertia) * estimate;
    log_priors_[c] = std::log(priors_[c]);
    distributions_[c].from_summaries(acc.subspan(offsets_[c], distributions_[c].stats_size()),
                                     inertia);
  }
}

LabelScan scan_labels(BatchSource<DataView>& source) {
  LabelScan scan;
  int max_label = -1;
  source.rewind();
  while (auto b = source.next()) {
    const auto& v = b->view;
    if (!v.has_labels()) throw Error("classifier training data needs a label column");
    scan.dim = v.dim();
    scan.rows += v.size();
    for (int label : v.labels()) {
      if (label < -1) throw Error("labels must be >= -1");
      if (label == -1) ++scan.unlabeled;
      max_label = std::max(max_label, label);
    }
  }
  if (scan.rows == 0) throw Error("fit: the data source yielded no rows");
  scan.n_classes = static_cast<std::size_t>(max_label + 1);
  return scan;
}

namespace {

ClassifierFit initial_fit(const FamilySpec& family, std::size_t n_classes,
                          BatchSource<DataView>& source, const FitConfig& config,
                          BayesClassifier::TrainingMode mode) {
  source.rewind();
  auto first = source.next();
  if (!first) throw Error("fit: the data source yielded no rows");
  ClassifierFit out{BayesClassifier::blank(family, n_classes, first->view.dim()), {}, false, {}};
  out.model.set_training_mode(mode);
  out.report = fit(out.model, source, config);
  for (std::size_t c = 0; c < n_classes; ++c)
    if (!(out.model.seen_class_mass()[c] > 0.0))
      throw Error("empty class " + std::to_string(c) + ": no labelled rows with positive weight");
  return out;
}

}  // namespace

ClassifierFit fit_supervised(const FamilySpec& family, std::size_t n_classes,
                             BatchSource<DataView>& source, const FitConfig& config) {
  auto out = initial_fit(family, n_classes, source, config, BayesClassifier::TrainingMode::supervised);
  out.model.set_training_mode(BayesClassifier::TrainingMode::supervised);
  return out;
}

ClassifierFit fit_semisupervised(const FamilySpec& family, std::size_t n_classes,
                                 BatchSource<DataView>& source, const FitConfig& config) {
  auto out =
      initial_fit(family, n_classes, source, config, BayesClassifier::TrainingMode::labeled_only);
  if (!(out.model.seen_unlabeled_weight() > 0.0)) {
    out.warnings.push_back("no unlabelled rows: semi-supervised fit reduces to supervised");
    out.model.set_training_mode(BayesClassifier::TrainingMode::supervised);
    return out;
  }
  out.model.set_training_mode(BayesClassifier::TrainingMode::semi_supervised);
  out.report = fit(out.model, source, config);
  out.semi_supervised = true;
  out.model.set_training_mode(BayesClassifier::TrainingMode::supervised);
  return out;
}

ClassifierFit fit_classifier(const FamilySpec& family, std::size_t n_classes,
                             BatchSource<DataView>& source, const FitConfig& config) {
  auto scan = scan_labels(source);
  if (n_classes == 0) n_classes = scan.n_classes;
  if (scan.unlabeled > 0) return fit_semisupervised(family, n_classes, source, config);
  return fit_supervised(family, n_classes, source, config);
}

}  // namespace sufstat
