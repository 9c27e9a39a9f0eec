#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sufstat/data.hpp"
#include "sufstat/distributions.hpp"
#include "sufstat/engine.hpp"

namespace sufstat {

// Bayes classifier: class priors plus one class-conditional distribution
// per class. The naive variant uses products of independent univariate
// distributions; the general variant uses one joint distribution per class.
//
// Stats layout: [class mass (C)] [unlabelled row weight (1)]
//               [class 0 distribution stats] ... [class C-1 distribution stats]
class BayesClassifier {
 public:
  using view_type = DataView;

  enum class TrainingMode {
    supervised,       // every row must carry a label in [0, C)
    labeled_only,     // rows labelled -1 are skipped (their weight is counted)
    semi_supervised,  // labelled rows one-hot, unlabelled rows by posterior
  };

  BayesClassifier(std::vector<double> priors, std::vector<Distribution> distributions, bool naive);

  // Uniform priors and default-parameter class distributions.
  static BayesClassifier blank(const FamilySpec& family, std::size_t classes, std::size_t dim);

  std::size_t n_classes() const noexcept { return priors_.size(); }
  std::size_t dim() const noexcept { return distributions_.front().dim(); }
  bool naive() const noexcept { return naive_; }
  const std::vector<double>& priors() const noexcept { return priors_; }
  const std::vector<Distribution>& distributions() const noexcept { return distributions_; }

  // log prior_c + log P(x | c) for every class.
  std::vector<double> joint_log_likelihood(std::span<const double> x) const;
  // log P(c | x); exponentiates to a vector summing to 1.
  std::vector<double> predict_log_proba(std::span<const double> x) const;
  std::vector<double> predict_proba(std::span<const double> x) const;
  // argmax of the posterior, ties to the lowest class index.
  std::size_t predict(std::span<const double> x) const;
  // Marginal log P(x).
  double log_probability(std::span<const double> x) const;

  SufficientStats zero_stats() const;
  void summarize(const DataView& batch, SufficientStats& into) const;
  void from_summaries(const SufficientStats& stats, double inertia);
  bool is_iterative() const noexcept { return mode_ == TrainingMode::semi_supervised; }

  TrainingMode training_mode() const noexcept { return mode_; }
  void set_training_mode(TrainingMode mode) noexcept { mode_ = mode; }

  // Totals of class mass and unlabelled weight over every from_summaries
  // call since the last reset; fit uses them to detect empty classes and
  // the presence of unlabelled rows.
  const std::vector<double>& seen_class_mass() const noexcept { return seen_class_mass_; }
  double seen_unlabeled_weight() const noexcept { return seen_unlabeled_; }
  void reset_seen() noexcept;

  bool operator==(const BayesClassifier& o) const {
    return naive_ == o.naive_ && priors_ == o.priors_ && distributions_ == o.distributions_;
  }

 private:
  std::vector<double> priors_;
  std::vector<double> log_priors_;
  std::vector<Distribution> distributions_;
  std::vector<std::size_t> offsets_;
  bool naive_;
  TrainingMode mode_ = TrainingMode::supervised;
  std::vector<double> seen_class_mass_;
  double seen_unlabeled_ = 0.0;
};

struct ClassifierFit {
  BayesClassifier model;
  FitReport report;
  bool semi_supervised = false;
  std::vector<std::string> warnings;
};

struct LabelScan {
  std::size_t dim = 0;
  std::size_t rows = 0;
  std::size_t n_classes = 0;  // max label + 1
  std::size_t unlabeled = 0;
};

// One pass over the labels of a labelled source.
LabelScan scan_labels(BatchSource<DataView>& source);

// Per-class maximum likelihood. Throws when a class receives no weight or a
// row is unlabelled.
ClassifierFit fit_supervised(const FamilySpec& family, std::size_t n_classes,
                             BatchSource<DataView>& source, const FitConfig& config);

// Initializes by maximum likelihood on the labelled rows, then runs EM in
// which labelled rows contribute one-hot statistics and unlabelled rows
// contribute posterior-weighted statistics. With no unlabelled rows the
// result is the supervised fit (plus a warning).
ClassifierFit fit_semisupervised(const FamilySpec& family, std::size_t n_classes,
                                 BatchSource<DataView>& source, const FitConfig& config);

// Supervised unless some label is -1, in which case semi-supervised.
// n_classes = 0 takes the class count from the labels.
ClassifierFit fit_classifier(const FamilySpec& family, std::size_t n_classes,
                             BatchSource<DataView>& source, const FitConfig& config);

}  // namespace sufstat
