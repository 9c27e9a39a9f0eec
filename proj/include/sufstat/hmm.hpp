#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <optional>
#include <vector>

#include "sufstat/data.hpp"
#include "sufstat/distributions.hpp"
#include "sufstat/engine.hpp"

namespace sufstat {

inline constexpr double kTransitionPseudocount = 1e-8;
// Minimum number of pooled observations k-means sees when initializing.
inline constexpr std::size_t kHmmInitObservations = 10000;

// Dense hidden Markov model with one emission distribution per state and an
// optional explicit end probability per state. Parameters are stored as
// probabilities; all recursions run on cached logs.
//
// Stats layout: [initial mass (n)] [transition mass (n*n, row-major)]
//               [end mass (n), only with ends] [emission stats per state].
class HiddenMarkovModel {
 public:
  using view_type = SequenceView;

  struct ForwardResult {
    Eigen::MatrixXd log_alpha;  // T x n
    double log_likelihood;
  };
  struct ViterbiResult {
    std::vector<std::size_t> path;
    double log_joint;
  };

  // `transitions` is n*n row-major. With `ends`, row i of the transitions
  // plus ends[i] sums to 1; otherwise each transition row sums to 1.
  HiddenMarkovModel(std::vector<double> initial, std::vector<double> transitions,
                    std::vector<Distribution> emissions,
                    std::optional<std::vector<double>> ends = std::nullopt);

  // Uniform start and transition probabilities.
  static HiddenMarkovModel uniform(std::vector<Distribution> emissions);

  std::size_t n_states() const noexcept { return initial_.size(); }
  std::size_t dim() const noexcept { return emissions_.front().dim(); }
  const std::vector<double>& initial() const noexcept { return initial_; }
  const std::vector<double>& transitions() const noexcept { return transitions_; }
  double transition(std::size_t from, std::size_t to) const {
    return transitions_[from * n_states() + to];
  }
  const std::optional<std::vector<double>>& ends() const noexcept { return ends_; }
  const std::vector<Distribution>& emissions() const noexcept { return emissions_; }
  double pseudocount() const noexcept { return pseudocount_; }
  void set_pseudocount(double pc);

  // Per-position, per-state emission log-probabilities (T x n).
  Eigen::MatrixXd emission_log_probabilities(const Sequence& seq) const;

  ForwardResult forward(const Sequence& seq) const;
  Eigen::MatrixXd backward(const Sequence& seq) const;
  ViterbiResult viterbi(const Sequence& seq) const;
  // Posterior state marginals (T x n); rows sum to 1.
  Eigen::MatrixXd predict_proba(const Sequence& seq) const;
  double log_probability(const Sequence& seq) const { return forward(seq).log_likelihood; }

  SufficientStats zero_stats() const;
  void summarize(const SequenceView& batch, SufficientStats& into) const;
  void from_summaries(const SufficientStats& stats, double inertia);
  bool is_iterative() const noexcept { return true; }

  bool operator==(const HiddenMarkovModel& o) const {
    return initial_ == o.initial_ && transitions_ == o.transitions_ && ends_ == o.ends_ &&
           emissions_ == o.emissions_;
  }

 private:
  void check_sequence(const Sequence& seq) const;
  Eigen::MatrixXd backward_from(const Eigen::MatrixXd& emit) const;
  ForwardResult forward_from(const Eigen::MatrixXd& emit) const;
  void refresh();

  std::vector<double> initial_;
  std::vector<double> transitions_;
  std::optional<std::vector<double>> ends_;
  std::vector<Distribution> emissions_;
  std::vector<std::size_t> offsets_;
  double pseudocount_ = kTransitionPseudocount;

  std::vector<double> log_initial_;
  Eigen::MatrixXd log_trans_;  // n x n
  std::vector<double> log_end_;  // zeros without ends
};

struct HmmFit {
  HiddenMarkovModel model;
  FitReport report;
};

// Emissions initialized by k-means++/Lloyd over the first
// max(50*n*d, kHmmInitObservations) pooled observations (one cluster per
// state, maximum likelihood per cluster); uniform start and transitions;
// then Baum-Welch.
HmmFit hmm_from_samples(const FamilySpec& family, std::size_t n_states,
                        BatchSource<SequenceView>& source, const FitConfig& config);

}  // namespace sufstat
