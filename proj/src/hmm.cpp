#include "sufstat/hmm.hpp"

#include <cmath>
#include <string>

#include "sufstat/error.hpp"
#include "sufstat/kmeans.hpp"
#include "sufstat/math.hpp"

namespace sufstat {
namespace {

void check_simplex(std::span<const double> p, double extra, const std::string& what) {
  double total = extra;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) throw Error(what + " has a negative or non-finite entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-10)
    throw Error("invariant violated: " + what + " must sum to 1 (got " + std::to_string(total) + ")");
}

double blend(double old_value, double estimate, double inertia) {
  return inertia == 0.0 ? estimate : inertia * old_value + (1.0 - inertia) * estimate;
}

}  // namespace

HiddenMarkovModel::HiddenMarkovModel(std::vector<double> initial, std::vector<double> transitions,
                                     std::vector<Distribution> emissions,
                                     std::optional<std::vector<double>> ends)
    : initial_(std::move(initial)),
      transitions_(std::move(transitions)),
      ends_(std::move(ends)),
      emissions_(std::move(emissions)) {
  const std::size_t n = initial_.size();
  if (n == 0) throw Error("HiddenMarkovModel needs at least one state");
  if (transitions_.size() != n * n) throw Error("HiddenMarkovModel transitions must be n x n");
  if (emissions_.size() != n) throw Error("HiddenMarkovModel needs one emission per state");
  if (ends_ && ends_->size() != n) throw Error("HiddenMarkovModel ends must have n entries");
  check_simplex(initial_, 0.0, "HiddenMarkovModel initial probabilities");
  for (std::size_t i = 0; i < n; ++i) {
    const double end = ends_ ? (*ends_)[i] : 0.0;
    if (ends_ && (!std::isfinite(end) || end < 0.0))
      throw Error("HiddenMarkovModel end probabilities must be >= 0");
    check_simplex(std::span<const double>(transitions_).subspan(i * n, n), end,
                  "HiddenMarkovModel transition row " + std::to_string(i));
  }
  std::size_t offset = n + n * n + (ends_ ? n : 0);
  for (const auto& e : emissions_) {
    if (e.stats_kind() != emissions_.front().stats_kind() || e.dim() != emissions_.front().dim())
      throw Error("HiddenMarkovModel emissions must share family and dimension");
    offsets_.push_back(offset);
    offset += e.stats_size();
  }
  refresh();
}

HiddenMarkovModel HiddenMarkovModel::uniform(std::vector<Distribution> emissions) {
  const std::size_t n = emissions.size();
  if (n == 0) throw Error("HiddenMarkovModel needs at least one state");
  const double p = 1.0 / static_cast<double>(n);
  return HiddenMarkovModel(std::vector<double>(n, p), std::vector<double>(n * n, p),
                           std::move(emissions));
}

void HiddenMarkovModel::set_pseudocount(double pc) {
  if (!std::isfinite(pc) || pc < 0.0) throw Error("transition pseudocount must be >= 0");
  pseudocount_ = pc;
}

void HiddenMarkovModel::refresh() {
  const std::size_t n = n_states();
  log_initial_.resize(n);
  for (std::size_t i = 0; i < n; ++i) log_initial_[i] = std::log(initial_[i]);
  log_trans_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) log_trans_(i, j) = std::log(transitions_[i * n + j]);
  log_end_.assign(n, 0.0);
  if (ends_)
    for (std::size_t i = 0; i < n; ++i) log_end_[i] = std::log((*ends_)[i]);
}

void HiddenMarkovModel::check_sequence(const Sequence& seq) const {
  if (seq.length() == 0) throw Error("empty sequence");
  if (seq.dim != dim())
    throw Error("observations have " + std::to_string(seq.dim) + " values, emissions expect " +
                std::to_string(dim()));
}

Eigen::MatrixXd HiddenMarkovModel::emission_log_probabilities(const Sequence& seq) const {
  check_sequence(seq);
  const auto T = static_cast<Eigen::Index>(seq.length());
  const auto n = static_cast<Eigen::Index>(n_states());
  Eigen::MatrixXd emit(T, n);
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto x = seq.at(static_cast<std::size_t>(t));
    for (double v : x)
      if (!std::isfinite(v)) throw Error("non-finite observation at position " + std::to_string(t));
    for (Eigen::Index j = 0; j < n; ++j)
      emit(t, j) = emissions_[static_cast<std::size_t>(j)].log_probability(x);
  }
  return emit;
}

HiddenMarkovModel::ForwardResult HiddenMarkovModel::forward_from(const Eigen::MatrixXd& emit) const {
  const Eigen::Index T = emit.rows();
  const Eigen::Index n = emit.cols();
  Eigen::MatrixXd alpha(T, n);
  std::vector<double> terms(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j)
    alpha(0, j) = log_initial_[static_cast<std::size_t>(j)] + emit(0, j);
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i)
        terms[static_cast<std::size_t>(i)] = alpha(t - 1, i) + log_trans_(i, j);
      alpha(t, j) = emit(t, j) + log_sum_exp(terms);
    }
  }
  for (Eigen::Index j = 0; j < n; ++j)
    terms[static_cast<std::size_t>(j)] = alpha(T - 1, j) + log_end_[static_cast<std::size_t>(j)];
  return ForwardResult{std::move(alpha), log_sum_exp(terms)};
}

Eigen::MatrixXd HiddenMarkovModel::backward_from(const Eigen::MatrixXd& emit) const {
  const Eigen::Index T = emit.rows();
  const Eigen::Index n = emit.cols();
  Eigen::MatrixXd beta(T, n);
  std::vector<double> terms(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) beta(T - 1, j) = log_end_[static_cast<std::size_t>(j)];
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j)
        terms[static_cast<std::size_t>(j)] = log_trans_(i, j) + emit(t + 1, j) + beta(t + 1, j);
      beta(t, i) = log_sum_exp(terms);
    }
  }
  return beta;
}

HiddenMarkovModel::ForwardResult HiddenMarkovModel::forward(const Sequence& seq) const {
  return forward_from(emission_log_probabilities(seq));
}

Eigen::MatrixXd HiddenMarkovModel::backward(const Sequence& seq) const {
  return backward_from(emission_log_probabilities(seq));
}

HiddenMarkovModel::ViterbiResult HiddenMarkovModel::viterbi(const Sequence& seq) const {
  const Eigen::MatrixXd emit = emission_log_probabilities(seq);
  const Eigen::Index T = emit.rows();
  const Eigen::Index n = emit.cols();
  Eigen::MatrixXd delta(T, n);
  std::vector<std::size_t> back(static_cast<std::size_t>(T * n), 0);
  for (Eigen::Index j = 0; j < n; ++j)
    delta(0, j) = log_initial_[static_cast<std::size_t>(j)] + emit(0, j);
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::Index best = 0;
      double best_score = delta(t - 1, 0) + log_trans_(0, j);
      for (Eigen::Index i = 1; i < n; ++i) {
        const double s = delta(t - 1, i) + log_trans_(i, j);
        if (s > best_score) {
          best_score = s;
          best = i;
        }
      }
      delta(t, j) = emit(t, j) + best_score;
      back[static_cast<std::size_t>(t * n + j)] = static_cast<std::size_t>(best);
    }
  }
  std::size_t state = 0;
  double best = delta(T - 1, 0) + log_end_[0];
  for (Eigen::Index j = 1; j < n; ++j) {
    const double s = delta(T - 1, j) + log_end_[static_cast<std::size_t>(j)];
    if (s > best) {
      best = s;
      state = static_cast<std::size_t>(j);
    }
  }
  if (best == kNegInf) throw Error("zero-probability sequence: no state path can produce it");
  ViterbiResult out{std::vector<std::size_t>(static_cast<std::size_t>(T)), best};
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    out.path[static_cast<std::size_t>(t)] = state;
    if (t > 0) state = back[static_cast<std::size_t>(t * n) + state];
  }
  return out;
}

Eigen::MatrixXd HiddenMarkovModel::predict_proba(const Sequence& seq) const {
  const Eigen::MatrixXd emit = emission_log_probabilities(seq);
  const auto fwd = forward_from(emit);
  if (fwd.log_likelihood == kNegInf) throw Error("zero-probability sequence");
  const Eigen::MatrixXd beta = backward_from(emit);
  return (fwd.log_alpha + beta).array().operator-(fwd.log_likelihood).exp().matrix();
}

SufficientStats HiddenMarkovModel::zero_stats() const {
  return SufficientStats("HiddenMarkovModel/" + std::to_string(n_states()) +
                             (ends_ ? "/ends/" : "/") + emissions_.front().stats_kind(),
                         offsets_.back() + emissions_.back().stats_size());
}

void HiddenMarkovModel::summarize(const SequenceView& batch, SufficientStats& into) const {
  if (into.is_identity()) into = zero_stats();
  if (into.kind() != zero_stats().kind()) throw Error("HMM statistics kind mismatch");
  validate_sequences(batch);
  const std::size_t n = n_states();
  auto acc = into.values();
  double* init = acc.data();
  double* trans = init + n;
  double* end = trans + n * n;

  for (std::size_t s = 0; s < batch.size(); ++s) {
    const double w = batch.weight(s);
    const Sequence& seq = batch.sequence(s);
    const Eigen::MatrixXd emit = emission_log_probabilities(seq);
    const auto fwd = forward_from(emit);
    if (fwd.log_likelihood == kNegInf)
      throw Error("sequence " + std::to_string(batch.offset() + s) +
                  ": zero-probability sequence under the current model");
    into.add_total_weight(w);
    if (w <= 0.0) continue;
    into.add_log_likelihood(w * fwd.log_likelihood);
    const Eigen::MatrixXd beta = backward_from(emit);
    const double ll = fwd.log_likelihood;
    const std::size_t T = seq.length();
    for (std::size_t t = 0; t < T; ++t) {
      const auto ti = static_cast<Eigen::Index>(t);
      for (std::size_t j = 0; j < n; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double gamma = w * std::exp(fwd.log_alpha(ti, jj) + beta(ti, jj) - ll);
        if (t == 0) init[j] += gamma;
        if (t + 1 == T && ends_) end[j] += gamma;
        if (gamma > 0.0)
          emissions_[j].accumulate(seq.at(t), gamma, acc.subspan(offsets_[j], emissions_[j].stats_size()));
      }
      if (t + 1 == T) continue;
      for (std::size_t i = 0; i < n; ++i) {
        const double a = fwd.log_alpha(ti, static_cast<Eigen::Index>(i)) - ll;
        if (a == kNegInf) continue;
        for (std::size_t j = 0; j < n; ++j) {
          const auto jj = static_cast<Eigen::Index>(j);
          trans[i * n + j] += w * std::exp(a + log_trans_(static_cast<Eigen::Index>(i), jj) +
                                           emit(ti + 1, jj) + beta(ti + 1, jj));
        }
      }
    }
  }
}

void HiddenMarkovModel::from_summaries(const SufficientStats& stats, double inertia) {
  if (stats.is_identity()) return;
  if (stats.kind() != zero_stats().kind() || stats.size() != zero_stats().size())
    throw Error("cannot update HMM from statistics of kind " + stats.kind());
  const std::size_t n = n_states();
  auto acc = stats.values();
  const double* init = acc.data();
  const double* trans = init + n;
  const double* end = trans + n * n;

  double init_total = 0.0;
  for (std::size_t j = 0; j < n; ++j) init_total += init[j];
  if (init_total > 0.0)
    for (std::size_t j = 0; j < n; ++j)
      initial_[j] = blend(initial_[j], init[j] / init_total, inertia);

  for (std::size_t i = 0; i < n; ++i) {
    double mass = ends_ ? end[i] : 0.0;
    for (std::size_t j = 0; j < n; ++j) mass += trans[i * n + j];
    if (!(mass > 0.0)) continue;
    const double cells = static_cast<double>(n + (ends_ ? 1 : 0));
    const double denom = mass + cells * pseudocount_;
    for (std::size_t j = 0; j < n; ++j)
      transitions_[i * n + j] =
          blend(transitions_[i * n + j], (trans[i * n + j] + pseudocount_) / denom, inertia);
    if (ends_) (*ends_)[i] = blend((*ends_)[i], (end[i] + pseudocount_) / denom, inertia);
  }

  for (std::size_t j = 0; j < n; ++j)
    emissions_[j].from_summaries(acc.subspan(offsets_[j], emissions_[j].stats_size()), inertia);
  refresh();
}

HmmFit hmm_from_samples(const FamilySpec& family, std::size_t n_states,
                        BatchSource<SequenceView>& source, const FitConfig& config) {
  config.validate();
  if (n_states == 0) throw Error("an HMM needs at least one state");
  FamilySpec emission_family = family;
  if (family.family == Family::categorical)
    emission_family.pseudocount = std::max(family.pseudocount, kTransitionPseudocount);

  // Pool the leading observations; the cap does not depend on batching.
  source.rewind();
  DataBatch pooled;
  std::size_t limit = 0;
  bool first = true;
  while (auto b = source.next()) {
    const auto& v = b->view;
    validate_sequences(v);
    for (std::size_t s = 0; s < v.size() && (first || pooled.size() < limit); ++s) {
      const Sequence& seq = v.sequence(s);
      if (first) {
        pooled = DataBatch(seq.dim);
        limit = std::max<std::size_t>(50 * n_states * seq.dim, kHmmInitObservations);
        first = false;
      }
      if (seq.dim != pooled.dim) throw Error("sequences disagree on observation width");
      for (std::size_t t = 0; t < seq.length() && pooled.size() < limit; ++t)
        pooled.add_row(seq.at(t), v.weight(s));
    }
    if (pooled.size() >= limit) break;
  }
  if (first) throw Error("fit: the data source yielded no sequences");

  FitConfig kmeans_config = config;
  kmeans_config.max_iterations = config.kmeans_max_iterations;
  const KMeansFit clusters = lloyd_fit(pooled.view(), n_states, kmeans_config);

  const Distribution prototype = blank_distribution(emission_family, pooled.dim);
  std::vector<SufficientStats> cluster_stats(n_states, prototype.zero_stats());
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    const std::size_t j = clusters.model.assign(pooled.row(i));
    prototype.accumulate(pooled.row(i), pooled.weights[i], cluster_stats[j].values());
    cluster_stats[j].add_total_weight(pooled.weights[i]);
  }
  std::vector<Distribution> emissions;
  for (std::size_t j = 0; j < n_states; ++j) {
    Distribution e = prototype;
    e.recenter(clusters.model.centroid(j));
    e.from_summaries(cluster_stats[j], 0.0);
    emissions.push_back(std::move(e));
  }
  HmmFit out{HiddenMarkovModel::uniform(std::move(emissions)), {}};
  out.report = fit(out.model, source, config);
  return out;
}

}  // namespace sufstat
