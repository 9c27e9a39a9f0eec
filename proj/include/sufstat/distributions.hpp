#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sufstat/data.hpp"
#include "sufstat/math.hpp"
#include "sufstat/stats.hpp"

namespace sufstat {

inline constexpr double kVarianceFloor = 1e-9;
inline constexpr double kCovarianceRidge = 1e-6;

// Each distribution family below exposes the same member set, which the
// type-erased Distribution forwards to:
//
//   dim(), stats_size()
//   log_probability(x)                 x has dim() entries
//   accumulate(x, w, acc)              adds row x with weight w into acc
//   from_summaries(acc, inertia)       acc has stats_size() entries
//   sample(rng)
//   recenter(x)                        move the location onto x
//
// Parameter updates blend as new = inertia * old + (1 - inertia) * mle.
// A zero-weight accumulator leaves parameters unchanged.

// Stats layout: [sum w, sum w x, sum w x^2].
class UnivariateGaussian {
 public:
  static constexpr std::string_view type_name = "UnivariateGaussian";

  explicit UnivariateGaussian(double mu = 0.0, double sigma2 = 1.0);

  double mu() const noexcept { return mu_; }
  double sigma2() const noexcept { return sigma2_; }

  std::size_t dim() const noexcept { return 1; }
  std::size_t stats_size() const noexcept { return 3; }
  double log_probability(std::span<const double> x) const;
  void accumulate(std::span<const double> x, double w, std::span<double> acc) const {
    const double v = x[0];
    acc[0] += w;
    acc[1] += w * v;
    acc[2] += w * v * v;
  }
  void from_summaries(std::span<const double> acc, double inertia);
  std::vector<double> sample(Rng& rng) const;
  void recenter(std::span<const double> x) { set(x[0], sigma2_); }

  bool operator==(const UnivariateGaussian& o) const {
    return mu_ == o.mu_ && sigma2_ == o.sigma2_;
  }

 private:
  void set(double mu, double sigma2);

  double mu_ = 0.0;
  double sigma2_ = 1.0;
  double log_norm_ = 0.0;  // -0.5 log(2 pi sigma2)
  double half_precision_ = 0.5;
};

enum class CovarianceMode { full, diagonal };

// Stats layout: [sum w, sum w x (d), second moments]. Full mode keeps the
// upper triangle of sum w x x^T in a d*d block; diagonal mode keeps
// sum w x_i^2 (d).
class MultivariateGaussian {
 public:
  static constexpr std::string_view type_name = "MultivariateGaussian";

  // `covariance` is d*d row-major in full mode and the d variances in
  // diagonal mode.
  MultivariateGaussian(std::vector<double> mean, std::vector<double> covariance,
                       CovarianceMode mode = CovarianceMode::full);
  static MultivariateGaussian standard(std::size_t dim, CovarianceMode mode);

  const std::vector<double>& mean() const noexcept { return mean_; }
  const std::vector<double>& covariance() const noexcept { return cov_; }
  CovarianceMode mode() const noexcept { return mode_; }
  bool diagonal() const noexcept { return mode_ == CovarianceMode::diagonal; }

  std::size_t dim() const noexcept { return mean_.size(); }
  std::size_t stats_size() const noexcept {
    return 1 + dim() + (diagonal() ? dim() : dim() * dim());
  }
  double log_probability(std::span<const double> x) const;
  void accumulate(std::span<const double> x, double w, std::span<double> acc) const;
  void from_summaries(std::span<const double> acc, double inertia);
  std::vector<double> sample(Rng& rng) const;
  void recenter(std::span<const double> x);

  bool operator==(const MultivariateGaussian& o) const {
    return mode_ == o.mode_ && mean_ == o.mean_ && cov_ == o.cov_;
  }

 private:
  // Validates the covariance and refreshes the cached factorization.
  void refresh();

  std::vector<double> mean_;
  std::vector<double> cov_;
  CovarianceMode mode_;
  Eigen::MatrixXd chol_;  // lower Cholesky factor (full mode)
  double log_norm_ = 0.0;  // -0.5 (d log 2pi + log det)
};

// Stats layout: per-category weight sums (k).
class Categorical {
 public:
  static constexpr std::string_view type_name = "Categorical";

  explicit Categorical(std::vector<double> probs, double pseudocount = 0.0);
  static Categorical uniform(std::size_t k, double pseudocount = 0.0);

  const std::vector<double>& probs() const noexcept { return probs_; }
  std::size_t categories() const noexcept { return probs_.size(); }
  double pseudocount() const noexcept { return pseudocount_; }
  void set_pseudocount(double pc);

  std::size_t dim() const noexcept { return 1; }
  std::size_t stats_size() const noexcept { return probs_.size(); }
  // Category index checked against [0, k); throws on anything else.
  std::size_t category_of(double x) const;
  double log_probability(std::span<const double> x) const { return log_probs_[category_of(x[0])]; }
  void accumulate(std::span<const double> x, double w, std::span<double> acc) const {
    acc[category_of(x[0])] += w;
  }
  void from_summaries(std::span<const double> acc, double inertia);
  std::vector<double> sample(Rng& rng) const;
  void recenter(std::span<const double>) {}

  bool operator==(const Categorical& o) const {
    return probs_ == o.probs_ && pseudocount_ == o.pseudocount_;
  }

 private:
  void refresh();

  std::vector<double> probs_;
  std::vector<double> log_probs_;
  double pseudocount_ = 0.0;
};

// Stats layout: [sum w, sum w x].
class Exponential {
 public:
  static constexpr std::string_view type_name = "Exponential";

  explicit Exponential(double rate = 1.0);
  double rate() const noexcept { return rate_; }

  std::size_t dim() const noexcept { return 1; }
  std::size_t stats_size() const noexcept { return 2; }
  double log_probability(std::span<const double> x) const {
    return x[0] < 0.0 ? kNegInf : log_rate_ - rate_ * x[0];
  }
  void accumulate(std::span<const double> x, double w, std::span<double> acc) const {
    acc[0] += w;
    acc[1] += w * x[0];
  }
  void from_summaries(std::span<const double> acc, double inertia);
  std::vector<double> sample(Rng& rng) const;
  void recenter(std::span<const double> x);

  bool operator==(const Exponential& o) const { return rate_ == o.rate_; }

 private:
  double rate_ = 1.0;
  double log_rate_ = 0.0;
};

// Stats layout: [sum w, sum w x].
class Poisson {
 public:
  static constexpr std::string_view type_name = "Poisson";

  explicit Poisson(double lambda = 1.0);
  double lambda() const noexcept { return lambda_; }

  std::size_t dim() const noexcept { return 1; }
  std::size_t stats_size() const noexcept { return 2; }
  // Non-integer or negative counts have probability zero.
  double log_probability(std::span<const double> x) const;
  void accumulate(std::span<const double> x, double w, std::span<double> acc) const {
    acc[0] += w;
    acc[1] += w * x[0];
  }
  void from_summaries(std::span<const double> acc, double inertia);
  std::vector<double> sample(Rng& rng) const;
  void recenter(std::span<const double> x);

  bool operator==(const Poisson& o) const { return lambda_ == o.lambda_; }

 private:
  double lambda_ = 1.0;
  double log_lambda_ = 0.0;
};

class Distribution;

// Product of independent parts over consecutive slices of the row. Naive
// Bayes class-conditionals are products of univariate parts. Stats layout:
// the parts' layouts concatenated.
class IndependentComponents {
 public:
  static constexpr std::string_view type_name = "IndependentComponents";

  explicit IndependentComponents(std::vector<Distribution> parts);

  const std::vector<Distribution>& parts() const noexcept { return parts_; }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t stats_size() const noexcept { return stats_size_; }
  double log_probability(std::span<const double> x) const;
  void accumulate(std::span<const double> x, double w, std::span<double> acc) const;
  void from_summaries(std::span<const double> acc, double inertia);
  std::vector<double> sample(Rng& rng) const;
  void recenter(std::span<const double> x);

  bool operator==(const IndependentComponents& o) const;

 private:
  std::vector<Distribution> parts_;
  std::vector<std::size_t> dim_offsets_;
  std::vector<std::size_t> stats_offsets_;
  std::size_t dim_ = 0;
  std::size_t stats_size_ = 0;
};

// Value-semantic handle over any distribution family. Also satisfies the
// engine's Trainable protocol over row batches.
class Distribution {
 public:
  using Impl = std::variant<UnivariateGaussian, MultivariateGaussian, Categorical, Exponential,
                            Poisson, IndependentComponents>;
  using view_type = DataView;

  template <class D>
    requires std::constructible_from<Impl, D>
  Distribution(D d) : impl_(std::move(d)) {}

  std::string_view type_name() const;
  std::size_t dim() const;
  std::size_t stats_size() const;

  double log_probability(std::span<const double> x) const;
  void accumulate(std::span<const double> x, double w, std::span<double> acc) const;
  void from_summaries(std::span<const double> acc, double inertia);
  std::vector<double> sample(Rng& rng) const;
  void recenter(std::span<const double> x);

  // Kind tag used for statistics of this distribution ("<type>/<size>").
  std::string stats_kind() const;
  SufficientStats zero_stats() const;
  void summarize(const DataView& batch, SufficientStats& into) const;
  SufficientStats summarize(const DataView& batch) const;
  void from_summaries(const SufficientStats& stats, double inertia);
  bool is_iterative() const noexcept { return false; }

  const Impl& impl() const noexcept { return impl_; }
  template <class D>
  const D* get_if() const noexcept {
    return std::get_if<D>(&impl_);
  }

  bool operator==(const Distribution&) const = default;

 private:
  Impl impl_;
};

// Families a model can be built from. Univariate families over d > 1
// features become a product of d independent copies.
enum class Family { gaussian, multivariate_gaussian, diagonal_gaussian, categorical, exponential, poisson };

struct FamilySpec {
  Family family = Family::gaussian;
  std::size_t categories = 2;  // categorical only
  double pseudocount = 0.0;    // categorical only
};

bool is_univariate(Family f);
std::string_view family_name(Family f);
Family parse_family(std::string_view name);

// Default-parameter distribution of the family over `dim` features:
// N(0,1), N(0,I), uniform categorical, Exp(1), Poisson(1).
Distribution blank_distribution(const FamilySpec& spec, std::size_t dim);

// Maximum-likelihood fit of `prototype`'s family to the batch.
Distribution fit_distribution(const Distribution& prototype, const DataView& batch);

}  // namespace sufstat
