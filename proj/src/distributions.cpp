#include "sufstat/distributions.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sufstat/error.hpp"

namespace sufstat {
namespace {

double blend(double old_value, double estimate, double inertia) {
  return inertia == 0.0 ? estimate : inertia * old_value + (1.0 - inertia) * estimate;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(std::string(what) + " must be finite");
}

}  // namespace

// ---------------------------------------------------------------------------
// UnivariateGaussian

UnivariateGaussian::UnivariateGaussian(double mu, double sigma2) { set(mu, sigma2); }

void UnivariateGaussian::set(double mu, double sigma2) {
  require_finite(mu, "UnivariateGaussian mean");
  require_finite(sigma2, "UnivariateGaussian variance");
  if (sigma2 < kVarianceFloor) throw Error("UnivariateGaussian variance below the 1e-9 floor");
  mu_ = mu;
  sigma2_ = sigma2;
  log_norm_ = -0.5 * (kLogTwoPi + std::log(sigma2));
  half_precision_ = 0.5 / sigma2;
}

double UnivariateGaussian::log_probability(std::span<const double> x) const {
  const double d = x[0] - mu_;
  return log_norm_ - d * d * half_precision_;
}

void UnivariateGaussian::from_summaries(std::span<const double> acc, double inertia) {
  const double w = acc[0];
  if (!(w > 0.0)) return;
  const double mu = acc[1] / w;
  const double var = std::max(acc[2] / w - mu * mu, kVarianceFloor);
  set(blend(mu_, mu, inertia), blend(sigma2_, var, inertia));
}

std::vector<double> UnivariateGaussian::sample(Rng& rng) const {
  std::normal_distribution<double> normal(mu_, std::sqrt(sigma2_));
  return {normal(rng)};
}

// ---------------------------------------------------------------------------
// MultivariateGaussian

MultivariateGaussian::MultivariateGaussian(std::vector<double> mean, std::vector<double> covariance,
                                           CovarianceMode mode)
    : mean_(std::move(mean)), cov_(std::move(covariance)), mode_(mode) {
  const std::size_t d = mean_.size();
  if (d == 0) throw Error("MultivariateGaussian needs at least one dimension");
  const std::size_t expected = diagonal() ? d : d * d;
  if (cov_.size() != expected)
    throw Error("MultivariateGaussian covariance has " + std::to_string(cov_.size()) +
                " entries, expected " + std::to_string(expected));
  for (double m : mean_) require_finite(m, "MultivariateGaussian mean");
  refresh();
}

MultivariateGaussian MultivariateGaussian::standard(std::size_t dim, CovarianceMode mode) {
  std::vector<double> cov;
  if (mode == CovarianceMode::diagonal) {
    cov.assign(dim, 1.0);
  } else {
    cov.assign(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) cov[i * dim + i] = 1.0;
  }
  return MultivariateGaussian(std::vector<double>(dim, 0.0), std::move(cov), mode);
}

void MultivariateGaussian::refresh() {
  const std::size_t d = dim();
  for (double c : cov_) require_finite(c, "MultivariateGaussian covariance");
  if (diagonal()) {
    double log_det = 0.0;
    for (double v : cov_) {
      if (v < kVarianceFloor) throw Error("MultivariateGaussian variance below the 1e-9 floor");
      log_det += std::log(v);
    }
    log_norm_ = -0.5 * (static_cast<double>(d) * kLogTwoPi + log_det);
    return;
  }
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> c(
      cov_.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (cov_[i * d + j] != cov_[j * d + i])
        throw Error("MultivariateGaussian covariance is not symmetric");
  Eigen::MatrixXd dense = c;
  Eigen::LLT<Eigen::MatrixXd> llt(dense);
  if (llt.info() != Eigen::Success)
    throw Error("MultivariateGaussian covariance is not positive definite");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < kVarianceFloor)
    throw Error("MultivariateGaussian covariance has an eigenvalue below the 1e-9 floor");
  chol_ = llt.matrixL();
  double log_det = 0.0;
  for (std::size_t i = 0; i < d; ++i) log_det += 2.0 * std::log(chol_(i, i));
  log_norm_ = -0.5 * (static_cast<double>(d) * kLogTwoPi + log_det);
}

double MultivariateGaussian::log_probability(std::span<const double> x) const {
  const std::size_t d = dim();
  double quad = 0.0;
  if (diagonal()) {
    for (std::size_t i = 0; i < d; ++i) {
      const double z = x[i] - mean_[i];
      quad += z * z / cov_[i];
    }
    return log_norm_ - 0.5 * quad;
  }
  // Forward substitution L z = x - mean; the quadratic form is |z|^2.
  thread_local std::vector<double> z;
  z.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    double v = x[i] - mean_[i];
    for (std::size_t j = 0; j < i; ++j) v -= chol_(i, j) * z[j];
    z[i] = v / chol_(i, i);
    quad += z[i] * z[i];
  }
  return log_norm_ - 0.5 * quad;
}

void MultivariateGaussian::accumulate(std::span<const double> x, double w,
                                      std::span<double> acc) const {
  const std::size_t d = dim();
  acc[0] += w;
  double* first = acc.data() + 1;
  double* second = first + d;
  for (std::size_t i = 0; i < d; ++i) {
    const double wx = w * x[i];
    first[i] += wx;
    if (diagonal()) {
      second[i] += wx * x[i];
    } else {
      double* row = second + i * d;
      for (std::size_t j = i; j < d; ++j) row[j] += wx * x[j];
    }
  }
}

void MultivariateGaussian::from_summaries(std::span<const double> acc, double inertia) {
  const double w = acc[0];
  if (!(w > 0.0)) return;
  const std::size_t d = dim();
  const double* first = acc.data() + 1;
  const double* second = first + d;
  std::vector<double> mu(d);
  for (std::size_t i = 0; i < d; ++i) mu[i] = first[i] / w;

  std::vector<double> cov(cov_.size());
  if (diagonal()) {
    for (std::size_t i = 0; i < d; ++i)
      cov[i] = blend(cov_[i], std::max(second[i] / w - mu[i] * mu[i], kVarianceFloor), inertia);
  } else {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) {
        const double c = blend(cov_[i * d + j], second[i * d + j] / w - mu[i] * mu[j], inertia);
        cov[i * d + j] = c;
        cov[j * d + i] = c;
      }
    }
  }
  for (std::size_t i = 0; i < d; ++i) mu[i] = blend(mean_[i], mu[i], inertia);

  const std::vector<double> old_mean = mean_;
  const std::vector<double> old_cov = cov_;
  mean_ = std::move(mu);
  cov_ = std::move(cov);
  if (diagonal()) {
    refresh();
    return;
  }
  try {
    refresh();
  } catch (const Error&) {
    for (std::size_t i = 0; i < d; ++i) cov_[i * d + i] += kCovarianceRidge;
    try {
      refresh();
    } catch (const Error& e) {
      mean_ = old_mean;
      cov_ = old_cov;
      refresh();
      throw Error(std::string("covariance update failed after regularization: ") + e.what());
    }
  }
}

std::vector<double> MultivariateGaussian::sample(Rng& rng) const {
  const std::size_t d = dim();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(d);
  for (auto& v : z) v = normal(rng);
  std::vector<double> x(mean_);
  for (std::size_t i = 0; i < d; ++i) {
    if (diagonal()) {
      x[i] += std::sqrt(cov_[i]) * z[i];
    } else {
      for (std::size_t j = 0; j <= i; ++j) x[i] += chol_(i, j) * z[j];
    }
  }
  return x;
}

void MultivariateGaussian::recenter(std::span<const double> x) {
  mean_.assign(x.begin(), x.end());
}

// ---------------------------------------------------------------------------
// Categorical

Categorical::Categorical(std::vector<double> probs, double pseudocount)
    : probs_(std::move(probs)), pseudocount_(pseudocount) {
  if (probs_.empty()) throw Error("Categorical needs at least one category");
  double total = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) throw Error("Categorical probabilities must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw Error("invariant violated: Categorical probabilities must sum to 1 (got " + std::to_string(total) + ")");
  set_pseudocount(pseudocount);
  refresh();
}

Categorical Categorical::uniform(std::size_t k, double pseudocount) {
  if (k == 0) throw Error("Categorical needs at least one category");
  return Categorical(std::vector<double>(k, 1.0 / static_cast<double>(k)), pseudocount);
}

void Categorical::set_pseudocount(double pc) {
  if (!std::isfinite(pc) || pc < 0.0) throw Error("Categorical pseudocount must be >= 0");
  pseudocount_ = pc;
}

void Categorical::refresh() {
  log_probs_.resize(probs_.size());
  for (std::size_t i = 0; i < probs_.size(); ++i) log_probs_[i] = std::log(probs_[i]);
}

std::size_t Categorical::category_of(double x) const {
  if (!(x >= 0.0) || x != std::floor(x) || x >= static_cast<double>(probs_.size()))
    throw Error("category " + std::to_string(x) + " outside [0, " +
                std::to_string(probs_.size()) + ")");
  return static_cast<std::size_t>(x);
}

void Categorical::from_summaries(std::span<const double> acc, double inertia) {
  const std::size_t k = probs_.size();
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += acc[i];
  if (!(total > 0.0)) return;
  const double denom = total + static_cast<double>(k) * pseudocount_;
  for (std::size_t i = 0; i < k; ++i)
    probs_[i] = blend(probs_[i], (acc[i] + pseudocount_) / denom, inertia);
  refresh();
}

std::vector<double> Categorical::sample(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (probs_[i] <= 0.0) continue;
    last_positive = i;
    cumulative += probs_[i];
    if (u < cumulative) return {static_cast<double>(i)};
  }
  return {static_cast<double>(last_positive)};
}

// ---------------------------------------------------------------------------
// Exponential

Exponential::Exponential(double rate) : rate_(rate) {
  if (!std::isfinite(rate) || rate <= 0.0) throw Error("Exponential rate must be > 0 and finite");
  log_rate_ = std::log(rate);
}

void Exponential::from_summaries(std::span<const double> acc, double inertia) {
  const double w = acc[0];
  if (!(w > 0.0)) return;
  const double wx = acc[1];
  const double estimate = wx > kVarianceFloor * w ? w / wx : 1.0 / kVarianceFloor;
  *this = Exponential(blend(rate_, estimate, inertia));
}

std::vector<double> Exponential::sample(Rng& rng) const {
  std::exponential_distribution<double> exp(rate_);
  return {exp(rng)};
}

void Exponential::recenter(std::span<const double> x) {
  *this = Exponential(1.0 / std::max(x[0], kVarianceFloor));
}

// ---------------------------------------------------------------------------
// Poisson

Poisson::Poisson(double lambda) : lambda_(lambda) {
  if (!std::isfinite(lambda) || lambda <= 0.0) throw Error("Poisson lambda must be > 0 and finite");
  log_lambda_ = std::log(lambda);
}

double Poisson::log_probability(std::span<const double> x) const {
  const double k = x[0];
  if (!(k >= 0.0) || k != std::floor(k)) return kNegInf;
  return k * log_lambda_ - lambda_ - std::lgamma(k + 1.0);
}

void Poisson::from_summaries(std::span<const double> acc, double inertia) {
  const double w = acc[0];
  if (!(w > 0.0)) return;
  *this = Poisson(blend(lambda_, std::max(acc[1] / w, kVarianceFloor), inertia));
}

std::vector<double> Poisson::sample(Rng& rng) const {
  std::poisson_distribution<long long> poisson(lambda_);
  return {static_cast<double>(poisson(rng))};
}

void Poisson::recenter(std::span<const double> x) {
  *this = Poisson(std::max(x[0], kVarianceFloor));
}

// ---------------------------------------------------------------------------
// IndependentComponents

IndependentComponents::IndependentComponents(std::vector<Distribution> parts)
    : parts_(std::move(parts)) {
  if (parts_.empty()) throw Error("IndependentComponents needs at least one part");
  for (const auto& p : parts_) {
    dim_offsets_.push_back(dim_);
    stats_offsets_.push_back(stats_size_);
    dim_ += p.dim();
    stats_size_ += p.stats_size();
  }
}

double IndependentComponents::log_probability(std::span<const double> x) const {
  double total = 0.0;
  for (std::size_t i = 0; i < parts_.size(); ++i)
    total += parts_[i].log_probability(x.subspan(dim_offsets_[i], parts_[i].dim()));
  return total;
}

void IndependentComponents::accumulate(std::span<const double> x, double w,
                                       std::span<double> acc) const {
  for (std::size_t i = 0; i < parts_.size(); ++i)
    parts_[i].accumulate(x.subspan(dim_offsets_[i], parts_[i].dim()), w,
                         acc.subspan(stats_offsets_[i], parts_[i].stats_size()));
}

void IndependentComponents::from_summaries(std::span<const double> acc, double inertia) {
  for (std::size_t i = 0; i < parts_.size(); ++i)
    parts_[i].from_summaries(acc.subspan(stats_offsets_[i], parts_[i].stats_size()), inertia);
}

std::vector<double> IndependentComponents::sample(Rng& rng) const {
  std::vector<double> x;
  x.reserve(dim_);
  for (const auto& p : parts_) {
    auto part = p.sample(rng);
    x.insert(x.end(), part.begin(), part.end());
  }
  return x;
}

void IndependentComponents::recenter(std::span<const double> x) {
  for (std::size_t i = 0; i < parts_.size(); ++i)
    parts_[i].recenter(x.subspan(dim_offsets_[i], parts_[i].dim()));
}

bool IndependentComponents::operator==(const IndependentComponents& o) const {
  return parts_ == o.parts_;
}

// ---------------------------------------------------------------------------
// Distribution

std::string_view Distribution::type_name() const {
  return std::visit([](const auto& d) { return std::decay_t<decltype(d)>::type_name; }, impl_);
}

std::size_t Distribution::dim() const {
  return std::visit([](const auto& d) { return d.dim(); }, impl_);
}

std::size_t Distribution::stats_size() const {
  return std::visit([](const auto& d) { return d.stats_size(); }, impl_);
}

double Distribution::log_probability(std::span<const double> x) const {
  return std::visit([&](const auto& d) { return d.log_probability(x); }, impl_);
}

void Distribution::accumulate(std::span<const double> x, double w, std::span<double> acc) const {
  std::visit([&](const auto& d) { d.accumulate(x, w, acc); }, impl_);
}

void Distribution::from_summaries(std::span<const double> acc, double inertia) {
  std::visit([&](auto& d) { d.from_summaries(acc, inertia); }, impl_);
}

std::vector<double> Distribution::sample(Rng& rng) const {
  return std::visit([&](const auto& d) { return d.sample(rng); }, impl_);
}

void Distribution::recenter(std::span<const double> x) {
  std::visit([&](auto& d) { d.recenter(x); }, impl_);
}

std::string Distribution::stats_kind() const {
  return std::string(type_name()) + "/" + std::to_string(stats_size());
}

SufficientStats Distribution::zero_stats() const { return SufficientStats(stats_kind(), stats_size()); }

void Distribution::summarize(const DataView& batch, SufficientStats& into) const {
  if (into.is_identity()) into = zero_stats();
  if (into.kind() != stats_kind() || into.size() != stats_size())
    throw Error("cannot summarize " + stats_kind() + " data into statistics of kind " +
                into.kind());
  if (batch.dim() != dim())
    throw Error("data has " + std::to_string(batch.dim()) + " columns, " +
                std::string(type_name()) + " expects " + std::to_string(dim()));
  validate_rows(batch);
  auto acc = into.values();
  std::visit(
      [&](const auto& d) {
        for (std::size_t i = 0; i < batch.size(); ++i) {
          const double w = batch.weight(i);
          d.accumulate(batch.row(i), w, acc);
          into.add_total_weight(w);
          if (w > 0.0) into.add_log_likelihood(w * d.log_probability(batch.row(i)));
        }
      },
      impl_);
}

SufficientStats Distribution::summarize(const DataView& batch) const {
  SufficientStats stats = zero_stats();
  summarize(batch, stats);
  return stats;
}

void Distribution::from_summaries(const SufficientStats& stats, double inertia) {
  if (stats.is_identity()) return;
  if (stats.kind() != stats_kind() || stats.size() != stats_size())
    throw Error("cannot update " + stats_kind() + " from statistics of kind " + stats.kind());
  if (!(stats.total_weight() > 0.0)) return;
  from_summaries(stats.values(), inertia);
}

// ---------------------------------------------------------------------------

bool is_univariate(Family f) {
  return f != Family::multivariate_gaussian && f != Family::diagonal_gaussian;
}

std::string_view family_name(Family f) {
  switch (f) {
    case Family::gaussian: return "gaussian";
    case Family::multivariate_gaussian: return "mvn";
    case Family::diagonal_gaussian: return "mvn-diag";
    case Family::categorical: return "categorical";
    case Family::exponential: return "exponential";
    case Family::poisson: return "poisson";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::gaussian, Family::multivariate_gaussian, Family::diagonal_gaussian,
                   Family::categorical, Family::exponential, Family::poisson})
    if (family_name(f) == name) return f;
  throw Error("unknown distribution family '" + std::string(name) + "'");
}

Distribution blank_distribution(const FamilySpec& spec, std::size_t dim) {
  if (dim == 0) throw Error("a distribution needs at least one dimension");
  switch (spec.family) {
    case Family::multivariate_gaussian:
      return MultivariateGaussian::standard(dim, CovarianceMode::full);
    case Family::diagonal_gaussian:
      return MultivariateGaussian::standard(dim, CovarianceMode::diagonal);
    default:
      break;
  }
  auto one = [&]() -> Distribution {
    switch (spec.family) {
      case Family::categorical: return Categorical::uniform(spec.categories, spec.pseudocount);
      case Family::exponential: return Exponential(1.0);
      case Family::poisson: return Poisson(1.0);
      default: return UnivariateGaussian(0.0, 1.0);
    }
  };
  if (dim == 1) return one();
  std::vector<Distribution> parts;
  parts.reserve(dim);
  for (std::size_t i = 0; i < dim; ++i) parts.push_back(one());
  return IndependentComponents(std::move(parts));
}

Distribution fit_distribution(const Distribution& prototype, const DataView& batch) {
  Distribution fitted = prototype;
  fitted.from_summaries(prototype.summarize(batch), 0.0);
  return fitted;
}

}  // namespace sufstat
