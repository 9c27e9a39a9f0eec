#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sufstat {

// Additive accumulator exchanged between data scans and parameter updates.
//
// Every model flattens its statistics into a dense vector whose layout it
// owns (documented next to each model). Models whose state space is sparse
// (n-gram contexts) additionally use keyed rows. Merging is elementwise
// addition, so stats form a commutative monoid; a default-constructed
// object is the identity for every kind.
//
// Two non-additive extras ride along:
//   - log_likelihood: the E-step likelihood of the summarized data, summed.
//   - witness: the row with the lowest model log-probability seen, merged
//     by minimum. Mixtures use it to reseed collapsed components.
class SufficientStats {
 public:
  using Key = std::vector<int>;

  struct Witness {
    double score = 0.0;
    std::vector<double> row;
    bool operator==(const Witness&) const = default;
  };

  SufficientStats() = default;
  SufficientStats(std::string kind, std::size_t size);

  const std::string& kind() const noexcept { return kind_; }
  bool is_identity() const noexcept { return kind_.empty(); }

  std::size_t size() const noexcept { return values_.size(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  const std::map<Key, std::vector<double>>& keyed() const noexcept { return keyed_; }
  // Row for `key`, created zero-filled with `width` entries on first use.
  std::vector<double>& keyed_row(const Key& key, std::size_t width);

  double total_weight() const noexcept { return total_weight_; }
  void add_total_weight(double w) noexcept { total_weight_ += w; }

  double log_likelihood() const noexcept { return log_likelihood_; }
  void add_log_likelihood(double ll) noexcept { log_likelihood_ += ll; }

  const std::optional<Witness>& witness() const noexcept { return witness_; }
  void offer_witness(double score, std::span<const double> row);

  // In-place merge. Throws Error naming both kinds on a kind or shape
  // mismatch.
  SufficientStats& merge(const SufficientStats& other);

  bool operator==(const SufficientStats&) const = default;

 private:
  std::string kind_;
  std::vector<double> values_;
  std::map<Key, std::vector<double>> keyed_;
  double total_weight_ = 0.0;
  double log_likelihood_ = 0.0;
  std::optional<Witness> witness_;
};

SufficientStats merge_stats(SufficientStats a, const SufficientStats& b);

}  // namespace sufstat
