#include "sufstat/stats.hpp"

#include <utility>

#include "sufstat/error.hpp"

namespace sufstat {

SufficientStats::SufficientStats(std::string kind, std::size_t size)
    : kind_(std::move(kind)), values_(size, 0.0) {}

std::vector<double>& SufficientStats::keyed_row(const Key& key, std::size_t width) {
  auto [it, inserted] = keyed_.try_emplace(key);
  if (inserted) it->second.assign(width, 0.0);
  return it->second;
}

void SufficientStats::offer_witness(double score, std::span<const double> row) {
  if (witness_ && !(score < witness_->score)) return;
  witness_ = Witness{score, std::vector<double>(row.begin(), row.end())};
}

SufficientStats& SufficientStats::merge(const SufficientStats& other) {
  if (other.is_identity()) return *this;
  if (is_identity()) {
    *this = other;
    return *this;
  }
  if (kind_ != other.kind_ || values_.size() != other.values_.size()) {
    throw Error("cannot merge sufficient statistics of kind '" + kind_ + "' (size " +
                std::to_string(values_.size()) + ") with kind '" + other.kind_ + "' (size " +
                std::to_string(other.values_.size()) + ")");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  for (const auto& [key, row] : other.keyed_) {
    auto& mine = keyed_row(key, row.size());
    if (mine.size() != row.size())
      throw Error("keyed statistics row width mismatch in kind '" + kind_ + "'");
    for (std::size_t i = 0; i < row.size(); ++i) mine[i] += row[i];
  }
  total_weight_ += other.total_weight_;
  log_likelihood_ += other.log_likelihood_;
  if (other.witness_) offer_witness(other.witness_->score, other.witness_->row);
  return *this;
}

SufficientStats merge_stats(SufficientStats a, const SufficientStats& b) {
  a.merge(b);
  return a;
}

}  // namespace sufstat
