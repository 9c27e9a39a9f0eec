#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sufstat/data.hpp"
#include "sufstat/engine.hpp"

namespace sufstat {

inline constexpr double kCptPseudocount = 1e-8;
inline constexpr std::size_t kEnumerationBudget = std::size_t{1} << 20;

struct Variable {
  std::string name;
  std::size_t cardinality = 2;
  bool operator==(const Variable&) const = default;
};

// parents[v] lists the parents of variable v in CPT index order.
using Structure = std::vector<std::vector<std::size_t>>;

// Conditional table of one variable. Row r holds P(child | parents = r),
// where r is the mixed-radix index of the parent values with the first
// parent most significant.
struct Cpt {
  std::size_t child = 0;
  std::vector<std::size_t> parents;
  std::size_t rows = 1;
  std::size_t cardinality = 2;
  std::vector<double> table;  // rows x cardinality

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(table).subspan(r * cardinality, cardinality);
  }
  bool operator==(const Cpt&) const = default;
};

// Discrete Bayesian network over complete assignments. Rows of a DataView
// are assignments with one column per variable.
//
// Stats layout: the count tables of every CPT, concatenated in variable
// order.
class DiscreteBayesianNetwork {
 public:
  using view_type = DataView;

  // `tables` holds one rows x cardinality table per variable; empty means
  // uniform.
  DiscreteBayesianNetwork(std::vector<Variable> variables, Structure parents,
                          std::vector<std::vector<double>> tables = {},
                          double pseudocount = kCptPseudocount);

  std::size_t size() const noexcept { return variables_.size(); }
  const std::vector<Variable>& variables() const noexcept { return variables_; }
  const std::vector<Cpt>& cpts() const noexcept { return cpts_; }
  Structure structure() const;
  const std::vector<std::size_t>& topological_order() const noexcept { return order_; }
  double pseudocount() const noexcept { return pseudocount_; }

  double log_probability(std::span<const int> assignment) const;
  double log_probability(std::span<const double> assignment) const;

  // Posterior of `query` given a partial assignment (nullopt = unobserved),
  // by enumerating completions of the unobserved variables.
  std::vector<double> predict_proba(std::span<const std::optional<int>> evidence,
                                    std::size_t query) const;

  SufficientStats zero_stats() const;
  void summarize(const DataView& batch, SufficientStats& into) const;
  void from_summaries(const SufficientStats& stats, double inertia);
  bool is_iterative() const noexcept { return false; }

  bool operator==(const DiscreteBayesianNetwork& o) const {
    return variables_ == o.variables_ && cpts_ == o.cpts_;
  }

 private:
  std::size_t row_index(const Cpt& cpt, std::span<const int> assignment) const;
  std::vector<int> to_assignment(std::span<const double> row) const;

  std::vector<Variable> variables_;
  std::vector<Cpt> cpts_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> order_;
  double pseudocount_;
};

// Weighted contingency tables of every variable pair (i < j), accumulated
// per the engine contract. Stats layout: for each pair in lexicographic
// order, a card_i x card_j table.
class PairwiseCounts {
 public:
  using view_type = DataView;

  explicit PairwiseCounts(std::vector<std::size_t> cardinalities);

  std::size_t size() const noexcept { return cards_.size(); }
  const std::vector<std::size_t>& cardinalities() const noexcept { return cards_; }

  // Natural-log empirical mutual information from the raw counts.
  double mutual_information(std::size_t i, std::size_t j) const;
  std::span<const double> table(std::size_t i, std::size_t j) const;

  SufficientStats zero_stats() const;
  void summarize(const DataView& batch, SufficientStats& into) const;
  void from_summaries(const SufficientStats& stats, double inertia);
  bool is_iterative() const noexcept { return false; }

 private:
  std::size_t pair_offset(std::size_t i, std::size_t j) const;

  std::vector<std::size_t> cards_;
  std::vector<std::size_t> offsets_;  // indexed by i * n + j for i < j
  std::vector<double> counts_;
};

// Maximum-weight spanning tree over pairwise mutual information (Kruskal,
// ties broken by lexicographic edge order), directed away from variable 0.
Structure chow_liu_tree(const PairwiseCounts& counts);
Structure chow_liu_structure(const std::vector<std::size_t>& cardinalities,
                             BatchSource<DataView>& source, const FitConfig& config);

// Largest value + 1 per column.
std::vector<std::size_t> scan_cardinalities(BatchSource<DataView>& source);

DiscreteBayesianNetwork fit_cpts(std::vector<Variable> variables, Structure parents,
                                 BatchSource<DataView>& source, const FitConfig& config);

// Chow-Liu structure followed by fit_cpts.
DiscreteBayesianNetwork bayesnet_from_samples(std::vector<Variable> variables,
                                              BatchSource<DataView>& source,
                                              const FitConfig& config);

// Variables named x0, x1, ... with cardinalities from the data.
std::vector<Variable> infer_variables(BatchSource<DataView>& source);

}  // namespace sufstat
