#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "sufstat/data.hpp"
#include "sufstat/engine.hpp"
#include "sufstat/math.hpp"

namespace sufstat {

inline constexpr double kChainPseudocount = 1e-8;

// Order-k Markov chain over symbols 0..alphabet-1. The first min(k, T)
// symbols of a sequence are scored by one unconditional categorical per
// position; later symbols by the categorical of their length-k context.
// Contexts never observed predict uniformly.
//
// Stats layout: dense [initial counts, order x alphabet]; keyed rows map
// each context to next-symbol counts.
class MarkovChain {
 public:
  using view_type = SequenceView;
  using Context = std::vector<int>;

  MarkovChain(std::size_t order, std::size_t alphabet, std::vector<std::vector<double>> initials,
              std::map<Context, std::vector<double>> transitions,
              double pseudocount = kChainPseudocount);
  static MarkovChain blank(std::size_t order, std::size_t alphabet,
                           double pseudocount = kChainPseudocount);

  std::size_t order() const noexcept { return order_; }
  std::size_t alphabet() const noexcept { return alphabet_; }
  double pseudocount() const noexcept { return pseudocount_; }
  const std::vector<std::vector<double>>& initials() const noexcept { return initials_; }
  const std::map<Context, std::vector<double>>& transitions() const noexcept {
    return transitions_;
  }
  // Next-symbol distribution after `context` (uniform when unseen).
  std::vector<double> next_probabilities(std::span<const int> context) const;

  double log_probability(std::span<const int> symbols) const;
  double log_probability(const Sequence& seq) const;
  std::vector<int> sample(std::size_t length, Rng& rng) const;

  SufficientStats zero_stats() const;
  void summarize(const SequenceView& batch, SufficientStats& into) const;
  void from_summaries(const SufficientStats& stats, double inertia);
  bool is_iterative() const noexcept { return false; }

  bool operator==(const MarkovChain& o) const {
    return order_ == o.order_ && alphabet_ == o.alphabet_ && initials_ == o.initials_ &&
           transitions_ == o.transitions_;
  }

 private:
  std::vector<int> symbols_of(const Sequence& seq) const;
  double log_next(std::span<const int> context, int symbol) const;

  std::size_t order_;
  std::size_t alphabet_;
  std::vector<std::vector<double>> initials_;
  std::map<Context, std::vector<double>> transitions_;
  double pseudocount_;
};

// Largest symbol + 1 over every sequence of the source.
std::size_t scan_alphabet(BatchSource<SequenceView>& source);

// Weighted n-gram counting. Without `alphabet` the source is scanned first.
MarkovChain fit_chain(std::size_t order, std::optional<std::size_t> alphabet,
                      BatchSource<SequenceView>& source, const FitConfig& config);

}  // namespace sufstat
