#include "sufstat/markov_chain.hpp"

#include <cmath>
#include <string>

#include "sufstat/error.hpp"

namespace sufstat {
namespace {

void check_categorical(const std::vector<double>& p, std::size_t alphabet, const std::string& what) {
  if (p.size() != alphabet)
    throw Error(what + " has " + std::to_string(p.size()) + " entries, alphabet is " +
                std::to_string(alphabet));
  double total = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) throw Error(what + " has a negative or non-finite entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw Error("invariant violated: " + what + " must sum to 1 (got " + std::to_string(total) + ")");
}

int to_symbol(double x, std::size_t alphabet) {
  if (!(x >= 0.0) || x != std::floor(x) || x >= static_cast<double>(alphabet))
    throw Error("symbol " + std::to_string(x) + " out of range [0, " + std::to_string(alphabet) + ")");
  return static_cast<int>(x);
}

std::vector<double> normalize(std::span<const double> counts, double pc) {
  double total = 0.0;
  for (double c : counts) total += c;
  const double denom = total + pc * static_cast<double>(counts.size());
  std::vector<double> p(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) p[i] = (counts[i] + pc) / denom;
  return p;
}

void blend_into(std::vector<double>& old, const std::vector<double>& estimate, double inertia) {
  for (std::size_t i = 0; i < old.size(); ++i)
    old[i] = inertia == 0.0 ? estimate[i] : inertia * old[i] + (1.0 - inertia) * estimate[i];
}

std::string context_name(const MarkovChain::Context& c) {
  std::string s;
  for (int v : c) s += (s.empty() ? "" : ",") + std::to_string(v);
  return s;
}

}  // namespace

MarkovChain::MarkovChain(std::size_t order, std::size_t alphabet,
                         std::vector<std::vector<double>> initials,
                         std::map<Context, std::vector<double>> transitions, double pseudocount)
    : order_(order),
      alphabet_(alphabet),
      initials_(std::move(initials)),
      transitions_(std::move(transitions)),
      pseudocount_(pseudocount) {
  if (order_ < 1) throw Error("MarkovChain order must be >= 1");
  if (alphabet_ < 1) throw Error("MarkovChain alphabet must be >= 1");
  if (!std::isfinite(pseudocount_) || pseudocount_ < 0.0)
    throw Error("MarkovChain pseudocount must be >= 0");
  if (initials_.size() != order_)
    throw Error("MarkovChain needs one initial distribution per prefix position (" +
                std::to_string(order_) + ")");
  for (std::size_t p = 0; p < order_; ++p)
    check_categorical(initials_[p], alphabet_, "MarkovChain initial distribution " + std::to_string(p));
  for (const auto& [ctx, probs] : transitions_) {
    if (ctx.size() != order_)
      throw Error("MarkovChain context [" + context_name(ctx) + "] does not have length " +
                  std::to_string(order_));
    for (int s : ctx)
      if (s < 0 || static_cast<std::size_t>(s) >= alphabet_)
        throw Error("MarkovChain context [" + context_name(ctx) + "] has a symbol out of range");
    check_categorical(probs, alphabet_, "MarkovChain transition from [" + context_name(ctx) + "]");
  }
}

MarkovChain MarkovChain::blank(std::size_t order, std::size_t alphabet, double pseudocount) {
  if (alphabet < 1) throw Error("MarkovChain alphabet must be >= 1");
  std::vector<std::vector<double>> initials(
      order, std::vector<double>(alphabet, 1.0 / static_cast<double>(alphabet)));
  return MarkovChain(order, alphabet, std::move(initials), {}, pseudocount);
}

std::vector<double> MarkovChain::next_probabilities(std::span<const int> context) const {
  auto it = transitions_.find(Context(context.begin(), context.end()));
  if (it != transitions_.end()) return it->second;
  return std::vector<double>(alphabet_, 1.0 / static_cast<double>(alphabet_));
}

double MarkovChain::log_next(std::span<const int> context, int symbol) const {
  auto it = transitions_.find(Context(context.begin(), context.end()));
  if (it == transitions_.end()) return -std::log(static_cast<double>(alphabet_));
  return std::log(it->second[static_cast<std::size_t>(symbol)]);
}

std::vector<int> MarkovChain::symbols_of(const Sequence& seq) const {
  if (seq.dim != 1) throw Error("Markov chain sequences hold one symbol per position");
  std::vector<int> out(seq.values.size());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = to_symbol(seq.values[t], alphabet_);
  return out;
}

double MarkovChain::log_probability(std::span<const int> symbols) const {
  if (symbols.empty()) throw Error("empty sequence");
  for (int s : symbols)
    if (s < 0 || static_cast<std::size_t>(s) >= alphabet_)
      throw Error("symbol " + std::to_string(s) + " out of range [0, " + std::to_string(alphabet_) + ")");
  double lp = 0.0;
  for (std::size_t t = 0; t < symbols.size(); ++t) {
    if (t < order_)
      lp += std::log(initials_[t][static_cast<std::size_t>(symbols[t])]);
    else
      lp += log_next(symbols.subspan(t - order_, order_), symbols[t]);
  }
  return lp;
}

double MarkovChain::log_probability(const Sequence& seq) const {
  return log_probability(symbols_of(seq));
}

std::vector<int> MarkovChain::sample(std::size_t length, Rng& rng) const {
  if (length < 1) throw Error("sample length must be >= 1");
  std::vector<int> out;
  out.reserve(length);
  for (std::size_t t = 0; t < length; ++t) {
    const std::vector<double> p =
        t < order_ ? initials_[t]
                   : next_probabilities(std::span<const int>(out).subspan(t - order_, order_));
    std::discrete_distribution<int> pick(p.begin(), p.end());
    out.push_back(pick(rng));
  }
  return out;
}

SufficientStats MarkovChain::zero_stats() const {
  return SufficientStats("MarkovChain/" + std::to_string(order_) + "/" + std::to_string(alphabet_),
                         order_ * alphabet_);
}

void MarkovChain::summarize(const SequenceView& batch, SufficientStats& into) const {
  if (into.is_identity()) into = zero_stats();
  if (into.kind() != zero_stats().kind()) throw Error("Markov chain statistics kind mismatch");
  validate_sequences(batch);
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const double w = batch.weight(s);
    std::vector<int> symbols;
    try {
      symbols = symbols_of(batch.sequence(s));
    } catch (const Error& e) {
      throw Error("sequence " + std::to_string(batch.offset() + s) + ": " + e.what());
    }
    into.add_total_weight(w);
    if (w <= 0.0) continue;
    into.add_log_likelihood(w * log_probability(symbols));
    for (std::size_t t = 0; t < symbols.size(); ++t) {
      const auto sym = static_cast<std::size_t>(symbols[t]);
      if (t < order_) {
        into[t * alphabet_ + sym] += w;
      } else {
        Context ctx(symbols.begin() + static_cast<std::ptrdiff_t>(t - order_),
                    symbols.begin() + static_cast<std::ptrdiff_t>(t));
        into.keyed_row(ctx, alphabet_)[sym] += w;
      }
    }
  }
}

void MarkovChain::from_summaries(const SufficientStats& stats, double inertia) {
  if (stats.is_identity()) return;
  if (stats.kind() != zero_stats().kind())
    throw Error("cannot update MarkovChain from statistics of kind " + stats.kind());
  const auto counts = stats.values();
  for (std::size_t p = 0; p < order_; ++p) {
    const auto row = counts.subspan(p * alphabet_, alphabet_);
    double total = 0.0;
    for (double c : row) total += c;
    if (total > 0.0) blend_into(initials_[p], normalize(row, pseudocount_), inertia);
  }
  for (const auto& [ctx, row] : stats.keyed()) {
    double total = 0.0;
    for (double c : row) total += c;
    if (!(total > 0.0)) continue;
    auto [it, fresh] = transitions_.try_emplace(
        ctx, std::vector<double>(alphabet_, 1.0 / static_cast<double>(alphabet_)));
    blend_into(it->second, normalize(row, pseudocount_), fresh ? 0.0 : inertia);
  }
}

std::size_t scan_alphabet(BatchSource<SequenceView>& source) {
  source.rewind();
  double largest = -1.0;
  while (auto b = source.next()) {
    for (const Sequence& seq : b->view.sequences())
      for (double v : seq.values) {
        if (!(v >= 0.0) || v != std::floor(v))
          throw Error("symbol " + std::to_string(v) + " is not a non-negative integer");
        largest = std::max(largest, v);
      }
  }
  if (largest < 0.0) throw Error("fit: the data source yielded no sequences");
  return static_cast<std::size_t>(largest) + 1;
}

MarkovChain fit_chain(std::size_t order, std::optional<std::size_t> alphabet,
                      BatchSource<SequenceView>& source, const FitConfig& config) {
  const std::size_t m = alphabet ? *alphabet : scan_alphabet(source);
  MarkovChain chain = MarkovChain::blank(order, m);
  fit(chain, source, config);
  return chain;
}

}  // namespace sufstat
