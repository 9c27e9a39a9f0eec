#include "sufstat/bayesnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "sufstat/error.hpp"
#include "sufstat/math.hpp"

namespace sufstat {
namespace {

int to_value(double x, std::size_t cardinality, std::size_t var) {
  if (!(x >= 0.0) || x != std::floor(x) || x >= static_cast<double>(cardinality))
    throw Error("variable " + std::to_string(var) + ": value " + std::to_string(x) +
                " out of range [0, " + std::to_string(cardinality) + ")");
  return static_cast<int>(x);
}

}  // namespace

DiscreteBayesianNetwork::DiscreteBayesianNetwork(std::vector<Variable> variables, Structure parents,
                                                 std::vector<std::vector<double>> tables,
                                                 double pseudocount)
    : variables_(std::move(variables)), pseudocount_(pseudocount) {
  const std::size_t n = variables_.size();
  if (n == 0) throw Error("a Bayesian network needs at least one variable");
  if (parents.size() != n) throw Error("structure must list parents for every variable");
  if (!tables.empty() && tables.size() != n) throw Error("need one CPT per variable");
  if (!std::isfinite(pseudocount_) || pseudocount_ < 0.0) throw Error("CPT pseudocount must be >= 0");
  for (const auto& v : variables_)
    if (v.cardinality < 1) throw Error("variable " + v.name + " has cardinality 0");

  // Kahn's algorithm; the smallest ready index goes first.
  std::vector<std::size_t> indegree(n, 0);
  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t v = 0; v < n; ++v) {
    std::vector<std::size_t> seen = parents[v];
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
      throw Error("variable " + variables_[v].name + " lists a parent twice");
    for (std::size_t p : parents[v]) {
      if (p >= n) throw Error("parent index " + std::to_string(p) + " out of range");
      if (p == v) throw Error("cycle detected: " + variables_[v].name + " is its own parent");
      children[p].push_back(v);
      ++indegree[v];
    }
  }
  std::vector<std::size_t> ready;
  for (std::size_t v = 0; v < n; ++v)
    if (indegree[v] == 0) ready.push_back(v);
  while (!ready.empty()) {
    auto it = std::min_element(ready.begin(), ready.end());
    const std::size_t v = *it;
    ready.erase(it);
    order_.push_back(v);
    for (std::size_t c : children[v])
      if (--indegree[c] == 0) ready.push_back(c);
  }
  if (order_.size() != n) throw Error("cycle detected in the network structure");

  std::size_t offset = 0;
  for (std::size_t v = 0; v < n; ++v) {
    Cpt cpt;
    cpt.child = v;
    cpt.parents = parents[v];
    cpt.cardinality = variables_[v].cardinality;
    for (std::size_t p : cpt.parents) {
      cpt.rows *= variables_[p].cardinality;
      if (cpt.rows > kEnumerationBudget * 64)
        throw Error("CPT of " + variables_[v].name + " is too large");
    }
    const std::size_t cells = cpt.rows * cpt.cardinality;
    if (tables.empty()) {
      cpt.table.assign(cells, 1.0 / static_cast<double>(cpt.cardinality));
    } else {
      if (tables[v].size() != cells)
        throw Error("CPT of " + variables_[v].name + " has " + std::to_string(tables[v].size()) +
                    " entries, expected " + std::to_string(cells));
      cpt.table = std::move(tables[v]);
      for (std::size_t r = 0; r < cpt.rows; ++r) {
        double total = 0.0;
        for (double p : cpt.row(r)) {
          if (!std::isfinite(p) || p < 0.0)
            throw Error("CPT of " + variables_[v].name + " has a negative or non-finite entry");
          total += p;
        }
        if (std::abs(total - 1.0) > 1e-12)
          throw Error("invariant violated: CPT row " + std::to_string(r) + " of " +
                      variables_[v].name + " must sum to 1 (got " + std::to_string(total) + ")");
      }
    }
    offsets_.push_back(offset);
    offset += cells;
    cpts_.push_back(std::move(cpt));
  }
}

Structure DiscreteBayesianNetwork::structure() const {
  Structure s;
  for (const auto& c : cpts_) s.push_back(c.parents);
  return s;
}

std::size_t DiscreteBayesianNetwork::row_index(const Cpt& cpt, std::span<const int> assignment) const {
  std::size_t r = 0;
  for (std::size_t p : cpt.parents)
    r = r * variables_[p].cardinality + static_cast<std::size_t>(assignment[p]);
  return r;
}

std::vector<int> DiscreteBayesianNetwork::to_assignment(std::span<const double> row) const {
  if (row.size() != size())
    throw Error("assignment has " + std::to_string(row.size()) + " values, network has " +
                std::to_string(size()) + " variables");
  std::vector<int> a(row.size());
  for (std::size_t v = 0; v < row.size(); ++v) a[v] = to_value(row[v], variables_[v].cardinality, v);
  return a;
}

double DiscreteBayesianNetwork::log_probability(std::span<const int> assignment) const {
  if (assignment.size() != size())
    throw Error("incomplete assignment: " + std::to_string(assignment.size()) + " of " +
                std::to_string(size()) + " variables");
  for (std::size_t v = 0; v < size(); ++v)
    if (assignment[v] < 0 || static_cast<std::size_t>(assignment[v]) >= variables_[v].cardinality)
      throw Error("variable " + std::to_string(v) + ": value " + std::to_string(assignment[v]) +
                  " out of range [0, " + std::to_string(variables_[v].cardinality) + ")");
  double lp = 0.0;
  for (const auto& cpt : cpts_)
    lp += std::log(cpt.row(row_index(cpt, assignment))[static_cast<std::size_t>(assignment[cpt.child])]);
  return lp;
}

double DiscreteBayesianNetwork::log_probability(std::span<const double> assignment) const {
  return log_probability(to_assignment(assignment));
}

std::vector<double> DiscreteBayesianNetwork::predict_proba(std::span<const std::optional<int>> evidence,
                                                           std::size_t query) const {
  const std::size_t n = size();
  if (evidence.size() != n)
    throw Error("evidence must have one entry per variable (" + std::to_string(n) + ")");
  if (query >= n) throw Error("query variable " + std::to_string(query) + " out of range");
  std::vector<std::size_t> free;
  std::vector<int> a(n, 0);
  std::size_t completions = 1;
  for (std::size_t v = 0; v < n; ++v) {
    if (evidence[v]) {
      const int x = *evidence[v];
      if (x < 0 || static_cast<std::size_t>(x) >= variables_[v].cardinality)
        throw Error("evidence for " + variables_[v].name + " out of range");
      a[v] = x;
    } else {
      free.push_back(v);
      completions *= variables_[v].cardinality;
      if (completions > kEnumerationBudget)
        throw Error("enumeration budget exceeded: more than " + std::to_string(kEnumerationBudget) +
                    " joint assignments");
    }
  }
  std::vector<double> logs(variables_[query].cardinality, kNegInf);
  for (std::size_t k = 0; k < completions; ++k) {
    std::size_t rest = k;
    for (auto it = free.rbegin(); it != free.rend(); ++it) {
      a[*it] = static_cast<int>(rest % variables_[*it].cardinality);
      rest /= variables_[*it].cardinality;
    }
    double lp = 0.0;
    for (const auto& cpt : cpts_)
      lp += std::log(cpt.row(row_index(cpt, a))[static_cast<std::size_t>(a[cpt.child])]);
    auto& slot = logs[static_cast<std::size_t>(a[query])];
    slot = log_add(slot, lp);
  }
  const double total = log_sum_exp(logs);
  if (total == kNegInf) throw Error("contradictory evidence: it has zero probability");
  std::vector<double> out(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) out[i] = std::exp(logs[i] - total);
  return out;
}

SufficientStats DiscreteBayesianNetwork::zero_stats() const {
  std::string kind = "BayesianNetwork";
  for (const auto& c : cpts_) {
    kind += "/" + std::to_string(c.cardinality);
    for (std::size_t p : c.parents) kind += (p == c.parents.front() ? ":" : ",") + std::to_string(p);
  }
  return SufficientStats(kind, offsets_.back() + cpts_.back().table.size());
}

void DiscreteBayesianNetwork::summarize(const DataView& batch, SufficientStats& into) const {
  if (into.is_identity()) into = zero_stats();
  if (into.kind() != zero_stats().kind()) throw Error("Bayesian network statistics kind mismatch");
  if (batch.dim() != size())
    throw Error("rows have " + std::to_string(batch.dim()) + " columns, network has " +
                std::to_string(size()) + " variables");
  validate_rows(batch);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::vector<int> a;
    try {
      a = to_assignment(batch.row(i));
    } catch (const Error& e) {
      throw Error("row " + std::to_string(batch.offset() + i) + ": " + e.what());
    }
    const double w = batch.weight(i);
    into.add_total_weight(w);
    if (w <= 0.0) continue;
    into.add_log_likelihood(w * log_probability(std::span<const int>(a)));
    for (std::size_t v = 0; v < cpts_.size(); ++v) {
      const Cpt& cpt = cpts_[v];
      into[offsets_[v] + row_index(cpt, a) * cpt.cardinality + static_cast<std::size_t>(a[v])] += w;
    }
  }
}

void DiscreteBayesianNetwork::from_summaries(const SufficientStats& stats, double inertia) {
  if (stats.is_identity()) return;
  if (stats.kind() != zero_stats().kind())
    throw Error("cannot update BayesianNetwork from statistics of kind " + stats.kind());
  const auto counts = stats.values();
  for (std::size_t v = 0; v < cpts_.size(); ++v) {
    Cpt& cpt = cpts_[v];
    const double m = static_cast<double>(cpt.cardinality);
    for (std::size_t r = 0; r < cpt.rows; ++r) {
      const auto row = counts.subspan(offsets_[v] + r * cpt.cardinality, cpt.cardinality);
      double total = 0.0;
      for (double c : row) total += c;
      const double denom = total + m * pseudocount_;
      if (!(denom > 0.0)) continue;
      for (std::size_t x = 0; x < cpt.cardinality; ++x) {
        const double est = (row[x] + pseudocount_) / denom;
        double& p = cpt.table[r * cpt.cardinality + x];
        p = inertia == 0.0 ? est : inertia * p + (1.0 - inertia) * est;
      }
    }
  }
}

PairwiseCounts::PairwiseCounts(std::vector<std::size_t> cardinalities)
    : cards_(std::move(cardinalities)) {
  const std::size_t n = cards_.size();
  if (n < 2) throw Error("structure learning needs at least two variables");
  offsets_.assign(n * n, 0);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      offsets_[i * n + j] = offset;
      offset += cards_[i] * cards_[j];
    }
  counts_.assign(offset, 0.0);
}

std::size_t PairwiseCounts::pair_offset(std::size_t i, std::size_t j) const {
  return offsets_[i * cards_.size() + j];
}

std::span<const double> PairwiseCounts::table(std::size_t i, std::size_t j) const {
  if (i >= j || j >= cards_.size()) throw Error("pair tables are indexed with i < j");
  return std::span<const double>(counts_).subspan(pair_offset(i, j), cards_[i] * cards_[j]);
}

double PairwiseCounts::mutual_information(std::size_t i, std::size_t j) const {
  if (i == j) throw Error("mutual information needs two distinct variables");
  if (i > j) std::swap(i, j);
  const auto t = table(i, j);
  std::vector<double> pi(cards_[i], 0.0), pj(cards_[j], 0.0);
  double total = 0.0;
  for (std::size_t a = 0; a < cards_[i]; ++a)
    for (std::size_t b = 0; b < cards_[j]; ++b) {
      const double c = t[a * cards_[j] + b];
      pi[a] += c;
      pj[b] += c;
      total += c;
    }
  if (!(total > 0.0)) return 0.0;
  double mi = 0.0;
  for (std::size_t a = 0; a < cards_[i]; ++a)
    for (std::size_t b = 0; b < cards_[j]; ++b) {
      const double c = t[a * cards_[j] + b];
      if (c > 0.0) mi += (c / total) * std::log(c * total / (pi[a] * pj[b]));
    }
  return std::max(mi, 0.0);
}

SufficientStats PairwiseCounts::zero_stats() const {
  std::string kind = "PairwiseCounts";
  for (std::size_t c : cards_) kind += "/" + std::to_string(c);
  return SufficientStats(kind, counts_.size());
}

void PairwiseCounts::summarize(const DataView& batch, SufficientStats& into) const {
  if (into.is_identity()) into = zero_stats();
  if (into.kind() != zero_stats().kind()) throw Error("pairwise count statistics kind mismatch");
  const std::size_t n = cards_.size();
  if (batch.dim() != n)
    throw Error("rows have " + std::to_string(batch.dim()) + " columns, expected " + std::to_string(n));
  validate_rows(batch);
  std::vector<std::size_t> a(n);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const auto row = batch.row(r);
    try {
      for (std::size_t v = 0; v < n; ++v) a[v] = static_cast<std::size_t>(to_value(row[v], cards_[v], v));
    } catch (const Error& e) {
      throw Error("row " + std::to_string(batch.offset() + r) + ": " + e.what());
    }
    const double w = batch.weight(r);
    into.add_total_weight(w);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) into[pair_offset(i, j) + a[i] * cards_[j] + a[j]] += w;
  }
}

void PairwiseCounts::from_summaries(const SufficientStats& stats, double) {
  if (stats.is_identity()) return;
  if (stats.kind() != zero_stats().kind())
    throw Error("cannot load pairwise counts of kind " + stats.kind());
  counts_.assign(stats.values().begin(), stats.values().end());
}

Structure chow_liu_tree(const PairwiseCounts& counts) {
  const std::size_t n = counts.size();
  struct Edge {
    double weight;
    std::size_t i, j;
  };
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) edges.push_back({counts.mutual_information(i, j), i, j});
  // Heaviest first; equal weights keep lexicographic (i, j) order.
  std::stable_sort(edges.begin(), edges.end(),
                   [](const Edge& a, const Edge& b) { return a.weight > b.weight; });

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : edges) {
    const std::size_t a = find(e.i), b = find(e.j);
    if (a == b) continue;
    parent[a] = b;
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }

  Structure out(n);
  std::vector<bool> visited(n, false);
  std::vector<std::size_t> stack{0};
  visited[0] = true;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t u : adj[v])
      if (!visited[u]) {
        visited[u] = true;
        out[u].push_back(v);
        stack.push_back(u);
      }
  }
  return out;
}

Structure chow_liu_structure(const std::vector<std::size_t>& cardinalities,
                             BatchSource<DataView>& source, const FitConfig& config) {
  PairwiseCounts counts(cardinalities);
  const SufficientStats stats = parallel_summarize(counts, source, config);
  if (!(stats.total_weight() > 0.0)) throw Error("fit: total sample weight is zero");
  counts.from_summaries(stats, 0.0);
  return chow_liu_tree(counts);
}

std::vector<std::size_t> scan_cardinalities(BatchSource<DataView>& source) {
  source.rewind();
  std::vector<double> largest;
  while (auto b = source.next()) {
    const DataView& v = b->view;
    if (largest.empty()) largest.assign(v.dim(), 0.0);
    if (v.dim() != largest.size()) throw Error("batches disagree on the number of columns");
    for (std::size_t r = 0; r < v.size(); ++r) {
      const auto row = v.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (!(row[c] >= 0.0) || row[c] != std::floor(row[c]))
          throw Error("row " + std::to_string(v.offset() + r) + ", column " + std::to_string(c) +
                      ": value is not a non-negative integer");
        largest[c] = std::max(largest[c], row[c]);
      }
    }
  }
  if (largest.empty()) throw Error("fit: the data source yielded no rows");
  std::vector<std::size_t> cards;
  for (double m : largest) cards.push_back(static_cast<std::size_t>(m) + 1);
  return cards;
}

std::vector<Variable> infer_variables(BatchSource<DataView>& source) {
  std::vector<Variable> vars;
  const auto cards = scan_cardinalities(source);
  for (std::size_t i = 0; i < cards.size(); ++i) vars.push_back({"x" + std::to_string(i), cards[i]});
  return vars;
}

DiscreteBayesianNetwork fit_cpts(std::vector<Variable> variables, Structure parents,
                                 BatchSource<DataView>& source, const FitConfig& config) {
  DiscreteBayesianNetwork net(std::move(variables), std::move(parents));
  fit(net, source, config);
  return net;
}

DiscreteBayesianNetwork bayesnet_from_samples(std::vector<Variable> variables,
                                              BatchSource<DataView>& source,
                                              const FitConfig& config) {
  if (variables.size() == 1) return fit_cpts(std::move(variables), Structure(1), source, config);
  std::vector<std::size_t> cards;
  for (const auto& v : variables) cards.push_back(v.cardinality);
  Structure tree = chow_liu_structure(cards, source, config);
  return fit_cpts(std::move(variables), std::move(tree), source, config);
}

}  // namespace sufstat
