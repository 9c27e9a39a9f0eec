#include "sufstat/generate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sufstat/error.hpp"

namespace sufstat {

std::vector<double> random_simplex(std::size_t k, Rng& rng) {
  std::exponential_distribution<double> draw(1.0);
  std::vector<double> p(k);
  double total = 0.0;
  for (auto& v : p) total += (v = draw(rng) + 1e-3);
  for (auto& v : p) v /= total;
  // Push the rounding residue into the largest entry so the sum is exact
  // to within one ulp.
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  *std::max_element(p.begin(), p.end()) += 1.0 - sum;
  return p;
}

DataBatch generate_ellipses(const EllipsesConfig& config, Rng& rng) {
  if (config.dim == 0) throw Error("ellipses need dim >= 1");
  if (!(config.sigma > 0.0)) throw Error("ellipses need sigma > 0");
  if (!(config.labeled_fraction >= 0.0 && config.labeled_fraction <= 1.0))
    throw Error("labeled fraction must lie in [0, 1]");
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> noise(0.0, config.sigma);
  DataBatch out(config.dim);
  std::vector<double> x(config.dim);
  for (std::size_t i = 0; i < config.n; ++i) {
    const int c = coin(rng) ? 1 : 0;
    for (auto& v : x) v = c * config.separation + noise(rng);
    out.add_row(x, 1.0, c);
  }
  const auto labeled = static_cast<std::size_t>(std::llround(config.labeled_fraction * static_cast<double>(config.n)));
  std::vector<std::size_t> order(config.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = labeled; i < config.n; ++i) out.labels[order[i]] = -1;
  return out;
}

DataBatch generate_blobs(std::size_t n, std::size_t k, std::size_t dim, double sigma, Rng& rng) {
  if (k == 0 || dim == 0) throw Error("blobs need k >= 1 and dim >= 1");
  if (!(sigma > 0.0)) throw Error("blobs need sigma > 0");
  std::uniform_real_distribution<double> center(-10.0, 10.0);
  std::vector<double> centers(k * dim);
  for (auto& c : centers) c = center(rng);
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  std::normal_distribution<double> noise(0.0, sigma);
  DataBatch out(dim);
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = pick(rng);
    for (std::size_t j = 0; j < dim; ++j) x[j] = centers[c * dim + j] + noise(rng);
    out.add_row(x, 1.0, static_cast<int>(c));
  }
  return out;
}

DataBatch sample_rows(const Distribution& dist, std::size_t n, Rng& rng) {
  DataBatch out(dist.dim());
  for (std::size_t i = 0; i < n; ++i) out.add_row(dist.sample(rng));
  return out;
}

HiddenMarkovModel random_gaussian_hmm(std::size_t states, std::size_t dim, Rng& rng) {
  if (states == 0 || dim == 0) throw Error("an HMM needs states >= 1 and dim >= 1");
  std::uniform_real_distribution<double> mean(-5.0, 5.0);
  std::vector<Distribution> emissions;
  for (std::size_t s = 0; s < states; ++s) {
    std::vector<double> mu(dim);
    for (auto& m : mu) m = mean(rng);
    emissions.emplace_back(
        MultivariateGaussian(std::move(mu), std::vector<double>(dim, 1.0), CovarianceMode::diagonal));
  }
  std::vector<double> trans;
  for (std::size_t s = 0; s < states; ++s) {
    auto row = random_simplex(states, rng);
    for (auto& p : row) p *= 0.5;
    row[s] += 0.5;
    trans.insert(trans.end(), row.begin(), row.end());
  }
  return HiddenMarkovModel(random_simplex(states, rng), std::move(trans), std::move(emissions));
}

HiddenMarkovModel two_state_hmm() {
  return HiddenMarkovModel({0.5, 0.5}, {0.9, 0.1, 0.1, 0.9},
                           {UnivariateGaussian(0.0, 1.0), UnivariateGaussian(10.0, 1.0)});
}

SequenceBatch sample_hmm(const HiddenMarkovModel& model, std::size_t sequences, std::size_t length,
                         Rng& rng) {
  if (length == 0) throw Error("sequence length must be >= 1");
  const std::size_t n = model.n_states();
  SequenceBatch out;
  for (std::size_t s = 0; s < sequences; ++s) {
    Sequence seq;
    seq.dim = model.dim();
    std::discrete_distribution<std::size_t> start(model.initial().begin(), model.initial().end());
    std::size_t state = start(rng);
    for (std::size_t t = 0; t < length; ++t) {
      const auto x = model.emissions()[state].sample(rng);
      seq.values.insert(seq.values.end(), x.begin(), x.end());
      const auto row = model.transitions().begin() + static_cast<std::ptrdiff_t>(state * n);
      // Ends are ignored: sequences have the requested length.
      std::discrete_distribution<std::size_t> step(row, row + static_cast<std::ptrdiff_t>(n));
      state = step(rng);
    }
    out.add(std::move(seq));
  }
  return out;
}

MarkovChain random_chain(std::size_t order, std::size_t alphabet, Rng& rng) {
  if (order == 0 || alphabet == 0) throw Error("a Markov chain needs order >= 1 and alphabet >= 1");
  std::vector<std::vector<double>> initials;
  for (std::size_t p = 0; p < order; ++p) initials.push_back(random_simplex(alphabet, rng));
  std::map<MarkovChain::Context, std::vector<double>> table;
  std::size_t contexts = 1;
  for (std::size_t p = 0; p < order; ++p) contexts *= alphabet;
  for (std::size_t c = 0; c < contexts; ++c) {
    MarkovChain::Context ctx(order);
    std::size_t rest = c;
    for (std::size_t p = order; p-- > 0;) {
      ctx[p] = static_cast<int>(rest % alphabet);
      rest /= alphabet;
    }
    table[ctx] = random_simplex(alphabet, rng);
  }
  return MarkovChain(order, alphabet, std::move(initials), std::move(table));
}

SequenceBatch sample_chain(const MarkovChain& chain, std::size_t sequences, std::size_t length,
                           Rng& rng) {
  SequenceBatch out;
  for (std::size_t s = 0; s < sequences; ++s) {
    const auto symbols = chain.sample(length, rng);
    out.add(Sequence::from_symbols(symbols));
  }
  return out;
}

DiscreteBayesianNetwork random_tree_network(std::size_t variables, std::size_t cardinality, Rng& rng) {
  if (variables == 0 || cardinality == 0) throw Error("a network needs variables >= 1 and cardinality >= 1");
  std::vector<Variable> vars;
  Structure parents(variables);
  std::vector<std::vector<double>> tables;
  for (std::size_t v = 0; v < variables; ++v) {
    vars.push_back({"x" + std::to_string(v), cardinality});
    std::size_t rows = 1;
    if (v > 0) {
      std::uniform_int_distribution<std::size_t> pick(0, v - 1);
      parents[v].push_back(pick(rng));
      rows = cardinality;
    }
    std::vector<double> table;
    for (std::size_t r = 0; r < rows; ++r) {
      auto row = random_simplex(cardinality, rng);
      table.insert(table.end(), row.begin(), row.end());
    }
    tables.push_back(std::move(table));
  }
  return DiscreteBayesianNetwork(std::move(vars), std::move(parents), std::move(tables));
}

DataBatch sample_network(const DiscreteBayesianNetwork& net, std::size_t n, Rng& rng) {
  DataBatch out(net.size());
  std::vector<double> row(net.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t v : net.topological_order()) {
      const Cpt& cpt = net.cpts()[v];
      std::size_t r = 0;
      for (std::size_t p : cpt.parents)
        r = r * net.variables()[p].cardinality + static_cast<std::size_t>(row[p]);
      const auto probs = cpt.row(r);
      std::discrete_distribution<int> pick(probs.begin(), probs.end());
      row[v] = pick(rng);
    }
    out.add_row(row);
  }
  return out;
}

}  // namespace sufstat
