#pragma once

#include <cstddef>

#include "sufstat/bayesnet.hpp"
#include "sufstat/data.hpp"
#include "sufstat/distributions.hpp"
#include "sufstat/hmm.hpp"
#include "sufstat/markov_chain.hpp"
#include "sufstat/math.hpp"

namespace sufstat {

// Two overlapping Gaussian classes: class c has mean c * separation in
// every dimension and standard deviation sigma. Classes are drawn with
// equal probability; a random `labeled_fraction` of rows keeps its label
// and the rest are marked -1.
struct EllipsesConfig {
  std::size_t n = 1000;
  std::size_t dim = 10;
  double separation = 1.0;
  double sigma = 2.0;
  double labeled_fraction = 1.0;
};
DataBatch generate_ellipses(const EllipsesConfig& config, Rng& rng);

// k spherical clusters with centers uniform in [-10, 10]^dim; labels hold
// the true cluster.
DataBatch generate_blobs(std::size_t n, std::size_t k, std::size_t dim, double sigma, Rng& rng);

// n i.i.d. draws.
DataBatch sample_rows(const Distribution& dist, std::size_t n, Rng& rng);

// Dense Gaussian HMM with diagonal unit covariances, state means uniform
// in [-5, 5]^dim and random transition rows favouring self-transitions.
HiddenMarkovModel random_gaussian_hmm(std::size_t states, std::size_t dim, Rng& rng);
// The two-state model with emission means 0 and 10, unit variance and
// self-transition 0.9.
HiddenMarkovModel two_state_hmm();
SequenceBatch sample_hmm(const HiddenMarkovModel& model, std::size_t sequences, std::size_t length,
                         Rng& rng);

// Chain with every context observed and Dirichlet(1)-like rows.
MarkovChain random_chain(std::size_t order, std::size_t alphabet, Rng& rng);
SequenceBatch sample_chain(const MarkovChain& chain, std::size_t sequences, std::size_t length,
                           Rng& rng);

// Random tree-structured network: variable v > 0 has one parent drawn from
// 0..v-1; CPT rows are random.
DiscreteBayesianNetwork random_tree_network(std::size_t variables, std::size_t cardinality, Rng& rng);
DataBatch sample_network(const DiscreteBayesianNetwork& net, std::size_t n, Rng& rng);

// Random probability vector with i.i.d. Exp(1) weights.
std::vector<double> random_simplex(std::size_t k, Rng& rng);

}  // namespace sufstat
