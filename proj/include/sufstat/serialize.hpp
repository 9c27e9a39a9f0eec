#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "sufstat/bayesnet.hpp"
#include "sufstat/classifiers.hpp"
#include "sufstat/distributions.hpp"
#include "sufstat/hmm.hpp"
#include "sufstat/kmeans.hpp"
#include "sufstat/markov_chain.hpp"
#include "sufstat/mixture.hpp"

namespace sufstat {

inline constexpr int kFormatVersion = 1;

using Model = std::variant<Distribution, KMeansModel, BayesClassifier, GeneralMixtureModel,
                           HiddenMarkovModel, MarkovChain, DiscreteBayesianNetwork>;

// Document type tag: the distribution's own type name for bare
// distributions, "KMeans", "BayesClassifier", "GeneralMixtureModel",
// "HiddenMarkovModel", "MarkovChain" or "BayesianNetwork" otherwise.
std::string model_type(const Model& model);

// {"format_version":1,"type":...,"payload":{...}} with a fixed key order
// and shortest round-trip numbers, so equal models give equal text.
std::string serialize(const Model& model);
// Validates every invariant through the model constructors.
Model deserialize(std::string_view text);

void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

}  // namespace sufstat
