#include "sufstat/serialize.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sufstat/error.hpp"

namespace sufstat {
namespace {

using Json = nlohmann::ordered_json;

template <class... F>
struct Overloaded : F... {
  using F::operator()...;
};
template <class... F>
Overloaded(F...) -> Overloaded<F...>;

std::vector<double> to_doubles(const Json& j, const char* what) {
  if (!j.is_array()) throw Error(std::string("malformed model document: ") + what + " must be an array");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw Error(std::string("malformed model document: ") + what + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<double> flatten_rows(const Json& j, std::size_t width, const char* what) {
  if (!j.is_array()) throw Error(std::string("malformed model document: ") + what + " must be an array of rows");
  std::vector<double> out;
  for (const auto& row : j) {
    auto r = to_doubles(row, what);
    if (r.size() != width)
      throw Error(std::string("malformed model document: ") + what + " rows must have " +
                  std::to_string(width) + " entries");
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

Json rows_of(std::span<const double> flat, std::size_t width) {
  Json out = Json::array();
  for (std::size_t i = 0; i + width <= flat.size() && width > 0; i += width)
    out.push_back(std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(i),
                                      flat.begin() + static_cast<std::ptrdiff_t>(i + width)));
  return out;
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw Error(std::string("malformed model document: missing field '") + key + "'");
  return j.at(key);
}

std::size_t to_size(const Json& j, const char* what) {
  if (!j.is_number_unsigned()) throw Error(std::string("malformed model document: ") + what + " must be a non-negative integer");
  return j.get<std::size_t>();
}

Json distribution_params(const Distribution& d) {
  return std::visit(
      Overloaded{
          [](const UnivariateGaussian& g) { return Json::array({g.mu(), g.sigma2()}); },
          [](const MultivariateGaussian& g) {
            Json cov = g.diagonal() ? Json(g.covariance()) : rows_of(g.covariance(), g.dim());
            return Json::array({g.mean(), cov, g.diagonal() ? "diagonal" : "full"});
          },
          [](const Categorical& c) { return Json::array({c.probs()}); },
          [](const Exponential& e) { return Json::array({e.rate()}); },
          [](const Poisson& p) { return Json::array({p.lambda()}); },
          [](const IndependentComponents& ic) {
            Json parts = Json::array();
            for (const auto& p : ic.parts()) {
              Json obj;
              obj["type"] = std::string(p.type_name());
              obj["parameters"] = distribution_params(p);
              if (const auto* c = p.get_if<Categorical>(); c && c->pseudocount() != 0.0)
                obj["pseudocount"] = c->pseudocount();
              parts.push_back(std::move(obj));
            }
            return Json::array({std::move(parts)});
          },
      },
      d.impl());
}

Json distribution_json(const Distribution& d) {
  Json obj;
  obj["type"] = std::string(d.type_name());
  obj["parameters"] = distribution_params(d);
  if (const auto* c = d.get_if<Categorical>(); c && c->pseudocount() != 0.0)
    obj["pseudocount"] = c->pseudocount();
  return obj;
}

Distribution distribution_from(const Json& j) {
  const auto& type = field(j, "type");
  const auto& params = field(j, "parameters");
  if (!type.is_string()) throw Error("malformed model document: distribution type must be a string");
  if (!params.is_array()) throw Error("malformed model document: parameters must be an array");
  const std::string name = type.get<std::string>();
  auto need = [&](std::size_t n) {
    if (params.size() != n)
      throw Error("malformed model document: " + name + " takes " + std::to_string(n) + " parameters");
  };
  auto number = [&](std::size_t i) {
    if (!params[i].is_number()) throw Error("malformed model document: " + name + " parameters must be numbers");
    return params[i].get<double>();
  };
  if (name == UnivariateGaussian::type_name) {
    need(2);
    return UnivariateGaussian(number(0), number(1));
  }
  if (name == MultivariateGaussian::type_name) {
    need(3);
    auto mean = to_doubles(params[0], "mean");
    if (!params[2].is_string()) throw Error("malformed model document: covariance mode must be a string");
    const auto mode = params[2].get<std::string>();
    if (mode == "diagonal")
      return MultivariateGaussian(std::move(mean), to_doubles(params[1], "covariance"),
                                  CovarianceMode::diagonal);
    if (mode != "full") throw Error("malformed model document: unknown covariance mode '" + mode + "'");
    const std::size_t d = mean.size();
    return MultivariateGaussian(std::move(mean), flatten_rows(params[1], d, "covariance"),
                                CovarianceMode::full);
  }
  if (name == Categorical::type_name) {
    need(1);
    double pc = 0.0;
    if (j.contains("pseudocount")) {
      if (!j.at("pseudocount").is_number()) throw Error("malformed model document: pseudocount must be a number");
      pc = j.at("pseudocount").get<double>();
    }
    return Categorical(to_doubles(params[0], "probabilities"), pc);
  }
  if (name == Exponential::type_name) {
    need(1);
    return Exponential(number(0));
  }
  if (name == Poisson::type_name) {
    need(1);
    return Poisson(number(0));
  }
  if (name == IndependentComponents::type_name) {
    need(1);
    if (!params[0].is_array()) throw Error("malformed model document: components must be an array");
    std::vector<Distribution> parts;
    for (const auto& p : params[0]) parts.push_back(distribution_from(p));
    return IndependentComponents(std::move(parts));
  }
  throw Error("unknown distribution type '" + name + "'");
}

std::vector<Distribution> distributions_from(const Json& j, const char* what) {
  if (!j.is_array()) throw Error(std::string("malformed model document: ") + what + " must be an array");
  std::vector<Distribution> out;
  for (const auto& d : j) out.push_back(distribution_from(d));
  return out;
}

Json distributions_json(const std::vector<Distribution>& ds) {
  Json out = Json::array();
  for (const auto& d : ds) out.push_back(distribution_json(d));
  return out;
}

std::string context_key(const MarkovChain::Context& c) {
  std::string s;
  for (int v : c) s += (s.empty() ? "" : ",") + std::to_string(v);
  return s;
}

MarkovChain::Context parse_context(const std::string& key) {
  MarkovChain::Context c;
  std::stringstream in(key);
  std::string part;
  while (std::getline(in, part, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != part.size())
      throw Error("malformed model document: bad Markov chain context '" + key + "'");
    c.push_back(v);
  }
  return c;
}

Json payload_of(const Model& model) {
  return std::visit(
      Overloaded{
          [](const Distribution& d) {
            Json p = distribution_json(d);
            p.erase("type");
            return p;
          },
          [](const KMeansModel& m) {
            Json p;
            p["centroids"] = rows_of(m.centroids(), m.dim());
            return p;
          },
          [](const BayesClassifier& c) {
            Json p;
            p["naive"] = c.naive();
            p["priors"] = c.priors();
            p["distributions"] = distributions_json(c.distributions());
            return p;
          },
          [](const GeneralMixtureModel& m) {
            Json p;
            p["weights"] = m.weights();
            p["distributions"] = distributions_json(m.components());
            return p;
          },
          [](const HiddenMarkovModel& h) {
            Json p;
            p["initial"] = h.initial();
            p["transitions"] = rows_of(h.transitions(), h.n_states());
            p["ends"] = h.ends() ? Json(*h.ends()) : Json(nullptr);
            p["emissions"] = distributions_json(h.emissions());
            return p;
          },
          [](const MarkovChain& mc) {
            Json p;
            p["order"] = mc.order();
            p["alphabet"] = mc.alphabet();
            p["initials"] = mc.initials();
            Json trans = Json::object();
            for (const auto& [ctx, probs] : mc.transitions()) trans[context_key(ctx)] = probs;
            p["transitions"] = std::move(trans);
            return p;
          },
          [](const DiscreteBayesianNetwork& bn) {
            Json p;
            Json vars = Json::array();
            for (const auto& v : bn.variables()) {
              Json obj;
              obj["name"] = v.name;
              obj["cardinality"] = v.cardinality;
              vars.push_back(std::move(obj));
            }
            p["variables"] = std::move(vars);
            p["parents"] = bn.structure();
            Json cpts = Json::array();
            for (const auto& c : bn.cpts()) cpts.push_back(rows_of(c.table, c.cardinality));
            p["cpts"] = std::move(cpts);
            return p;
          },
      },
      model);
}

Model model_from(const std::string& type, const Json& p) {
  if (type == "KMeans") {
    const auto& rows = field(p, "centroids");
    if (!rows.is_array() || rows.empty()) throw Error("malformed model document: centroids must be a non-empty array");
    const std::size_t d = to_doubles(rows[0], "centroids").size();
    return KMeansModel(d, flatten_rows(rows, d, "centroids"));
  }
  if (type == "BayesClassifier") {
    const auto& naive = field(p, "naive");
    if (!naive.is_boolean()) throw Error("malformed model document: naive must be a boolean");
    return BayesClassifier(to_doubles(field(p, "priors"), "priors"),
                           distributions_from(field(p, "distributions"), "distributions"),
                           naive.get<bool>());
  }
  if (type == "GeneralMixtureModel")
    return GeneralMixtureModel(to_doubles(field(p, "weights"), "weights"),
                               distributions_from(field(p, "distributions"), "distributions"));
  if (type == "HiddenMarkovModel") {
    auto initial = to_doubles(field(p, "initial"), "initial");
    const std::size_t n = initial.size();
    std::optional<std::vector<double>> ends;
    if (!field(p, "ends").is_null()) ends = to_doubles(p.at("ends"), "ends");
    return HiddenMarkovModel(std::move(initial), flatten_rows(field(p, "transitions"), n, "transitions"),
                             distributions_from(field(p, "emissions"), "emissions"), std::move(ends));
  }
  if (type == "MarkovChain") {
    const std::size_t order = to_size(field(p, "order"), "order");
    const std::size_t alphabet = to_size(field(p, "alphabet"), "alphabet");
    const auto& init = field(p, "initials");
    if (!init.is_array()) throw Error("malformed model document: initials must be an array");
    std::vector<std::vector<double>> initials;
    for (const auto& row : init) initials.push_back(to_doubles(row, "initials"));
    const auto& trans = field(p, "transitions");
    if (!trans.is_object()) throw Error("malformed model document: transitions must be an object");
    std::map<MarkovChain::Context, std::vector<double>> table;
    for (const auto& [key, probs] : trans.items())
      table[parse_context(key)] = to_doubles(probs, "transitions");
    return MarkovChain(order, alphabet, std::move(initials), std::move(table));
  }
  if (type == "BayesianNetwork") {
    const auto& vars = field(p, "variables");
    if (!vars.is_array()) throw Error("malformed model document: variables must be an array");
    std::vector<Variable> variables;
    for (const auto& v : vars) {
      const auto& name = field(v, "name");
      if (!name.is_string()) throw Error("malformed model document: variable names must be strings");
      variables.push_back({name.get<std::string>(), to_size(field(v, "cardinality"), "cardinality")});
    }
    const auto& par = field(p, "parents");
    if (!par.is_array()) throw Error("malformed model document: parents must be an array");
    Structure parents;
    for (const auto& ps : par) {
      if (!ps.is_array()) throw Error("malformed model document: parents must be an array of arrays");
      std::vector<std::size_t> list;
      for (const auto& x : ps) list.push_back(to_size(x, "parent index"));
      parents.push_back(std::move(list));
    }
    const auto& cpts = field(p, "cpts");
    if (!cpts.is_array() || cpts.size() != variables.size())
      throw Error("malformed model document: need one CPT per variable");
    std::vector<std::vector<double>> tables;
    for (std::size_t v = 0; v < variables.size(); ++v)
      tables.push_back(flatten_rows(cpts[v], variables[v].cardinality, "cpts"));
    return DiscreteBayesianNetwork(std::move(variables), std::move(parents), std::move(tables));
  }
  Json d = p;
  d["type"] = type;
  try {
    return distribution_from(d);
  } catch (const Error& e) {
    if (std::string_view(e.what()).starts_with("unknown distribution type"))
      throw Error("unknown model type '" + type + "'");
    throw;
  }
}

}  // namespace

std::string model_type(const Model& model) {
  return std::visit(Overloaded{
                        [](const Distribution& d) { return std::string(d.type_name()); },
                        [](const KMeansModel&) { return std::string("KMeans"); },
                        [](const BayesClassifier&) { return std::string("BayesClassifier"); },
                        [](const GeneralMixtureModel&) { return std::string("GeneralMixtureModel"); },
                        [](const HiddenMarkovModel&) { return std::string("HiddenMarkovModel"); },
                        [](const MarkovChain&) { return std::string("MarkovChain"); },
                        [](const DiscreteBayesianNetwork&) { return std::string("BayesianNetwork"); },
                    },
                    model);
}

std::string serialize(const Model& model) {
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["type"] = model_type(model);
  doc["payload"] = payload_of(model);
  return doc.dump(2) + "\n";
}

Model deserialize(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed model document: ") + e.what());
  }
  const auto& version = field(doc, "format_version");
  if (!version.is_number_integer())
    throw Error("malformed model document: format_version must be an integer");
  if (version.get<long long>() != kFormatVersion)
    throw Error("unsupported format_version " + std::to_string(version.get<long long>()) +
                " (this build reads version " + std::to_string(kFormatVersion) + ")");
  const auto& type = field(doc, "type");
  if (!type.is_string()) throw Error("malformed model document: type must be a string");
  try {
    return model_from(type.get<std::string>(), field(doc, "payload"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed model document: ") + e.what());
  }
}

void save_model(const std::string& path, const Model& model) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << serialize(model);
  if (!out) throw Error("write failed: " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace sufstat
