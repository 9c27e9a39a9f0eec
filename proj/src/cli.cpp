#include "sufstat/cli.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sufstat/bayesnet.hpp"
#include "sufstat/classifiers.hpp"
#include "sufstat/error.hpp"
#include "sufstat/generate.hpp"
#include "sufstat/hmm.hpp"
#include "sufstat/io.hpp"
#include "sufstat/kmeans.hpp"
#include "sufstat/markov_chain.hpp"
#include "sufstat/mixture.hpp"
#include "sufstat/serialize.hpp"

namespace sufstat {
namespace {

// Flag misuse detected after parsing; exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class... F>
struct Overloaded : F... {
  using F::operator()...;
};
template <class... F>
Overloaded(F...) -> Overloaded<F...>;

struct TrainFlags {
  std::string batch_size = "all";
  std::string batches_per_epoch = "all";
  std::size_t max_iterations = 100;
  double stop_threshold = 0.1;
  double inertia = 0.0;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  std::size_t kmeans_iterations = 10;
  bool nondeterministic = false;
};

struct Options {
  TrainFlags train;
  // fit
  std::string model_type;
  std::string data;
  std::string out_path;
  std::string init_model;
  std::size_t k = 2;
  std::size_t states = 0;  // 0: per-command default
  std::size_t order = 1;
  std::size_t classes = 0;
  std::size_t categories = 0;
  std::size_t alphabet = 0;
  double pseudocount = 0.0;
  std::string family;
  std::string labels;
  std::string weights;
  std::string structure = "chow-liu";
  // predict / score
  std::string model_path;
  std::string query;
  bool proba = false;
  // generate
  std::string preset;
  std::size_t n = 1000;
  std::size_t dim = 0;
  std::size_t sequences = 0;
  std::size_t length = 0;
  std::size_t variables = 5;
  std::size_t cardinality = 2;
  double labeled_fraction = 1.0;
  double sigma = 0.0;
  // benchmark
  std::string jobs_list = "1";
};

std::optional<std::size_t> parse_count(const std::string& text, const char* flag) {
  if (text == "all") return std::nullopt;
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || v == 0 || text.front() == '-')
    throw UsageError(std::string(flag) + " must be a positive integer or 'all'");
  return static_cast<std::size_t>(v);
}

FitConfig make_config(const TrainFlags& f) {
  FitConfig c;
  c.batch_size = parse_count(f.batch_size, "--batch-size");
  c.batches_per_epoch = parse_count(f.batches_per_epoch, "--batches-per-epoch");
  c.max_iterations = f.max_iterations;
  c.stop_threshold = f.stop_threshold;
  c.inertia = f.inertia;
  c.worker_count = f.jobs;
  c.rng_seed = f.seed;
  c.kmeans_max_iterations = f.kmeans_iterations;
  c.deterministic_merge = !f.nondeterministic;
  try {
    c.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return c;
}

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--batch-size", f.batch_size, "Rows (or sequences) per batch, or 'all'");
  cmd->add_option("--batches-per-epoch", f.batches_per_epoch,
                  "Batches summarized before each parameter update, or 'all'");
  cmd->add_option("--max-iterations", f.max_iterations, "EM iteration budget");
  cmd->add_option("--stop-threshold", f.stop_threshold, "Stop when the log-likelihood gain drops below this");
  cmd->add_option("--inertia", f.inertia, "Weight kept on the old parameters at each update");
  cmd->add_option("--jobs", f.jobs, "Worker threads");
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("--kmeans-iterations", f.kmeans_iterations, "Lloyd iterations when k-means initializes");
  cmd->add_flag("--nondeterministic-merge", f.nondeterministic,
                "Merge partial statistics as workers finish");
}

bool is_distribution_type(const std::string& type) {
  return type == "gaussian" || type == "mvn" || type == "mvn-diag" || type == "exponential" ||
         type == "poisson" || type == "categorical";
}

bool is_classifier_type(const std::string& type) {
  return type == "naive-bayes" || type == "classifier" || type == "bayes";
}

const std::vector<std::string>& known_model_types() {
  static const std::vector<std::string> types{"gaussian", "mvn", "mvn-diag", "exponential", "poisson",
                                              "categorical", "kmeans", "gmm", "naive-bayes", "classifier",
                                              "bayes", "hmm", "markov", "bayesnet"};
  return types;
}

ColumnRef column_ref(const std::string& text) {
  if (!text.empty() && std::all_of(text.begin(), text.end(), [](char ch) { return std::isdigit(ch); }))
    return static_cast<std::size_t>(std::stoull(text));
  return text;
}

// Label and weight columns: explicit flags, else header columns named
// "label" and "weight".
CsvSchema schema_for(const std::string& path, const std::string& labels, const std::string& weights) {
  CsvSchema schema;
  std::vector<std::string> names;
  if (labels.empty() || weights.empty()) names = CsvSource(path).feature_names();
  auto has = [&](const char* name) { return std::find(names.begin(), names.end(), name) != names.end(); };
  if (!labels.empty())
    schema.label = column_ref(labels);
  else if (has("label"))
    schema.label = std::string("label");
  if (!weights.empty())
    schema.weight = column_ref(weights);
  else if (has("weight"))
    schema.weight = std::string("weight");
  return schema;
}

void print_report(std::ostream& out, const FitReport& report) {
  for (std::size_t i = 0; i < report.log_likelihood.size(); ++i)
    out << "iteration " << i + 1 << ": log-likelihood " << format_double(report.log_likelihood[i]) << '\n';
  out << "iterations: " << report.iterations_run << '\n';
  out << "improvement at stop: "
      << (std::isnan(report.improvement_at_stop) ? std::string("n/a") : format_double(report.improvement_at_stop))
      << '\n';
}

// Training log-likelihood under the fitted parameters of a single-pass model.
template <Trainable M>
void print_final(std::ostream& out, const M& model, BatchSource<typename M::view_type>& source,
                 const FitConfig& config) {
  out << "log-likelihood: " << format_double(parallel_summarize(model, source, config).log_likelihood())
      << '\n';
}

FamilySpec family_spec(const Options& o, const std::string& fallback) {
  FamilySpec spec;
  spec.family = parse_family(o.family.empty() ? fallback : o.family);
  spec.pseudocount = o.pseudocount;
  if (o.categories > 0) spec.categories = o.categories;
  return spec;
}

std::size_t categories_of(BatchSource<DataView>& source) {
  const auto cards = scan_cardinalities(source);
  return *std::max_element(cards.begin(), cards.end());
}

// Fits from scratch. Returns the model and prints the report.
Model fit_fresh(const Options& o, const FitConfig& config, std::ostream& out, std::ostream& err) {
  const std::string& type = o.model_type;
  if (type == "hmm" || type == "markov") {
    SequenceFileSource source(o.data, config.batch_size);
    if (type == "hmm") {
      auto res = hmm_from_samples(family_spec(o, "mvn-diag"), o.states ? o.states : 2, source, config);
      print_report(out, res.report);
      return res.model;
    }
    const auto chain = fit_chain(o.order, o.alphabet ? std::optional(o.alphabet) : std::nullopt, source, config);
    print_final(out, chain, source, config);
    return chain;
  }

  CsvSource source(o.data, schema_for(o.data, o.labels, o.weights), config.batch_size);
  if (is_distribution_type(type)) {
    FamilySpec spec = family_spec(o, type);
    if (spec.family == Family::categorical && o.categories == 0) spec.categories = categories_of(source);
    Distribution d = blank_distribution(spec, source.dim());
    fit(d, source, config);
    print_final(out, d, source, config);
    return d;
  }
  if (type == "kmeans") {
    const DataBatch data = read_csv(o.data, schema_for(o.data, o.labels, o.weights));
    FitConfig kc = config;
    const auto res = lloyd_fit(data.view(), o.k, kc);
    for (std::size_t i = 0; i < res.objective.size(); ++i)
      out << "iteration " << i + 1 << ": objective " << format_double(res.objective[i]) << " moved "
          << res.reassignments[i] << '\n';
    out << "iterations: " << res.iterations << '\n';
    return res.model;
  }
  if (type == "gmm") {
    auto res = mixture_from_samples(family_spec(o, "mvn"), o.k, source, config);
    print_report(out, res.report);
    return res.model;
  }
  if (is_classifier_type(type)) {
    if (!source.has_labels())
      throw Error(o.data + ": classifier training needs a label column (--labels)");
    auto res = fit_classifier(family_spec(o, type == "bayes" ? "mvn" : "gaussian"), o.classes, source, config);
    for (const auto& w : res.warnings) err << "warning: " << w << '\n';
    out << "mode: " << (res.semi_supervised ? "semi-supervised" : "supervised") << '\n';
    if (res.semi_supervised)
      print_report(out, res.report);
    else
      print_final(out, res.model, source, config);
    return res.model;
  }
  if (type == "bayesnet") {
    auto vars = infer_variables(source);
    auto net = o.structure == "none" ? fit_cpts(vars, Structure(vars.size()), source, config)
                                     : bayesnet_from_samples(vars, source, config);
    print_final(out, net, source, config);
    return net;
  }
  throw UsageError("unknown model type '" + type + "'");
}

// Continues training from an existing model document.
Model fit_from(Model model, const Options& o, const FitConfig& config, std::ostream& out) {
  return std::visit(
      Overloaded{
          [&](HiddenMarkovModel& m) -> Model {
            SequenceFileSource source(o.data, config.batch_size);
            print_report(out, fit(m, source, config));
            return m;
          },
          [&](MarkovChain& m) -> Model {
            SequenceFileSource source(o.data, config.batch_size);
            fit(m, source, config);
            print_final(out, m, source, config);
            return m;
          },
          [&](KMeansModel& m) -> Model {
            const DataBatch data = read_csv(o.data, schema_for(o.data, o.labels, o.weights));
            const auto res = lloyd_refine(data.view(), m, config.max_iterations);
            out << "iterations: " << res.iterations << '\n';
            return res.model;
          },
          [&](BayesClassifier& m) -> Model {
            CsvSource source(o.data, schema_for(o.data, o.labels, o.weights), config.batch_size);
            if (!source.has_labels())
              throw Error(o.data + ": classifier training needs a label column (--labels)");
            const auto scan = scan_labels(source);
            const bool semi = scan.unlabeled > 0;
            m.set_training_mode(semi ? BayesClassifier::TrainingMode::semi_supervised
                                     : BayesClassifier::TrainingMode::supervised);
            out << "mode: " << (semi ? "semi-supervised" : "supervised") << '\n';
            print_report(out, fit(m, source, config));
            return m;
          },
          [&](auto& m) -> Model {
            CsvSource source(o.data, schema_for(o.data, o.labels, o.weights), config.batch_size);
            print_report(out, fit(m, source, config));
            return m;
          },
      },
      model);
}

int cmd_fit(const Options& o, std::ostream& out, std::ostream& err) {
  const auto& types = known_model_types();
  if (std::find(types.begin(), types.end(), o.model_type) == types.end())
    throw UsageError("unknown model type '" + o.model_type + "'");
  if (o.structure != "chow-liu" && o.structure != "none")
    throw UsageError("--structure must be 'chow-liu' or 'none'");
  if (!o.family.empty()) {
    try {
      parse_family(o.family);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  const FitConfig config = make_config(o.train);

  Model model = o.init_model.empty() ? fit_fresh(o, config, out, err)
                                     : fit_from(load_model(o.init_model), o, config, out);
  out << "model: " << model_type(model) << '\n';
  save_model(o.out_path, model);
  out << "wrote: " << o.out_path << '\n';
  return 0;
}

// Row-wise predict/score over a CSV file.
template <class RowFn>
double for_each_row(const std::string& path, const CsvSchema& schema, std::size_t expected_dim,
                    RowFn&& fn) {
  CsvSource source(path, schema, 65536);
  if (source.dim() != expected_dim)
    throw Error(path + ": rows have " + std::to_string(source.dim()) + " feature columns, the model expects " +
                std::to_string(expected_dim));
  double total = 0.0;
  while (auto b = source.next()) {
    const DataView& v = b->view;
    validate_rows(v);
    for (std::size_t i = 0; i < v.size(); ++i) total += fn(v, i);
  }
  return total;
}

void print_probs(std::ostream& out, const std::vector<double>& p) {
  for (std::size_t j = 0; j < p.size(); ++j) out << (j ? "," : "") << format_double(p[j]);
  out << '\n';
}

int cmd_predict(const Options& o, bool score, std::ostream& out) {
  const Model model = load_model(o.model_path);
  auto total_line = [&](double total) { out << "total log-likelihood: " << format_double(total) << '\n'; };

  if (const auto* h = std::get_if<HiddenMarkovModel>(&model)) {
    SequenceFileSource source(o.data, 64);
    double total = 0.0;
    while (auto b = source.next()) {
      for (std::size_t s = 0; s < b->view.size(); ++s) {
        const Sequence& seq = b->view.sequence(s);
        const double ll = h->log_probability(seq);
        total += b->view.weight(s) * ll;
        if (score) {
          out << format_double(ll) << '\n';
          continue;
        }
        const auto path = h->viterbi(seq);
        for (std::size_t t = 0; t < path.path.size(); ++t) out << (t ? " " : "") << path.path[t];
        out << '\t' << format_double(path.log_joint) << '\n';
      }
    }
    total_line(total);
    return 0;
  }
  if (const auto* m = std::get_if<MarkovChain>(&model)) {
    if (!score) throw Error("predict is not defined for MarkovChain models; use score");
    SequenceFileSource source(o.data, 1024);
    double total = 0.0;
    while (auto b = source.next())
      for (std::size_t s = 0; s < b->view.size(); ++s) {
        const double ll = m->log_probability(b->view.sequence(s));
        total += b->view.weight(s) * ll;
        out << format_double(ll) << '\n';
      }
    total_line(total);
    return 0;
  }

  const CsvSchema schema = schema_for(o.data, o.labels, o.weights);
  std::size_t correct = 0, labeled = 0;
  auto accuracy_line = [&] {
    if (labeled > 0)
      out << "accuracy: " << format_double(static_cast<double>(correct) / static_cast<double>(labeled)) << '\n';
  };

  return std::visit(
      Overloaded{
          [&](const Distribution& d) -> int {
            if (!score) throw Error("predict is not defined for distributions; use score");
            total_line(for_each_row(o.data, schema, d.dim(), [&](const DataView& v, std::size_t i) {
              const double lp = d.log_probability(v.row(i));
              out << format_double(lp) << '\n';
              return v.weight(i) * lp;
            }));
            return 0;
          },
          [&](const KMeansModel& km) -> int {
            if (score) throw Error("score is not defined for KMeans models; use predict");
            const double objective = for_each_row(o.data, schema, km.dim(), [&](const DataView& v, std::size_t i) {
              const std::size_t c = km.assign(v.row(i));
              out << c << '\n';
              return v.weight(i) * squared_distance(v.row(i), km.centroid(c));
            });
            out << "objective: " << format_double(objective) << '\n';
            return 0;
          },
          [&](const BayesClassifier& c) -> int {
            const double total = for_each_row(o.data, schema, c.dim(), [&](const DataView& v, std::size_t i) {
              const double lp = c.log_probability(v.row(i));
              if (score) {
                out << format_double(lp) << '\n';
              } else if (o.proba) {
                print_probs(out, c.predict_proba(v.row(i)));
              } else {
                const std::size_t y = c.predict(v.row(i));
                out << y << '\n';
                if (v.has_labels() && v.label(i) >= 0) {
                  ++labeled;
                  correct += static_cast<std::size_t>(v.label(i)) == y;
                }
              }
              return v.weight(i) * lp;
            });
            if (!score) accuracy_line();
            total_line(total);
            return 0;
          },
          [&](const GeneralMixtureModel& g) -> int {
            total_line(for_each_row(o.data, schema, g.dim(), [&](const DataView& v, std::size_t i) {
              const double lp = g.log_probability(v.row(i));
              if (score)
                out << format_double(lp) << '\n';
              else if (o.proba)
                print_probs(out, g.predict_proba(v.row(i)));
              else
                out << g.predict(v.row(i)) << '\n';
              return v.weight(i) * lp;
            }));
            return 0;
          },
          [&](const DiscreteBayesianNetwork& bn) -> int {
            std::size_t query = bn.size() - 1;
            if (!o.query.empty()) {
              const auto ref = column_ref(o.query);
              if (const auto* idx = std::get_if<std::size_t>(&ref)) {
                query = *idx;
              } else {
                const auto& vars = bn.variables();
                auto it = std::find_if(vars.begin(), vars.end(),
                                       [&](const Variable& var) { return var.name == o.query; });
                if (it == vars.end()) throw Error("no variable named '" + o.query + "'");
                query = static_cast<std::size_t>(it - vars.begin());
              }
              if (query >= bn.size()) throw Error("query variable out of range");
            }
            std::vector<std::optional<int>> evidence(bn.size());
            const double total = for_each_row(o.data, schema, bn.size(), [&](const DataView& v, std::size_t i) {
              const double lp = bn.log_probability(v.row(i));
              if (score) {
                out << format_double(lp) << '\n';
              } else {
                const auto row = v.row(i);
                for (std::size_t j = 0; j < bn.size(); ++j)
                  evidence[j] = j == query ? std::nullopt : std::optional<int>(static_cast<int>(row[j]));
                const auto p = bn.predict_proba(evidence, query);
                if (o.proba) {
                  print_probs(out, p);
                } else {
                  const std::size_t y = argmax(p);
                  out << y << '\n';
                  ++labeled;
                  correct += static_cast<std::size_t>(row[query]) == y;
                }
              }
              return v.weight(i) * lp;
            });
            if (!score) accuracy_line();
            total_line(total);
            return 0;
          },
          [&](const auto&) -> int { throw Error("unsupported model for this command"); },
      },
      model);
}

void write_output(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& body) {
  if (path.empty() || path == "-") {
    body(out);
    return;
  }
  std::ofstream file(path);
  if (!file) throw Error("cannot write " + path);
  body(file);
  if (!file) throw Error("write failed: " + path);
}

int cmd_generate(const Options& o, std::ostream& out) {
  Rng rng(o.train.seed);
  const std::string& p = o.preset;
  auto or_default = [](std::size_t v, std::size_t d) { return v ? v : d; };
  if (p == "ellipses") {
    EllipsesConfig c;
    c.n = o.n;
    c.dim = or_default(o.dim, 10);
    c.sigma = o.sigma > 0 ? o.sigma : 2.0;
    c.labeled_fraction = o.labeled_fraction;
    if (!(c.labeled_fraction >= 0.0 && c.labeled_fraction <= 1.0))
      throw UsageError("--labeled-fraction must lie in [0, 1]");
    const DataBatch data = generate_ellipses(c, rng);
    write_output(o.out_path, out, [&](std::ostream& s) { write_csv(s, data); });
  } else if (p == "blobs") {
    const DataBatch data = generate_blobs(o.n, o.k, or_default(o.dim, 2), o.sigma > 0 ? o.sigma : 1.0, rng);
    write_output(o.out_path, out, [&](std::ostream& s) { write_csv(s, data); });
  } else if (p == "hmm-bench" || p == "hmm2") {
    const bool bench = p == "hmm-bench";
    const HiddenMarkovModel model =
        bench ? random_gaussian_hmm(or_default(o.states, 10), or_default(o.dim, 10), rng)
              : two_state_hmm();
    const auto data = sample_hmm(model, or_default(o.sequences, bench ? 100 : 50),
                                 or_default(o.length, bench ? 1000 : 200), rng);
    write_output(o.out_path, out, [&](std::ostream& s) { write_sequences(s, data); });
  } else if (p == "markov") {
    const auto chain = random_chain(o.order, or_default(o.alphabet, 4), rng);
    const auto data = sample_chain(chain, or_default(o.sequences, 100), or_default(o.length, 50), rng);
    write_output(o.out_path, out, [&](std::ostream& s) { write_sequences(s, data); });
  } else if (p == "bayesnet") {
    const auto net = random_tree_network(o.variables, o.cardinality, rng);
    const DataBatch data = sample_network(net, o.n, rng);
    write_output(o.out_path, out, [&](std::ostream& s) { write_csv(s, data); });
  } else if (p == "gaussian" || p == "exponential" || p == "poisson" || p == "categorical") {
    const std::size_t d = or_default(o.dim, 1);
    std::vector<Distribution> parts;
    for (std::size_t j = 0; j < d; ++j) {
      if (p == "gaussian") parts.emplace_back(UnivariateGaussian(1.0, 4.0));
      if (p == "exponential") parts.emplace_back(Exponential(2.0));
      if (p == "poisson") parts.emplace_back(Poisson(3.0));
      if (p == "categorical") parts.emplace_back(Categorical(random_simplex(or_default(o.categories, 4), rng)));
    }
    const DataBatch data = sample_rows(IndependentComponents(std::move(parts)), o.n, rng);
    write_output(o.out_path, out, [&](std::ostream& s) { write_csv(s, data); });
  } else {
    throw UsageError("unknown preset '" + p + "'");
  }
  return 0;
}

int cmd_benchmark(const Options& o, std::ostream& out) {
  std::vector<std::size_t> jobs;
  {
    std::stringstream in(o.jobs_list);
    std::string part;
    while (std::getline(in, part, ',')) {
      const auto v = parse_count(part, "--jobs");
      if (!v) throw UsageError("--jobs takes a comma-separated list of positive integers");
      jobs.push_back(*v);
    }
  }
  if (jobs.empty()) throw UsageError("--jobs is empty");
  FitConfig config = make_config(o.train);

  Rng rng(o.train.seed);
  const std::string& type = o.model_type;
  const std::size_t states = o.states ? o.states : 10;
  DataBatch rows;
  SequenceBatch seqs;
  if (type == "gaussian-nb" || type == "naive-bayes" || type == "gaussian") {
    EllipsesConfig c;
    c.n = o.n;
    c.dim = o.dim ? o.dim : 10;
    rows = generate_ellipses(c, rng);
  } else if (type == "gmm") {
    rows = generate_blobs(o.n, o.k, o.dim ? o.dim : 2, 1.0, rng);
  } else if (type == "hmm") {
    seqs = sample_hmm(random_gaussian_hmm(states, o.dim ? o.dim : 10, rng), o.sequences ? o.sequences : 100,
                      o.length ? o.length : 1000, rng);
  } else {
    throw UsageError("benchmark supports gaussian-nb, gaussian, gmm and hmm");
  }

  out << "jobs  seconds  speedup\n";
  double baseline = 0.0;
  for (std::size_t j : jobs) {
    config.worker_count = j;
    const auto start = std::chrono::steady_clock::now();
    if (type == "hmm") {
      MemorySequenceSource source(seqs, config.batch_size);
      FamilySpec spec;
      spec.family = Family::diagonal_gaussian;
      hmm_from_samples(spec, states, source, config);
    } else {
      MemorySource source(rows, config.batch_size);
      if (type == "gmm") {
        FamilySpec spec;
        spec.family = Family::multivariate_gaussian;
        mixture_from_samples(spec, o.k, source, config);
      } else if (type == "gaussian") {
        Distribution d = blank_distribution(FamilySpec{}, rows.dim);
        fit(d, source, config);
      } else {
        fit_classifier(FamilySpec{}, 0, source, config);
      }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (baseline == 0.0) baseline = secs;
    std::ostringstream line;
    line << std::left << std::setw(6) << j << std::setw(9) << std::fixed << std::setprecision(4) << secs
         << std::setprecision(2) << baseline / secs;
    out << line.str() << '\n';
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Probabilistic models trained from additive sufficient statistics"};
  app.name("sufstat");
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset");
  gen->add_option("--preset", o.preset,
                  "ellipses, blobs, hmm-bench, hmm2, markov, bayesnet, gaussian, exponential, poisson, categorical")
      ->required();
  gen->add_option("--n", o.n, "Rows");
  gen->add_option("--dim", o.dim, "Features per row");
  gen->add_option("--k", o.k, "Clusters (blobs)");
  gen->add_option("--states", o.states, "Hidden states (hmm-bench)");
  gen->add_option("--sequences", o.sequences, "Sequences (hmm-bench, hmm2, markov)");
  gen->add_option("--length", o.length, "Sequence length");
  gen->add_option("--order", o.order, "Markov chain order");
  gen->add_option("--alphabet", o.alphabet, "Markov chain alphabet size");
  gen->add_option("--variables", o.variables, "Bayesian network variables");
  gen->add_option("--cardinality", o.cardinality, "Values per Bayesian network variable");
  gen->add_option("--categories", o.categories, "Categories (categorical)");
  gen->add_option("--labeled-fraction", o.labeled_fraction, "Fraction of ellipse rows keeping their label");
  gen->add_option("--sigma", o.sigma, "Noise standard deviation (ellipses, blobs)");
  gen->add_option("--seed", o.train.seed, "Random seed");
  gen->add_option("--out,-o", o.out_path, "Output file (default: stdout)");

  auto* fitc = app.add_subcommand("fit", "Train a model and write its document");
  fitc->add_option("model-type", o.model_type, "Model type")->required();
  fitc->add_option("data", o.data, "CSV file, or sequence file for hmm and markov")->required();
  fitc->add_option("--out,-o", o.out_path, "Model document to write")->required();
  fitc->add_option("--init-model", o.init_model, "Start from this model document instead of from_samples");
  fitc->add_option("--k", o.k, "Components (gmm, kmeans)");
  fitc->add_option("--states", o.states, "Hidden states (hmm, default 2)");
  fitc->add_option("--order", o.order, "Markov chain order");
  fitc->add_option("--alphabet", o.alphabet, "Markov chain alphabet (default: from the data)");
  fitc->add_option("--classes", o.classes, "Classes (default: largest label + 1)");
  fitc->add_option("--categories", o.categories, "Categories of categorical features (default: from the data)");
  fitc->add_option("--pseudocount", o.pseudocount, "Categorical pseudocount");
  fitc->add_option("--family", o.family, "gaussian, mvn, mvn-diag, categorical, exponential or poisson");
  fitc->add_option("--labels", o.labels, "Label column (name or index); -1 marks unlabelled rows");
  fitc->add_option("--weights", o.weights, "Weight column (name or index)");
  fitc->add_option("--structure", o.structure, "bayesnet structure: chow-liu or none");
  add_train_flags(fitc, o.train);

  auto add_apply = [&](const char* name, const char* help) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("model", o.model_path, "Model document")->required();
    cmd->add_option("data", o.data, "CSV file, or sequence file for hmm and markov")->required();
    cmd->add_option("--labels", o.labels, "Label column (name or index)");
    cmd->add_option("--weights", o.weights, "Weight column (name or index)");
    return cmd;
  };
  auto* pred = add_apply("predict", "One prediction per row, then the total log-likelihood");
  pred->add_flag("--proba", o.proba, "Print posterior probabilities instead of the argmax");
  pred->add_option("--query", o.query, "bayesnet: variable to predict (default: the last)");
  auto* scorec = add_apply("score", "One log-probability per row, then the total");

  auto* bench = app.add_subcommand("benchmark", "Time fits on generated data for several worker counts");
  bench->add_option("model-type", o.model_type, "gaussian-nb, gaussian, gmm or hmm")->required();
  bench->add_option("--jobs", o.jobs_list, "Comma-separated worker counts");
  bench->add_option("--n", o.n, "Rows");
  bench->add_option("--dim", o.dim, "Features");
  bench->add_option("--k", o.k, "Components (gmm)");
  bench->add_option("--states", o.states, "States (hmm)");
  bench->add_option("--sequences", o.sequences, "Sequences (hmm)");
  bench->add_option("--length", o.length, "Sequence length (hmm)");
  bench->add_option("--batch-size", o.train.batch_size, "Rows per batch, or 'all'");
  bench->add_option("--max-iterations", o.train.max_iterations, "EM iteration budget");
  bench->add_option("--stop-threshold", o.train.stop_threshold, "EM stop threshold");
  bench->add_option("--seed", o.train.seed, "Random seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    if (!app.get_subcommands().empty()) err << "run with --help for usage\n";
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_generate(o, out);
    if (fitc->parsed()) return cmd_fit(o, out, err);
    if (pred->parsed()) return cmd_predict(o, false, out);
    if (scorec->parsed()) return cmd_predict(o, true, out);
    if (bench->parsed()) return cmd_benchmark(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace sufstat
