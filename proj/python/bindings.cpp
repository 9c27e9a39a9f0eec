#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "sufstat/bayesnet.hpp"
#include "sufstat/classifiers.hpp"
#include "sufstat/cli.hpp"
#include "sufstat/error.hpp"
#include "sufstat/hmm.hpp"
#include "sufstat/kmeans.hpp"
#include "sufstat/markov_chain.hpp"
#include "sufstat/mixture.hpp"
#include "sufstat/serialize.hpp"

namespace py = pybind11;
using namespace sufstat;

namespace {

using Rows = py::array_t<double, py::array::c_style | py::array::forcecast>;

template <class... F>
struct Overloaded : F... {
  using F::operator()...;
};
template <class... F>
Overloaded(F...) -> Overloaded<F...>;

DataBatch to_batch(const Rows& x, std::optional<std::vector<double>> weights = std::nullopt,
                   std::optional<std::vector<int>> labels = std::nullopt) {
  if (x.ndim() != 1 && x.ndim() != 2) throw Error("rows must be a 1-d or 2-d array");
  const auto n = static_cast<std::size_t>(x.shape(0));
  const std::size_t d = x.ndim() == 2 ? static_cast<std::size_t>(x.shape(1)) : 1;
  DataBatch b(d);
  b.values.assign(x.data(), x.data() + n * d);
  b.weights = weights ? std::move(*weights) : std::vector<double>(n, 1.0);
  if (b.weights.size() != n) throw Error("weights must have one entry per row");
  if (labels) {
    if (labels->size() != n) throw Error("labels must have one entry per row");
    b.labels = std::move(*labels);
  }
  return b;
}

Sequence to_sequence(const Rows& x) {
  Sequence s;
  s.dim = x.ndim() == 2 ? static_cast<std::size_t>(x.shape(1)) : 1;
  s.values.assign(x.data(), x.data() + x.size());
  return s;
}

SequenceBatch to_sequences(const std::vector<Rows>& seqs) {
  SequenceBatch b;
  for (const auto& s : seqs) b.add(to_sequence(s));
  return b;
}

FitConfig make_config(std::optional<std::size_t> batch_size, std::optional<std::size_t> batches_per_epoch,
                      std::size_t max_iterations, double stop_threshold, double inertia, std::size_t jobs,
                      std::uint64_t seed) {
  FitConfig c;
  c.batch_size = batch_size;
  c.batches_per_epoch = batches_per_epoch;
  c.max_iterations = max_iterations;
  c.stop_threshold = stop_threshold;
  c.inertia = inertia;
  c.worker_count = jobs;
  c.rng_seed = seed;
  c.validate();
  return c;
}

py::dict report_dict(const FitReport& r) {
  py::dict d;
  d["log_likelihood"] = r.log_likelihood;
  d["iterations"] = r.iterations_run;
  d["improvement_at_stop"] = r.improvement_at_stop;
  return d;
}

struct PyModel {
  Model model;

  std::string type() const { return model_type(model); }
  std::string to_json() const { return serialize(model); }

  std::vector<double> log_probability(const Rows& x) const {
    const DataBatch b = to_batch(x);
    std::vector<double> out;
    for (std::size_t i = 0; i < b.size(); ++i) {
      const auto row = b.row(i);
      out.push_back(std::visit(
          Overloaded{
              [&](const KMeansModel&) -> double { throw Error("KMeans has no log-probability"); },
              [&](const HiddenMarkovModel&) -> double { throw Error("use sequence_log_probability for HMMs"); },
              [&](const MarkovChain&) -> double { throw Error("use sequence_log_probability for Markov chains"); },
              [&](const DiscreteBayesianNetwork& m) { return m.log_probability(row); },
              [&](const auto& m) { return m.log_probability(row); },
          },
          model));
    }
    return out;
  }

  std::vector<std::size_t> predict(const Rows& x) const {
    const DataBatch b = to_batch(x);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < b.size(); ++i) {
      const auto row = b.row(i);
      out.push_back(std::visit(
          Overloaded{
              [&](const KMeansModel& m) { return m.assign(row); },
              [&](const BayesClassifier& m) { return m.predict(row); },
              [&](const GeneralMixtureModel& m) { return m.predict(row); },
              [&](const auto&) -> std::size_t { throw Error("predict needs a classifier, mixture or k-means model"); },
          },
          model));
    }
    return out;
  }

  std::vector<std::vector<double>> predict_proba(const Rows& x) const {
    const DataBatch b = to_batch(x);
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < b.size(); ++i) {
      const auto row = b.row(i);
      out.push_back(std::visit(
          Overloaded{
              [&](const BayesClassifier& m) { return m.predict_proba(row); },
              [&](const GeneralMixtureModel& m) { return m.predict_proba(row); },
              [&](const auto&) -> std::vector<double> { throw Error("predict_proba needs a classifier or mixture"); },
          },
          model));
    }
    return out;
  }

  double sequence_log_probability(const Rows& seq) const {
    if (const auto* h = std::get_if<HiddenMarkovModel>(&model)) return h->log_probability(to_sequence(seq));
    if (const auto* m = std::get_if<MarkovChain>(&model)) return m->log_probability(to_sequence(seq));
    throw Error("sequence_log_probability needs an HMM or Markov chain");
  }

  const HiddenMarkovModel& hmm() const {
    if (const auto* h = std::get_if<HiddenMarkovModel>(&model)) return *h;
    throw Error("this model is not an HMM");
  }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Probabilistic models trained from additive sufficient statistics";
  py::register_exception<Error>(m, "SufstatError", PyExc_ValueError);

  py::class_<PyModel>(m, "Model")
      .def_property_readonly("type", &PyModel::type)
      .def("to_json", &PyModel::to_json)
      .def_static("from_json", [](const std::string& text) { return PyModel{deserialize(text)}; })
      .def("log_probability", &PyModel::log_probability, py::arg("rows"))
      .def("predict", &PyModel::predict, py::arg("rows"))
      .def("predict_proba", &PyModel::predict_proba, py::arg("rows"))
      .def("sequence_log_probability", &PyModel::sequence_log_probability, py::arg("sequence"))
      .def("viterbi",
           [](const PyModel& self, const Rows& seq) {
             const auto r = self.hmm().viterbi(to_sequence(seq));
             return py::make_tuple(r.path, r.log_joint);
           },
           py::arg("sequence"))
      .def("posterior",
           [](const PyModel& self, const Rows& seq) -> Eigen::MatrixXd {
             return self.hmm().predict_proba(to_sequence(seq));
           },
           py::arg("sequence"))
      .def("__repr__", [](const PyModel& self) { return "<sufstat.Model " + self.type() + ">"; });

#define SUFSTAT_CONFIG_ARGS                                                                       \
  py::arg("batch_size") = py::none(), py::arg("batches_per_epoch") = py::none(),                  \
  py::arg("max_iterations") = 100, py::arg("stop_threshold") = 0.1, py::arg("inertia") = 0.0,     \
  py::arg("jobs") = 1, py::arg("seed") = 0

  m.def(
      "fit_distribution",
      [](const std::string& family, const Rows& x, std::optional<std::vector<double>> weights,
         std::optional<std::size_t> batch_size, std::optional<std::size_t> bpe, std::size_t max_it, double thr,
         double inertia, std::size_t jobs, std::uint64_t seed) {
        const DataBatch b = to_batch(x, std::move(weights));
        const FitConfig c = make_config(batch_size, bpe, max_it, thr, inertia, jobs, seed);
        FamilySpec spec;
        spec.family = parse_family(family);
        if (spec.family == Family::categorical) {
          double largest = 0.0;
          for (double v : b.values) largest = std::max(largest, v);
          spec.categories = static_cast<std::size_t>(largest) + 1;
        }
        Distribution d = blank_distribution(spec, b.dim);
        py::gil_scoped_release release;
        MemorySource source(b, c.batch_size);
        fit(d, source, c);
        return PyModel{d};
      },
      py::arg("family"), py::arg("rows"), py::arg("weights") = py::none(), SUFSTAT_CONFIG_ARGS);

  m.def(
      "fit_kmeans",
      [](const Rows& x, std::size_t k, std::size_t max_iterations, std::uint64_t seed) {
        const DataBatch b = to_batch(x);
        FitConfig c;
        c.max_iterations = max_iterations;
        c.rng_seed = seed;
        const auto res = lloyd_fit(b.view(), k, c);
        return py::make_tuple(PyModel{res.model}, res.objective);
      },
      py::arg("rows"), py::arg("k"), py::arg("max_iterations") = 10, py::arg("seed") = 0);

  m.def(
      "fit_mixture",
      [](const Rows& x, std::size_t k, const std::string& family, std::optional<std::vector<double>> weights,
         std::optional<std::size_t> batch_size, std::optional<std::size_t> bpe, std::size_t max_it, double thr,
         double inertia, std::size_t jobs, std::uint64_t seed) {
        const DataBatch b = to_batch(x, std::move(weights));
        const FitConfig c = make_config(batch_size, bpe, max_it, thr, inertia, jobs, seed);
        FamilySpec spec;
        spec.family = parse_family(family);
        py::gil_scoped_release release;
        MemorySource source(b, c.batch_size);
        auto res = mixture_from_samples(spec, k, source, c);
        py::gil_scoped_acquire acquire;
        return py::make_tuple(PyModel{res.model}, report_dict(res.report));
      },
      py::arg("rows"), py::arg("k"), py::arg("family") = "mvn", py::arg("weights") = py::none(),
      SUFSTAT_CONFIG_ARGS);

  m.def(
      "fit_classifier",
      [](const Rows& x, std::vector<int> labels, const std::string& family, std::size_t classes,
         std::optional<std::size_t> batch_size, std::optional<std::size_t> bpe, std::size_t max_it, double thr,
         double inertia, std::size_t jobs, std::uint64_t seed) {
        const DataBatch b = to_batch(x, std::nullopt, std::move(labels));
        const FitConfig c = make_config(batch_size, bpe, max_it, thr, inertia, jobs, seed);
        FamilySpec spec;
        spec.family = parse_family(family);
        py::gil_scoped_release release;
        MemorySource source(b, c.batch_size);
        auto res = fit_classifier(spec, classes, source, c);
        py::gil_scoped_acquire acquire;
        py::dict report = report_dict(res.report);
        report["semi_supervised"] = res.semi_supervised;
        report["warnings"] = res.warnings;
        return py::make_tuple(PyModel{res.model}, report);
      },
      py::arg("rows"), py::arg("labels"), py::arg("family") = "gaussian", py::arg("classes") = 0,
      SUFSTAT_CONFIG_ARGS);

  m.def(
      "fit_hmm",
      [](const std::vector<Rows>& seqs, std::size_t states, const std::string& family,
         std::optional<std::size_t> batch_size, std::optional<std::size_t> bpe, std::size_t max_it, double thr,
         double inertia, std::size_t jobs, std::uint64_t seed) {
        const SequenceBatch b = to_sequences(seqs);
        const FitConfig c = make_config(batch_size, bpe, max_it, thr, inertia, jobs, seed);
        FamilySpec spec;
        spec.family = parse_family(family);
        py::gil_scoped_release release;
        MemorySequenceSource source(b, c.batch_size);
        auto res = hmm_from_samples(spec, states, source, c);
        py::gil_scoped_acquire acquire;
        return py::make_tuple(PyModel{res.model}, report_dict(res.report));
      },
      py::arg("sequences"), py::arg("states"), py::arg("family") = "gaussian", SUFSTAT_CONFIG_ARGS);

  m.def(
      "fit_markov_chain",
      [](const std::vector<Rows>& seqs, std::size_t order, std::optional<std::size_t> alphabet) {
        const SequenceBatch b = to_sequences(seqs);
        MemorySequenceSource source(b);
        return PyModel{fit_chain(order, alphabet, source, FitConfig{})};
      },
      py::arg("sequences"), py::arg("order") = 1, py::arg("alphabet") = py::none());

  m.def(
      "fit_bayesnet",
      [](const Rows& x, std::optional<Structure> structure) {
        const DataBatch b = to_batch(x);
        MemorySource source(b);
        auto vars = infer_variables(source);
        if (structure) return PyModel{fit_cpts(std::move(vars), std::move(*structure), source, FitConfig{})};
        return PyModel{bayesnet_from_samples(std::move(vars), source, FitConfig{})};
      },
      py::arg("rows"), py::arg("structure") = py::none(),
      "Chow-Liu tree plus CPTs, or CPTs for the given parent lists");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line in-process; returns (exit code, stdout, stderr)");
}
