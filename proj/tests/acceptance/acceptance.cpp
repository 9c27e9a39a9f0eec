// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "oracles/oracles.hpp"
#include "sufstat/bayesnet.hpp"
#include "sufstat/classifiers.hpp"
#include "sufstat/cli.hpp"
#include "sufstat/distributions.hpp"
#include "sufstat/engine.hpp"
#include "sufstat/generate.hpp"
#include "sufstat/hmm.hpp"
#include "sufstat/io.hpp"
#include "sufstat/kmeans.hpp"
#include "sufstat/markov_chain.hpp"
#include "sufstat/mixture.hpp"
#include "sufstat/serialize.hpp"

using namespace sufstat;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  // Records a failed check; the first few are kept for the report.
  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass || detail.size() < 400) detail += (detail.empty() ? "" : "; ") + what;
    pass = false;
  }
};

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

bool rel_close(double a, double b, double tol) {
  if (a == b) return true;
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// Every number of a model's document, in document order.
void collect_numbers(const nlohmann::ordered_json& j, std::vector<double>& out) {
  if (j.is_number()) {
    out.push_back(j.get<double>());
  } else if (j.is_array() || j.is_object()) {
    for (const auto& v : j) collect_numbers(v, out);
  }
}

std::vector<double> parameters(const Model& m) {
  std::vector<double> out;
  collect_numbers(nlohmann::ordered_json::parse(serialize(m))["payload"], out);
  return out;
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max({1.0, std::abs(a[i]), std::abs(b[i])}));
  }
  return worst;
}

double max_rel_diff(std::span<const double> a, std::span<const double> b) {
  return max_rel_diff(std::vector<double>(a.begin(), a.end()), std::vector<double>(b.begin(), b.end()));
}

template <class M>
double accuracy(const M& model, const DataBatch& data) {
  std::size_t correct = 0, total = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i] < 0) continue;
    ++total;
    correct += model.predict(data.row(i)) == static_cast<std::size_t>(data.labels[i]);
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

bool non_decreasing(const std::vector<double>& ll, double tol) {
  for (std::size_t i = 1; i < ll.size(); ++i)
    if (ll[i] < ll[i - 1] - tol) return false;
  return true;
}

DataBatch labelled_only(const DataBatch& data) {
  DataBatch out(data.dim);
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.labels[i] >= 0) out.add_row(data.row(i), data.weights[i], data.labels[i]);
  return out;
}

DiscreteBayesianNetwork random_dag(std::size_t n, std::size_t max_card, std::size_t max_parents, Rng& rng) {
  std::uniform_int_distribution<std::size_t> card(2, max_card);
  std::vector<Variable> vars;
  for (std::size_t v = 0; v < n; ++v) vars.push_back({"v" + std::to_string(v), card(rng)});
  Structure parents(n);
  std::vector<std::vector<double>> tables;
  for (std::size_t v = 0; v < n; ++v) {
    std::vector<std::size_t> pool(v);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t take = std::min<std::size_t>(pool.size(), rng() % (max_parents + 1));
    parents[v].assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
    std::size_t rows = 1;
    for (std::size_t p : parents[v]) rows *= vars[p].cardinality;
    std::vector<double> table;
    for (std::size_t r = 0; r < rows; ++r) {
      const auto row = random_simplex(vars[v].cardinality, rng);
      table.insert(table.end(), row.begin(), row.end());
    }
    tables.push_back(std::move(table));
  }
  return DiscreteBayesianNetwork(vars, parents, tables);
}

HiddenMarkovModel random_hmm(std::size_t n, bool categorical, Rng& rng) {
  std::uniform_real_distribution<double> mean(-3, 3), var(0.3, 3);
  std::vector<double> trans;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = random_simplex(n, rng);
    trans.insert(trans.end(), row.begin(), row.end());
  }
  std::vector<Distribution> emissions;
  for (std::size_t j = 0; j < n; ++j) {
    if (categorical)
      emissions.push_back(Categorical(random_simplex(3, rng)));
    else
      emissions.push_back(UnivariateGaussian(mean(rng), var(rng)));
  }
  return HiddenMarkovModel(random_simplex(n, rng), trans, emissions);
}

MultivariateGaussian random_mvn(std::size_t d, Rng& rng) {
  std::normal_distribution<double> nd(0, 1);
  Eigen::MatrixXd a(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = nd(rng);
  Eigen::MatrixXd cov = a * a.transpose() + Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  cov = 0.5 * (cov + cov.transpose()).eval();
  std::vector<double> mean(d), flat(d * d);
  for (auto& m : mean) m = nd(rng);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) flat[i * d + j] = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return MultivariateGaussian(mean, flat);
}

// ---------------------------------------------------------------------------

struct EllipsesSplit {
  DataBatch train;
  DataBatch validation;
};

EllipsesSplit ellipses_split() {
  EllipsesConfig train;
  train.n = 20000;
  train.dim = 10;
  train.separation = 1.0;
  train.sigma = 2.0;
  train.labeled_fraction = 0.01;
  EllipsesConfig validation = train;
  validation.n = 5000;
  validation.labeled_fraction = 1.0;
  Rng a(2024), b(4048);
  return {generate_ellipses(train, a), generate_ellipses(validation, b)};
}

FitConfig ten_em_iterations() {
  FitConfig c;
  c.max_iterations = 10;
  c.stop_threshold = 0.0;
  return c;
}

Outcome semi_supervised_reproduction() {
  Outcome o;
  const auto data = ellipses_split();
  for (const auto& [name, family] :
       {std::pair{"naive", Family::gaussian}, std::pair{"full-covariance", Family::multivariate_gaussian}}) {
    MemorySource source(data.train);
    const auto start = std::chrono::steady_clock::now();
    const auto fit = fit_semisupervised(FamilySpec{family}, 2, source, ten_em_iterations());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double acc = accuracy(fit.model, data.validation);
    o.detail += std::string(o.detail.empty() ? "" : ", ") + name + " " + fmt(acc) + " in " + fmt(secs, 2) +
                " s (" + std::to_string(fit.report.iterations_run) + " EM iterations)";
    o.require(fit.semi_supervised, std::string(name) + " fit did not run EM");
    o.require(acc > 0.75, std::string(name) + " accuracy " + fmt(acc) + " <= 0.75");
    o.require(secs < 10.0, std::string(name) + " took " + fmt(secs) + " s");
  }
  return o;
}

Outcome supervised_vs_chance() {
  Outcome o;
  const auto data = ellipses_split();
  const DataBatch labelled = labelled_only(data.train);
  MemorySource lab_source(labelled), semi_source(data.train);
  const auto sup = fit_supervised(FamilySpec{}, 2, lab_source, FitConfig{});
  const auto semi = fit_semisupervised(FamilySpec{}, 2, semi_source, ten_em_iterations());
  const double a_sup = accuracy(sup.model, data.validation);
  const double a_semi = accuracy(semi.model, data.validation);
  o.detail = "labelled-only " + fmt(a_sup) + " on " + std::to_string(labelled.size()) + " rows, semi-supervised " +
             fmt(a_semi);
  o.require(a_sup > 0.6, "supervised accuracy " + fmt(a_sup) + " <= 0.6");
  o.require(a_semi >= a_sup - 0.02, "semi-supervised trails supervised by more than 0.02");
  return o;
}

Outcome out_of_core_equivalence() {
  Outcome o;
  EllipsesConfig ec;
  ec.n = 100000;
  ec.dim = 5;
  Rng rng(31);
  const DataBatch data = generate_ellipses(ec, rng);
  DataBatch first_column(1);
  for (std::size_t i = 0; i < data.size(); ++i) first_column.add_row(data.row(i).subspan(0, 1));

  const std::vector<BatchSize> sizes{BatchSize{1}, BatchSize{7}, BatchSize{1000}, BatchSize{}};
  double worst = 0.0;
  std::vector<std::vector<double>> reference(3);
  for (const auto& bs : sizes) {
    FitConfig c;
    c.batch_size = bs;
    MemorySource nb_source(data, bs);
    const auto nb = fit_supervised(FamilySpec{}, 2, nb_source, c);
    MemorySource col_source(first_column, bs);
    Distribution uni = UnivariateGaussian();
    fit(uni, col_source, c);
    MemorySource mvn_source(data, bs);
    Distribution mvn = MultivariateGaussian::standard(5, CovarianceMode::full);
    fit(mvn, mvn_source, c);
    const std::vector<std::vector<double>> got{parameters(nb.model), parameters(uni), parameters(mvn)};
    for (std::size_t m = 0; m < 3; ++m) {
      if (reference[m].empty()) reference[m] = got[m];
      worst = std::max(worst, max_rel_diff(reference[m], got[m]));
    }
  }
  o.require(worst <= 1e-9, "single-pass fits differ by " + fmt(worst));

  // Mixture EM: batches of 1000 with one update per pass against the
  // in-memory iterates.
  Rng blob_rng(32);
  const DataBatch blobs = generate_blobs(100000, 3, 3, 1.5, blob_rng);
  MemorySource init_source(blobs);
  FitConfig init_config;
  init_config.max_iterations = 1;
  GeneralMixtureModel whole = mixture_from_samples(FamilySpec{Family::multivariate_gaussian}, 3, init_source,
                                                   init_config)
                                  .model;
  GeneralMixtureModel batched = whole;
  FitConfig one;
  one.max_iterations = 1;
  FitConfig one_batched = one;
  one_batched.batch_size = 1000;
  MemorySource whole_source(blobs), batched_source(blobs, 1000);
  double em_worst = 0.0;
  for (int it = 0; it < 10; ++it) {
    fit(whole, whole_source, one);
    fit(batched, batched_source, one_batched);
    em_worst = std::max(em_worst, max_rel_diff(parameters(whole), parameters(batched)));
  }
  o.require(em_worst <= 1e-9, "mixture EM iterates differ by " + fmt(em_worst));
  o.detail = (o.pass ? "" : o.detail + "; ") + "single-pass max rel diff " + fmt(worst, 3) +
             " over batch sizes 1/7/1000/all, EM max rel diff " + fmt(em_worst, 3) + " over 10 iterations";
  return o;
}

// Cycles over one in-memory block `repeats` times, so the logical dataset
// can exceed what is held in memory.
class RepeatingSource final : public BatchSource<DataView> {
 public:
  RepeatingSource(const DataBatch& block, std::size_t batch_size, std::size_t repeats)
      : inner_(block, batch_size), repeats_(repeats) {}
  void rewind() override {
    inner_.rewind();
    pass_ = 0;
  }
  std::optional<LoadedBatch<DataView>> next() override {
    while (pass_ < repeats_) {
      if (auto b = inner_.next()) return b;
      inner_.rewind();
      ++pass_;
    }
    return std::nullopt;
  }

 private:
  MemorySource inner_;
  std::size_t repeats_;
  std::size_t pass_ = 0;
};

Outcome parallel_equivalence() {
  Outcome o;
  EllipsesConfig ec;
  ec.n = 200000;
  ec.dim = 10;
  Rng rng(41);
  const DataBatch data = generate_ellipses(ec, rng);
  BayesClassifier nb = BayesClassifier::blank(FamilySpec{}, 2, 10);
  const Distribution mvn = MultivariateGaussian::standard(10, CovarianceMode::full);
  Rng mix_rng(42);
  std::vector<Distribution> comps;
  for (int j = 0; j < 3; ++j) comps.push_back(random_mvn(10, mix_rng));
  const GeneralMixtureModel gmm({0.2, 0.3, 0.5}, comps);

  double worst = 0.0;
  bool bitwise = true;
  auto check = [&](const auto& model) {
    for (const BatchSize bs : {BatchSize{10000}, BatchSize{}}) {
      FitConfig serial;
      serial.batch_size = bs;
      MemorySource source(data, bs);
      const auto base = parallel_summarize(model, source, serial);
      for (std::size_t jobs : {1u, 2u, 4u}) {
        FitConfig c = serial;
        c.worker_count = jobs;
        const auto a = parallel_summarize(model, source, c);
        const auto b = parallel_summarize(model, source, c);
        worst = std::max(worst, max_rel_diff(a.values(), base.values()));
        worst = std::max(worst, max_rel_diff(std::vector<double>{a.log_likelihood(), a.total_weight()},
                                             std::vector<double>{base.log_likelihood(), base.total_weight()}));
        bitwise = bitwise && a == b;
      }
    }
  };
  check(nb);
  check(mvn);
  check(gmm);
  o.require(worst <= 1e-9, "parallel stats differ from serial by " + fmt(worst));
  o.require(bitwise, "deterministic merge gave different bits across runs");
  o.detail = "max rel diff vs serial " + fmt(worst, 3) + ", deterministic runs bitwise equal: " +
             (bitwise ? "yes" : "no");

  const unsigned cores = std::thread::hardware_concurrency();
  if (cores < 4) {
    o.detail += "; scaling check not applicable on " + std::to_string(cores) +
                " hardware thread(s), it needs >= 4";
    return o;
  }
  EllipsesConfig big;
  big.n = 300000;
  big.dim = 100;
  Rng big_rng(43);
  const DataBatch block = generate_ellipses(big, big_rng);
  RepeatingSource source(block, 100000, 10);
  auto time_fit = [&](std::size_t jobs) {
    FitConfig c;
    c.batch_size = 100000;
    c.worker_count = jobs;
    const auto start = std::chrono::steady_clock::now();
    fit_supervised(FamilySpec{}, 2, source, c);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  const double t1 = time_fit(1), t4 = time_fit(4);
  const double speedup = t1 / t4;
  o.detail += "; 3M x 100 naive Bayes fit: " + fmt(t1, 3) + " s at 1 job, " + fmt(t4, 3) + " s at 4 jobs, speedup " +
              fmt(speedup, 3);
  o.require(speedup >= 1.8, "speedup " + fmt(speedup) + " < 1.8 at 4 jobs");
  return o;
}

Outcome hmm_oracle() {
  Outcome o;
  Rng rng(51);
  std::uniform_int_distribution<std::size_t> states(1, 3), len(1, 6);
  double worst = 0.0;
  std::size_t path_mismatches = 0;
  const auto start = std::chrono::steady_clock::now();
  for (int trial = 0; trial < 200; ++trial) {
    const bool categorical = trial % 2 == 1;
    const auto model = random_hmm(states(rng), categorical, rng);
    const std::size_t T = len(rng);
    std::vector<std::vector<double>> rows;
    std::uniform_real_distribution<double> u(-4, 4);
    for (std::size_t t = 0; t < T; ++t)
      rows.push_back({categorical ? static_cast<double>(rng() % 3) : u(rng)});
    const Sequence seq = Sequence::from_rows(rows);
    const auto truth = oracle::enumerate_hmm(model, seq);
    worst = std::max(worst, std::abs(model.log_probability(seq) - truth.log_likelihood));
    const auto v = model.viterbi(seq);
    worst = std::max(worst, std::abs(v.log_joint - truth.best_log_joint));
    path_mismatches += v.path != truth.best_path;
    const auto post = model.predict_proba(seq);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t j = 0; j < model.n_states(); ++j)
        worst = std::max(worst, std::abs(post(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) -
                                         truth.marginals[t][j]));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.require(worst <= 1e-8, "max deviation " + fmt(worst));
  o.require(path_mismatches == 0, std::to_string(path_mismatches) + " Viterbi paths differ");
  o.require(secs < 30.0, "took " + fmt(secs) + " s");
  o.detail = (o.pass ? "" : o.detail + "; ") + "200 models, max deviation " + fmt(worst, 3) + ", " +
             std::to_string(path_mismatches) + " path mismatches, " + fmt(secs, 2) + " s";
  return o;
}

Outcome baum_welch_recovery() {
  Outcome o;
  Rng rng(61);
  const auto truth = two_state_hmm();
  const auto data = sample_hmm(truth, 50, 200, rng);
  MemorySequenceSource source(data);
  FitConfig c;
  c.max_iterations = 5;
  c.stop_threshold = 0.0;
  const auto fit = hmm_from_samples(FamilySpec{Family::gaussian}, 2, source, c);
  std::vector<std::pair<double, double>> states;  // (mean, self transition)
  for (std::size_t j = 0; j < 2; ++j)
    states.emplace_back(fit.model.emissions()[j].get_if<UnivariateGaussian>()->mu(), fit.model.transition(j, j));
  std::sort(states.begin(), states.end());
  o.require(std::abs(states[0].first - 0.0) < 0.2 && std::abs(states[1].first - 10.0) < 0.2,
            "means " + fmt(states[0].first) + ", " + fmt(states[1].first));
  o.require(std::abs(states[0].second - 0.9) < 0.05 && std::abs(states[1].second - 0.9) < 0.05,
            "self transitions " + fmt(states[0].second) + ", " + fmt(states[1].second));
  o.require(non_decreasing(fit.report.log_likelihood, 1e-8), "log-likelihood decreased");
  o.detail = (o.pass ? "" : o.detail + "; ") + "means " + fmt(states[0].first) + " / " + fmt(states[1].first) +
             ", self transitions " + fmt(states[0].second) + " / " + fmt(states[1].second) + ", " +
             std::to_string(fit.report.iterations_run) + " Baum-Welch iterations";
  return o;
}

Outcome em_monotonicity() {
  Outcome o;
  Rng rng(71);
  std::size_t runs = 0, violations = 0, epochs = 0;
  FitConfig c;
  c.max_iterations = 50;
  c.stop_threshold = 1e-6;
  const std::vector<Family> families{Family::gaussian, Family::multivariate_gaussian, Family::diagonal_gaussian};
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng() % 3, dim = 1 + rng() % 3;
    const DataBatch data = generate_blobs(300 + rng() % 700, k, dim, 1.0 + static_cast<double>(rng() % 30) / 10.0, rng);
    MemorySource source(data);
    FitConfig cc = c;
    cc.rng_seed = rng();
    const auto fit = mixture_from_samples(FamilySpec{families[rng() % families.size()]}, k, source, cc);
    ++runs;
    epochs += fit.report.log_likelihood.size();
    violations += !non_decreasing(fit.report.log_likelihood, 1e-8);
  }
  for (int trial = 0; trial < 50; ++trial) {
    EllipsesConfig ec;
    ec.n = 500 + rng() % 1500;
    ec.dim = 1 + rng() % 5;
    ec.labeled_fraction = 0.02 + static_cast<double>(rng() % 30) / 100.0;
    const DataBatch data = generate_ellipses(ec, rng);
    MemorySource source(data);
    const Family family = trial % 2 ? Family::multivariate_gaussian : Family::gaussian;
    const auto fit = fit_semisupervised(FamilySpec{family}, 2, source, c);
    ++runs;
    epochs += fit.report.log_likelihood.size();
    violations += !non_decreasing(fit.report.log_likelihood, 1e-8);
  }
  o.require(violations == 0, std::to_string(violations) + " trajectories decreased");
  o.detail = (o.pass ? "" : o.detail + "; ") + std::to_string(runs) + " runs, " + std::to_string(epochs) +
             " epochs, " + std::to_string(violations) + " decreasing trajectories";
  return o;
}

// Merges the stats of a random partition in random order.
template <class M, class View>
SufficientStats partitioned(const M& model, const View& view, Rng& rng) {
  const std::size_t n = view.size();
  std::vector<std::size_t> cuts{0, n};
  for (std::size_t p = 0; p < 1 + rng() % 4; ++p) cuts.push_back(rng() % (n + 1));
  std::sort(cuts.begin(), cuts.end());
  std::vector<SufficientStats> parts;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    SufficientStats s;
    if (cuts[i] < cuts[i + 1]) model.summarize(view.slice(cuts[i], cuts[i + 1]), s);
    parts.push_back(std::move(s));
  }
  std::shuffle(parts.begin(), parts.end(), rng);
  SufficientStats out;
  for (const auto& p : parts) out.merge(p);
  return out;
}

Outcome additivity() {
  Outcome o;
  Rng rng(81);
  double worst = 0.0;
  std::size_t exact_failures = 0, checks = 0;
  auto compare = [&](const SufficientStats& whole, const SufficientStats& merged, bool exact) {
    ++checks;
    if (exact) {
      exact_failures += !(std::equal(whole.values().begin(), whole.values().end(), merged.values().begin(),
                                     merged.values().end()) &&
                          whole.keyed() == merged.keyed() && whole.total_weight() == merged.total_weight());
      return;
    }
    worst = std::max(worst, max_rel_diff(whole.values(), merged.values()));
    worst = std::max(worst, max_rel_diff(std::vector<double>{whole.total_weight()},
                                         std::vector<double>{merged.total_weight()}));
  };
  std::uniform_real_distribution<double> weight(0.1, 3.0);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 50 + rng() % 200;
    auto with_weights = [&](DataBatch b, bool integer) {
      for (auto& w : b.weights) w = integer ? static_cast<double>(1 + rng() % 4) : weight(rng);
      return b;
    };
    const std::vector<std::pair<Distribution, bool>> dists{
        {UnivariateGaussian(rng() % 5, 2.0), false},
        {random_mvn(3, rng), false},
        {Categorical(random_simplex(5, rng)), true},
        {Exponential(0.5 + static_cast<double>(rng() % 3)), false},
        {Poisson(1.0 + static_cast<double>(rng() % 5)), false},
    };
    for (const auto& [dist, integer] : dists) {
      const DataBatch data = with_weights(sample_rows(dist, n, rng), integer);
      SufficientStats whole;
      dist.summarize(data.view(), whole);
      compare(whole, partitioned(dist, data.view(), rng), integer);
    }

    const auto hmm = random_gaussian_hmm(2 + rng() % 2, 2, rng);
    const auto seqs = sample_hmm(hmm, 10 + rng() % 10, 5 + rng() % 30, rng);
    SufficientStats hw;
    hmm.summarize(seqs.view(), hw);
    compare(hw, partitioned(hmm, seqs.view(), rng), false);

    const auto chain = random_chain(1 + rng() % 3, 2 + rng() % 3, rng);
    const auto cseqs = sample_chain(chain, 10 + rng() % 10, 1 + rng() % 30, rng);
    const auto blank = MarkovChain::blank(chain.order(), chain.alphabet());
    SufficientStats cw;
    blank.summarize(cseqs.view(), cw);
    compare(cw, partitioned(blank, cseqs.view(), rng), true);

    const auto net = random_dag(5, 3, 2, rng);
    const DataBatch rows = with_weights(sample_network(net, n, rng), true);
    SufficientStats nw;
    net.summarize(rows.view(), nw);
    compare(nw, partitioned(net, rows.view(), rng), true);
  }
  o.require(worst <= 1e-9, "max rel diff " + fmt(worst));
  o.require(exact_failures == 0, std::to_string(exact_failures) + " integer-count stats not exact");
  o.detail = (o.pass ? "" : o.detail + "; ") + std::to_string(checks) +
             " partitions over 8 stats types, max rel diff " + fmt(worst, 3) + ", count stats exact";
  return o;
}

Outcome chow_liu_exactness() {
  Outcome o;
  Rng rng(91);
  std::size_t mismatches = 0, missing_edge = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 4 + static_cast<std::size_t>(trial % 2);
    const auto truth = random_dag(n, 3, 2, rng);
    const DataBatch data = sample_network(truth, 200 + rng() % 2000, rng);
    std::vector<std::size_t> cards;
    for (const auto& v : truth.variables()) cards.push_back(v.cardinality);
    PairwiseCounts counts(cards);
    SufficientStats s;
    counts.summarize(data.view(), s);
    counts.from_summaries(s, 0.0);
    const auto tree = chow_liu_tree(counts);
    // Tree weights are summed in ascending order so equal edge sets give
    // identical sums.
    auto weight = [](std::vector<double> mi) {
      std::sort(mi.begin(), mi.end());
      double w = 0.0;
      for (double m : mi) w += m;
      return w;
    };
    std::vector<double> edges;
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t p : tree[v]) edges.push_back(counts.mutual_information(std::min(v, p), std::max(v, p)));
    const double got = weight(edges);
    double best = -1.0;
    for (const auto& t : oracle::spanning_trees(n)) {
      std::vector<double> mi;
      for (const auto& [i, j] : t) mi.push_back(counts.mutual_information(i, j));
      best = std::max(best, weight(mi));
    }
    mismatches += got != best;

    // Z copies X, Y is independent noise.
    std::vector<std::vector<double>> rows;
    std::uniform_int_distribution<int> value(0, 2);
    for (int i = 0; i < 300; ++i) {
      const double x = value(rng), y = value(rng);
      rows.push_back({x, y, x});
    }
    const DataBatch zx = DataBatch::from_rows(rows);
    MemorySource source(zx);
    const auto structure = chow_liu_structure({3, 3, 3}, source, FitConfig{});
    const bool has = std::find(structure[2].begin(), structure[2].end(), 0) != structure[2].end() ||
                     std::find(structure[0].begin(), structure[0].end(), 2) != structure[0].end();
    missing_edge += !has;
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " trees below the brute-force optimum");
  o.require(missing_edge == 0, std::to_string(missing_edge) + " Z=X runs without the {X,Z} edge");
  o.detail = (o.pass ? "" : o.detail + "; ") + "100 datasets, tree weight equal to the spanning-tree maximum in " +
             std::to_string(100 - mismatches) + ", {X,Z} present in " + std::to_string(100 - missing_edge);
  return o;
}

Outcome network_normalization() {
  Outcome o;
  Rng rng(101);
  double worst_sum = 0.0, worst_posterior = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const auto net = random_dag(1 + rng() % 12, 2, 3, rng);
    oracle::Big total = 0;
    for (const auto& p : oracle::joint_table(net).probability) total += p;
    worst_sum = std::max(worst_sum, std::abs(static_cast<double>(total) - 1.0));
  }
  for (int trial = 0; trial < 100; ++trial) {
    const auto net = random_dag(5, 3, 2, rng);
    const std::size_t query = rng() % 5;
    std::vector<std::optional<int>> evidence(5);
    for (std::size_t v = 0; v < 5; ++v)
      if (v != query && rng() % 2) evidence[v] = static_cast<int>(rng() % net.variables()[v].cardinality);
    const auto got = net.predict_proba(evidence, query);
    const auto want = oracle::joint_posterior(net, evidence, query);
    for (std::size_t i = 0; i < got.size(); ++i) worst_posterior = std::max(worst_posterior, std::abs(got[i] - want[i]));
  }
  o.require(worst_sum <= 1e-9, "joint sums deviate by " + fmt(worst_sum));
  o.require(worst_posterior <= 1e-10, "posteriors deviate by " + fmt(worst_posterior));
  o.detail = (o.pass ? "" : o.detail + "; ") + "joint sum deviation " + fmt(worst_sum, 3) +
             " over 30 networks of <= 12 variables, posterior deviation " + fmt(worst_posterior, 3) +
             " over 100 queries";
  return o;
}

Outcome serialization() {
  Outcome o;
  Rng rng(111);
  std::size_t round_trips = 0, failures = 0;
  std::uniform_real_distribution<double> u(-50, 50), pos(1e-3, 20);
  auto round_trip = [&](const Model& m) {
    ++round_trips;
    const std::string text = serialize(m);
    const Model back = deserialize(text);
    if (!(back == m) || serialize(back) != text) ++failures;
  };
  for (int trial = 0; trial < 20; ++trial) {
    round_trip(Distribution(UnivariateGaussian(u(rng), pos(rng))));
    round_trip(Distribution(random_mvn(1 + rng() % 4, rng)));
    round_trip(Distribution(MultivariateGaussian({u(rng), u(rng)}, {pos(rng), pos(rng)}, CovarianceMode::diagonal)));
    round_trip(Distribution(Categorical(random_simplex(2 + rng() % 5, rng), trial % 2 ? 1e-8 : 0.0)));
    round_trip(Distribution(Exponential(pos(rng))));
    round_trip(Distribution(Poisson(pos(rng))));
    round_trip(Distribution(IndependentComponents({UnivariateGaussian(u(rng), pos(rng)), Poisson(pos(rng))})));
    std::vector<double> centroids(6);
    for (auto& c : centroids) c = u(rng);
    round_trip(KMeansModel(2, centroids));
    round_trip(BayesClassifier(random_simplex(3, rng),
                               {random_mvn(2, rng), random_mvn(2, rng), random_mvn(2, rng)}, false));
    round_trip(BayesClassifier(random_simplex(2, rng),
                               {IndependentComponents({UnivariateGaussian(u(rng), pos(rng)), UnivariateGaussian()}),
                                IndependentComponents({UnivariateGaussian(), UnivariateGaussian(u(rng), pos(rng))})},
                               true));
    round_trip(GeneralMixtureModel(random_simplex(2, rng), {Exponential(pos(rng)), Exponential(pos(rng))}));
    round_trip(random_gaussian_hmm(1 + rng() % 4, 1 + rng() % 3, rng));
    round_trip(random_hmm(2, true, rng));
    round_trip(random_chain(1 + rng() % 3, 2 + rng() % 3, rng));
    round_trip(random_dag(2 + rng() % 5, 3, 2, rng));
  }

  // Each tamper must be rejected by an error naming the broken invariant.
  struct Tamper {
    Model model;
    std::function<void(nlohmann::json&)> edit;
    std::string expect;
  };
  const std::vector<Tamper> tampers{
      {BayesClassifier({0.5, 0.5}, {UnivariateGaussian(), UnivariateGaussian(1, 1)}, true),
       [](nlohmann::json& p) { p["priors"] = {0.5, 1.0}; }, "sum to 1"},
      {GeneralMixtureModel({0.5, 0.5}, {UnivariateGaussian(), UnivariateGaussian(1, 1)}),
       [](nlohmann::json& p) { p["weights"] = {0.9, 0.3}; }, "sum to 1"},
      {two_state_hmm(), [](nlohmann::json& p) { p["transitions"][0] = {0.9, 0.3}; }, "sum to 1"},
      {Distribution(Categorical({0.5, 0.5})), [](nlohmann::json& p) { p["parameters"][0] = {0.5, 0.7}; },
       "sum to 1"},
      {Distribution(MultivariateGaussian::standard(2, CovarianceMode::full)),
       [](nlohmann::json& p) { p["parameters"][1] = {{1.0, 2.0}, {2.0, 1.0}}; }, "positive definite"},
      {Distribution(Exponential(1.0)), [](nlohmann::json& p) { p["parameters"][0] = -1.0; }, "rate must be > 0"},
      {MarkovChain::blank(1, 2), [](nlohmann::json& p) { p["initials"][0] = {0.2, 0.2}; }, "sum to 1"},
      {random_tree_network(3, 2, rng), [](nlohmann::json& p) { p["cpts"][0][0] = {0.2, 0.2}; }, "sum to 1"},
      {random_tree_network(3, 2, rng), [](nlohmann::json& p) { p["parents"] = {{2}, {0}, {1}}; }, "cycle"},
  };
  std::size_t rejected = 0;
  for (const auto& t : tampers) {
    auto doc = nlohmann::json::parse(serialize(t.model));
    t.edit(doc["payload"]);
    try {
      deserialize(doc.dump());
      o.require(false, model_type(t.model) + " tamper accepted");
    } catch (const Error& e) {
      const std::string msg = e.what();
      if (msg.find(t.expect) != std::string::npos)
        ++rejected;
      else
        o.require(false, model_type(t.model) + " tamper rejected with '" + msg + "'");
    }
  }
  auto doc = nlohmann::json::parse(serialize(Model(Distribution(Poisson(2.0)))));
  doc["format_version"] = 0;
  try {
    deserialize(doc.dump());
    o.require(false, "format_version 0 accepted");
  } catch (const Error& e) {
    o.require(std::string(e.what()).find("unsupported format_version") != std::string::npos,
              std::string("format_version 0 rejected with '") + e.what() + "'");
  }
  o.require(failures == 0, std::to_string(failures) + " round trips not bit-exact");
  o.detail = (o.pass ? "" : o.detail + "; ") + std::to_string(round_trips) + " round trips bit-exact, " +
             std::to_string(rejected) + "/" + std::to_string(tampers.size()) +
             " tampered documents rejected naming the invariant";
  return o;
}

// ---------------------------------------------------------------------------
// CLI pipelines

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run_tool(const std::vector<std::string>& args) {
#ifdef SUFSTAT_CLI_PATH
  std::string cmd = SUFSTAT_CLI_PATH;
  for (const auto& a : args) cmd += " '" + a + "'";
  cmd += " 2>/dev/null";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
#else
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str()};
#endif
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::optional<double> metric(const std::string& text, const std::string& key) {
  for (const auto& l : lines_of(text))
    if (l.rfind(key + ": ", 0) == 0) return parse_double(l.substr(key.size() + 2));
  return std::nullopt;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvSchema auto_schema(const std::string& path) {
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CsvSchema s;
  std::istringstream cells(header);
  for (std::string c; std::getline(cells, c, ',');) {
    if (c == "label") s.label = std::string("label");
    if (c == "weight") s.weight = std::string("weight");
  }
  return s;
}

class Pipelines {
 public:
  explicit Pipelines(Outcome& o) : o_(o) {
    std::string tmpl = (std::filesystem::temp_directory_path() / "sufstat-accept-XXXXXX").string();
    dir_ = mkdtemp(tmpl.data());
  }
  ~Pipelines() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  std::string file(const std::string& name) const { return (dir_ / name).string(); }

  bool step(const std::string& what, const std::vector<std::string>& args, CliResult& r) {
    r = run_tool(args);
    if (r.code != 0) o_.require(false, what + " exited with " + std::to_string(r.code));
    return r.code == 0;
  }

  // Checks a fitted document against the library model and the score or
  // predict output against library-level totals.
  void check_fit(const std::string& type, const std::string& doc_path, const Model& library) {
    ++fits_;
    const std::string cli_doc = slurp(doc_path);
    if (cli_doc != serialize(library)) {
      const double diff = max_rel_diff(parameters(deserialize(cli_doc)), parameters(library));
      worst_ = std::max(worst_, diff);
      if (!(diff <= 1e-12)) o_.require(false, type + " document differs from the library fit by " + fmt(diff));
    }
  }

  void check_metric(const std::string& type, const std::string& text, const std::string& key, double expected) {
    ++metrics_;
    const auto got = metric(text, key);
    if (!got) {
      o_.require(false, type + ": no '" + key + "' line");
      return;
    }
    const double diff = std::abs(*got - expected) / std::max(1.0, std::abs(expected));
    worst_ = std::max(worst_, diff);
    if (!(diff <= 1e-12)) o_.require(false, type + " " + key + " " + fmt(*got, 17) + " vs library " + fmt(expected, 17));
  }

  // Per-row values printed before the summary lines.
  void check_rows(const std::string& type, const std::string& text, const std::vector<double>& expected) {
    const auto ls = lines_of(text);
    std::size_t matched = 0;
    for (std::size_t i = 0; i < expected.size() && i < ls.size(); ++i) {
      const auto v = parse_double(ls[i]);
      if (v && std::abs(*v - expected[i]) <= 1e-12 * std::max(1.0, std::abs(expected[i]))) ++matched;
    }
    if (matched != expected.size())
      o_.require(false, type + ": " + std::to_string(expected.size() - matched) + " per-row values differ");
  }

  std::size_t fits() const { return fits_; }
  std::size_t metrics() const { return metrics_; }
  double worst() const { return worst_; }

 private:
  Outcome& o_;
  std::filesystem::path dir_;
  std::size_t fits_ = 0;
  std::size_t metrics_ = 0;
  double worst_ = 0.0;
};

template <class M>
double total_log_probability(const M& model, const DataBatch& data, std::vector<double>* rows = nullptr) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double lp = model.log_probability(data.row(i));
    if (rows) rows->push_back(lp);
    total += data.weights[i] * lp;
  }
  return total;
}

Outcome cli_end_to_end() {
  Outcome o;
  Pipelines p(o);
  CliResult r;
  std::vector<std::string> types_ok;

  // Distributions: generate, fit, score.
  struct DistCase {
    std::string type, preset;
    std::vector<std::string> extra;
    FamilySpec family;
  };
  const std::vector<DistCase> dist_cases{
      {"gaussian", "gaussian", {"--dim", "2"}, {Family::gaussian}},
      {"mvn", "blobs", {"--k", "3", "--dim", "3"}, {Family::multivariate_gaussian}},
      {"mvn-diag", "blobs", {"--k", "3", "--dim", "3"}, {Family::diagonal_gaussian}},
      {"exponential", "exponential", {"--dim", "2"}, {Family::exponential}},
      {"poisson", "poisson", {"--dim", "2"}, {Family::poisson}},
      {"categorical", "categorical", {"--categories", "4"}, {Family::categorical}},
  };
  for (const auto& c : dist_cases) {
    const auto data = p.file(c.type + ".csv"), doc = p.file(c.type + ".json");
    std::vector<std::string> gen{"generate", "--preset", c.preset, "--n", "1500", "--seed", "5", "-o", data};
    gen.insert(gen.end(), c.extra.begin(), c.extra.end());
    if (!p.step(c.type + " generate", gen, r) || !p.step(c.type + " fit", {"fit", c.type, data, "-o", doc}, r)) continue;
    const std::string fit_out = r.out;
    const DataBatch batch = read_csv(data, auto_schema(data));
    FamilySpec spec = c.family;
    if (spec.family == Family::categorical) {
      MemorySource scan(batch);
      const auto cards = scan_cardinalities(scan);
      spec.categories = *std::max_element(cards.begin(), cards.end());
    }
    Distribution lib = blank_distribution(spec, batch.dim);
    MemorySource source(batch);
    fit(lib, source, FitConfig{});
    p.check_fit(c.type, doc, lib);
    std::vector<double> rows;
    const double total = total_log_probability(lib, batch, &rows);
    p.check_metric(c.type + " fit", fit_out, "log-likelihood", total);
    if (!p.step(c.type + " score", {"score", doc, data}, r)) continue;
    p.check_rows(c.type + " score", r.out, rows);
    p.check_metric(c.type + " score", r.out, "total log-likelihood", total);
    types_ok.push_back(c.type);
  }

  // k-means and mixtures on blobs.
  {
    const auto data = p.file("blobs.csv");
    if (p.step("blobs generate", {"generate", "--preset", "blobs", "--n", "2000", "--k", "3", "--dim", "2", "--seed", "9", "-o", data}, r)) {
      const DataBatch batch = read_csv(data, auto_schema(data));
      const auto km_doc = p.file("kmeans.json");
      if (p.step("kmeans fit", {"fit", "kmeans", data, "--k", "3", "-o", km_doc}, r)) {
        const auto lib = lloyd_fit(batch.view(), 3, FitConfig{}).model;
        p.check_fit("kmeans", km_doc, lib);
        if (p.step("kmeans predict", {"predict", km_doc, data}, r)) {
          double objective = 0.0;
          std::vector<double> assign;
          for (std::size_t i = 0; i < batch.size(); ++i) {
            const std::size_t j = lib.assign(batch.row(i));
            assign.push_back(static_cast<double>(j));
            objective += batch.weights[i] * squared_distance(batch.row(i), lib.centroid(j));
          }
          p.check_rows("kmeans predict", r.out, assign);
          p.check_metric("kmeans predict", r.out, "objective", objective);
          types_ok.push_back("kmeans");
        }
      }
      const auto gmm_doc = p.file("gmm.json");
      if (p.step("gmm fit", {"fit", "gmm", data, "--k", "3", "-o", gmm_doc}, r)) {
        MemorySource source(batch);
        const auto lib = mixture_from_samples(FamilySpec{Family::multivariate_gaussian}, 3, source, FitConfig{});
        p.check_fit("gmm", gmm_doc, lib.model);
        p.check_metric("gmm fit", r.out, "iterations", static_cast<double>(lib.report.iterations_run));
        std::vector<double> rows;
        const double total = total_log_probability(lib.model, batch, &rows);
        if (p.step("gmm score", {"score", gmm_doc, data}, r)) {
          p.check_rows("gmm score", r.out, rows);
          p.check_metric("gmm score", r.out, "total log-likelihood", total);
        }
        if (p.step("gmm predict", {"predict", gmm_doc, data}, r)) {
          std::vector<double> labels;
          for (std::size_t i = 0; i < batch.size(); ++i) labels.push_back(static_cast<double>(lib.model.predict(batch.row(i))));
          p.check_rows("gmm predict", r.out, labels);
          p.check_metric("gmm predict", r.out, "total log-likelihood", total);
          types_ok.push_back("gmm");
        }
      }
    }
  }

  // Classifiers: semi-supervised training file, fully labelled validation.
  {
    const auto train = p.file("train.csv"), valid = p.file("valid.csv");
    if (p.step("ellipses generate", {"generate", "--preset", "ellipses", "--n", "3000", "--dim", "4", "--labeled-fraction", "0.05", "--seed", "11", "-o", train}, r) &&
        p.step("ellipses generate", {"generate", "--preset", "ellipses", "--n", "1000", "--dim", "4", "--seed", "12", "-o", valid}, r)) {
      const DataBatch tb = read_csv(train, auto_schema(train));
      const DataBatch vb = read_csv(valid, auto_schema(valid));
      for (const auto& [type, family] : {std::pair{std::string("naive-bayes"), Family::gaussian},
                                          std::pair{std::string("bayes"), Family::multivariate_gaussian}}) {
        const auto doc = p.file(type + ".json");
        if (!p.step(type + " fit", {"fit", type, train, "--labels", "label", "-o", doc}, r)) continue;
        if (r.out.find("mode: semi-supervised") == std::string::npos)
          o.require(false, type + " fit did not report semi-supervised mode");
        MemorySource source(tb);
        const auto lib = fit_classifier(FamilySpec{family}, 0, source, FitConfig{});
        p.check_fit(type, doc, lib.model);
        if (!p.step(type + " predict", {"predict", doc, valid, "--labels", "label"}, r)) continue;
        std::vector<double> predicted;
        for (std::size_t i = 0; i < vb.size(); ++i) predicted.push_back(static_cast<double>(lib.model.predict(vb.row(i))));
        p.check_rows(type + " predict", r.out, predicted);
        p.check_metric(type + " predict", r.out, "accuracy", accuracy(lib.model, vb));
        p.check_metric(type + " predict", r.out, "total log-likelihood", total_log_probability(lib.model, vb));
        if (!p.step(type + " score", {"score", doc, valid, "--labels", "label"}, r)) continue;
        p.check_metric(type + " score", r.out, "total log-likelihood", total_log_probability(lib.model, vb));
        types_ok.push_back(type);
      }
    }
  }

  // Sequence models.
  {
    const auto data = p.file("hmm.txt"), doc = p.file("hmm.json");
    if (p.step("hmm generate", {"generate", "--preset", "hmm2", "--sequences", "20", "--length", "100", "--seed", "13", "-o", data}, r) &&
        p.step("hmm fit", {"fit", "hmm", data, "--states", "2", "-o", doc}, r)) {
      const auto seqs = read_sequences(data);
      MemorySequenceSource source(seqs);
      const auto lib = hmm_from_samples(FamilySpec{Family::diagonal_gaussian}, 2, source, FitConfig{});
      p.check_fit("hmm", doc, lib.model);
      double total = 0.0;
      std::vector<double> rows;
      for (const auto& s : seqs.sequences) {
        rows.push_back(lib.model.log_probability(s));
        total += rows.back();
      }
      if (p.step("hmm score", {"score", doc, data}, r)) {
        p.check_rows("hmm score", r.out, rows);
        p.check_metric("hmm score", r.out, "total log-likelihood", total);
      }
      if (p.step("hmm predict", {"predict", doc, data}, r)) {
        const auto ls = lines_of(r.out);
        std::size_t bad = 0;
        for (std::size_t i = 0; i < seqs.size(); ++i) {
          const auto v = lib.model.viterbi(seqs.sequences[i]);
          std::string expect;
          for (std::size_t t = 0; t < v.path.size(); ++t) expect += (t ? " " : "") + std::to_string(v.path[t]);
          expect += "\t" + format_double(v.log_joint);
          bad += i >= ls.size() || ls[i] != expect;
        }
        if (bad) o.require(false, "hmm predict: " + std::to_string(bad) + " Viterbi lines differ");
        p.check_metric("hmm predict", r.out, "total log-likelihood", total);
        types_ok.push_back("hmm");
      }
    }
  }
  {
    const auto data = p.file("markov.txt"), doc = p.file("markov.json");
    if (p.step("markov generate", {"generate", "--preset", "markov", "--order", "2", "--alphabet", "3", "--seed", "14", "-o", data}, r) &&
        p.step("markov fit", {"fit", "markov", data, "--order", "2", "-o", doc}, r)) {
      const auto seqs = read_sequences(data);
      MemorySequenceSource source(seqs);
      const auto lib = fit_chain(2, std::nullopt, source, FitConfig{});
      p.check_fit("markov", doc, lib);
      double total = 0.0;
      std::vector<double> rows;
      for (const auto& s : seqs.sequences) {
        rows.push_back(lib.log_probability(s));
        total += rows.back();
      }
      p.check_metric("markov fit", r.out, "log-likelihood", total);
      if (p.step("markov score", {"score", doc, data}, r)) {
        p.check_rows("markov score", r.out, rows);
        p.check_metric("markov score", r.out, "total log-likelihood", total);
        types_ok.push_back("markov");
      }
    }
  }

  // Bayesian network.
  {
    const auto data = p.file("bn.csv"), doc = p.file("bn.json");
    if (p.step("bayesnet generate", {"generate", "--preset", "bayesnet", "--variables", "5", "--cardinality", "3", "--n", "3000", "--seed", "15", "-o", data}, r) &&
        p.step("bayesnet fit", {"fit", "bayesnet", data, "-o", doc}, r)) {
      const DataBatch batch = read_csv(data, auto_schema(data));
      MemorySource source(batch);
      const auto lib = bayesnet_from_samples(infer_variables(source), source, FitConfig{});
      p.check_fit("bayesnet", doc, lib);
      std::vector<double> rows;
      const double total = total_log_probability(lib, batch, &rows);
      p.check_metric("bayesnet fit", r.out, "log-likelihood", total);
      if (p.step("bayesnet score", {"score", doc, data}, r)) {
        p.check_rows("bayesnet score", r.out, rows);
        p.check_metric("bayesnet score", r.out, "total log-likelihood", total);
      }
      if (p.step("bayesnet predict", {"predict", doc, data}, r)) {
        const std::size_t q = lib.size() - 1;
        std::size_t correct = 0;
        std::vector<std::optional<int>> evidence(lib.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
          for (std::size_t v = 0; v < lib.size(); ++v)
            evidence[v] = v == q ? std::nullopt : std::optional<int>(static_cast<int>(batch.row(i)[v]));
          correct += argmax(lib.predict_proba(evidence, q)) == static_cast<std::size_t>(batch.row(i)[q]);
        }
        p.check_metric("bayesnet predict", r.out, "accuracy",
                       static_cast<double>(correct) / static_cast<double>(batch.size()));
        p.check_metric("bayesnet predict", r.out, "total log-likelihood", total);
        types_ok.push_back("bayesnet");
      }
    }
  }

  std::string joined;
  for (const auto& t : types_ok) joined += (joined.empty() ? "" : " ") + t;
  o.require(types_ok.size() == 13, "pipelines completed for " + std::to_string(types_ok.size()) + "/13 model types");
  o.detail = (o.pass ? "" : o.detail + "; ") + std::to_string(types_ok.size()) + " model types (" + joined + "), " +
             std::to_string(p.fits()) + " documents and " + std::to_string(p.metrics()) +
             " metrics matched the library, max rel diff " + fmt(p.worst(), 3);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"semi-supervised reproduction", semi_supervised_reproduction},
      {"supervised vs chance", supervised_vs_chance},
      {"out-of-core equivalence", out_of_core_equivalence},
      {"parallel equivalence and scaling", parallel_equivalence},
      {"HMM oracle equivalence", hmm_oracle},
      {"Baum-Welch recovery", baum_welch_recovery},
      {"EM monotonicity", em_monotonicity},
      {"additivity", additivity},
      {"Chow-Liu exactness", chow_liu_exactness},
      {"Bayesian network normalization", network_normalization},
      {"serialization", serialization},
      {"CLI end-to-end", cli_end_to_end},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << (i + 1 < 10 ? " " : "") << i + 1 << "  "
              << criteria[i].first << ": " << o.detail << " [" << fmt(secs, 3) << " s]" << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failed;
}
