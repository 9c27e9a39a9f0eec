#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "sufstat/cli.hpp"
#include "sufstat/distributions.hpp"
#include "sufstat/io.hpp"
#include "sufstat/serialize.hpp"

using namespace sufstat;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("generate is deterministic for a seed") {
  testing::TempDir dir;
  const auto a = dir.file("a.csv"), b = dir.file("b.csv");
  CHECK(cli({"generate", "--preset", "ellipses", "--n", "1000", "--seed", "7", "-o", a}).code == 0);
  CHECK(cli({"generate", "--preset", "ellipses", "--n", "1000", "--seed", "7", "-o", b}).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(read_csv(a, CsvSchema{std::string("label"), std::nullopt, std::nullopt}).size() == 1000);
}

TEST_CASE("hmm-bench writes one block per sequence") {
  testing::TempDir dir;
  const auto path = dir.file("s.txt");
  REQUIRE(cli({"generate", "--preset", "hmm-bench", "--sequences", "5", "--length", "100", "-o", path}).code == 0);
  const auto seqs = read_sequences(path);
  REQUIRE(seqs.size() == 5);
  for (const auto& s : seqs.sequences) CHECK(s.length() == 100);
}

TEST_CASE("fit gaussian matches the library fit") {
  testing::TempDir dir;
  const auto data = dir.file("g.csv");
  std::ofstream(data) << "0.5\n1.5\n4\n-2\n";
  const auto model = dir.file("g.json");
  const auto r = cli({"fit", "gaussian", data, "-o", model});
  REQUIRE(r.code == 0);
  const Distribution expected =
      fit_distribution(UnivariateGaussian(), read_csv(data).view());
  CHECK(std::get<Distribution>(load_model(model)) == expected);
}

TEST_CASE("classifier fit reports semi-supervised mode on -1 labels") {
  testing::TempDir dir;
  const auto data = dir.file("e.csv");
  REQUIRE(cli({"generate", "--preset", "ellipses", "--n", "400", "--dim", "2", "--labeled-fraction", "0.1",
               "--seed", "3", "-o", data})
              .code == 0);
  const auto r = cli({"fit", "naive-bayes", data, "--labels", "label", "-o", dir.file("nb.json")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("mode: semi-supervised") != std::string::npos);
  CHECK(r.out.find("iterations: ") != std::string::npos);
}

TEST_CASE("usage and runtime failures map to exit codes") {
  testing::TempDir dir;
  CHECK(cli({"fit", "weibull", "x.csv", "-o", dir.file("m.json")}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"fit", "gaussian", dir.file("missing.csv"), "-o", dir.file("m.json")}).code == 1);
  CHECK(cli({"fit", "gmm", "x.csv", "-o", dir.file("m.json"), "--inertia", "2"}).code == 2);

  const auto data = dir.file("two.csv");
  std::ofstream(data) << "1,2\n3,4\n";
  const auto model = dir.file("g.json");
  REQUIRE(cli({"fit", "gaussian", dir.file("one.csv"), "-o", model}).code == 1);
  std::ofstream(dir.file("one.csv")) << "1\n2\n";
  REQUIRE(cli({"fit", "gaussian", dir.file("one.csv"), "-o", model}).code == 0);
  const auto r = cli({"score", model, data});
  CHECK(r.code == 1);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("score prints one line per row and the total last") {
  testing::TempDir dir;
  const auto data = dir.file("p.csv");
  std::ofstream(data) << "1\n2\n3\n";
  const auto model = dir.file("p.json");
  REQUIRE(cli({"fit", "poisson", data, "-o", model}).code == 0);
  const auto r = cli({"score", model, data});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::vector<std::string> ls;
  for (std::string l; std::getline(lines, l);) ls.push_back(l);
  REQUIRE(ls.size() == 4);
  const Poisson p(2.0);
  const std::vector<double> x{1.0};
  CHECK(ls[0] == format_double(p.log_probability(x)));
  CHECK(ls[3].rfind("total log-likelihood: ", 0) == 0);
}
