#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "penlearn/data_model.hpp"
#include "penlearn/segmenter.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

using namespace penlearn;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "penlearn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

struct Workspace {
  testing::TempDir dir;
  Dataset ds;
  std::string seqs, labels;
  Workspace() {
    testing::SyntheticSpec spec;
    spec.count = 24;
    spec.max_length = 120;
    spec.seed = 77;
    ds = testing::make_synthetic(spec);
    seqs = (dir / "seqs.csv").string();
    labels = (dir / "labels.csv").string();
    write_sequences(seqs, ds);
    write_labels(labels, ds);
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("segment writes the changepoints of every sequence") {
  Workspace w;
  const auto r = cli({"segment", "--sequences", w.seqs, "--lambda", "10", "--out", w.path("cp.csv")});
  REQUIRE(r.code == 0);
  const auto got = lines(testing::read_file(w.path("cp.csv")));
  REQUIRE_FALSE(got.empty());
  CHECK(got[0] == "sequenceID,changepoint");
  std::size_t expected = 1;
  for (const auto& s : w.ds.sequences) expected += opart(s.values, 10.0).changepoints.size();
  CHECK(got.size() == expected);

  const auto pelt = cli({"segment", "--sequences", w.seqs, "--lambda", "10", "--method", "pelt", "--out", w.path("cp2.csv")});
  REQUIRE(pelt.code == 0);
  CHECK(testing::read_file(w.path("cp2.csv")) == testing::read_file(w.path("cp.csv")));
}

TEST_CASE("usage errors exit 1") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"segment", "--bogus"}).code == 1);
  CHECK(cli({"segment", "--lambda", "1"}).code == 1);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("data errors exit 2") {
  Workspace w;
  w.dir.write("bad.csv", "sequenceID,position,value\nx,1,abc\n");
  CHECK(cli({"segment", "--sequences", w.path("bad.csv"), "--lambda", "1", "--out", w.path("o.csv")}).code == 2);
  CHECK(cli({"segment", "--sequences", w.path("missing.csv"), "--lambda", "1", "--out", w.path("o.csv")}).code == 2);
}

TEST_CASE("train, predict and evaluate") {
  Workspace w;
  auto r = cli({"train", "--model", "linear", "--sequences", w.seqs, "--labels", w.labels, "--l1", "0.05",
                "--max-iterations", "100", "--out", w.path("lin.json")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  r = cli({"features", "--sequences", w.seqs, "--out", w.path("feat.csv")});
  REQUIRE(r.code == 0);
  r = cli({"predict", "--model", w.path("lin.json"), "--features", w.path("feat.csv"), "--out", w.path("pred.csv")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto pred = lines(testing::read_file(w.path("pred.csv")));
  CHECK(pred[0] == "sequenceID,log_lambda,lambda");
  CHECK(pred.size() == w.ds.sequences.size() + 1);

  r = cli({"evaluate", "--sequences", w.seqs, "--labels", w.labels, "--predictions", w.path("pred.csv"), "--out",
           w.path("eval.csv")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto ev = lines(testing::read_file(w.path("eval.csv")));
  CHECK(ev[0] == "sequenceID,tp,tn,fp,fn");
  CHECK(ev.back().rfind("TOTAL,", 0) == 0);
  CHECK(r.out.find("accuracy") != std::string::npos);

  // Raw sequences are the wrong input for a feature model.
  r = cli({"predict", "--model", w.path("lin.json"), "--sequences", w.seqs, "--out", w.path("pred2.csv")});
  CHECK(r.code == 2);
  CHECK(r.err.find("linear") != std::string::npos);
}

TEST_CASE("predict refuses a model of the wrong input kind") {
  Workspace w;
  auto r = cli({"train", "--model", "gru", "--sequences", w.seqs, "--labels", w.labels, "--hidden", "2", "--no-log1p",
                "--max-iterations", "3", "--out", w.path("gru.json")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  REQUIRE(cli({"features", "--sequences", w.seqs, "--out", w.path("feat.csv")}).code == 0);
  r = cli({"predict", "--model", w.path("gru.json"), "--features", w.path("feat.csv"), "--out", w.path("p.csv")});
  CHECK(r.code == 2);
  CHECK(r.err.find("gru") != std::string::npos);
  CHECK(r.err.find("feature") != std::string::npos);
}

TEST_CASE("targets and pool commands") {
  Workspace w;
  auto r = cli({"targets", "--sequences", w.seqs, "--labels", w.labels, "--out", w.path("t.csv")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto targets = load_targets(w.path("t.csv"));
  CHECK(targets.size() == w.ds.sequences.size());

  r = cli({"pool", "--sequences", w.seqs, "--window", "4", "--stat", "median", "--out", w.path("pooled.csv")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto pooled = load_sequences(w.path("pooled.csv"));
  REQUIRE(pooled.sequences.size() == w.ds.sequences.size());
  for (std::size_t i = 0; i < pooled.sequences.size(); ++i)
    CHECK(pooled.sequences[i].values.size() == (w.ds.sequences[i].values.size() + 3) / 4);
}

TEST_CASE("gradcheck passes") {
  const auto r = cli({"gradcheck", "--kind", "lstm", "--trials", "3"});
  CHECK_MESSAGE(r.code == 0, r.err);
}
