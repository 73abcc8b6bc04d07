#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "cli.hpp"
#include "fixtures.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = floodsense::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Every file under dir, keyed by relative path. The manifest's "out" field is
// dropped because it names the directory itself.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir).generic_string();
    auto body = fixtures::slurp(e.path());
    if (rel == "run_manifest.json") {
      auto j = nlohmann::json::parse(body);
      j.erase("out");
      body = j.dump();
    }
    files[rel] = body;
  }
  return files;
}

class CliWorld : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fixtures::TempDir;
    const auto data = (*dir_ / "data").string();
    auto r = run({"synth", "--out", data, "--days", "2", "--background", "150", "--planted", "30", "--training",
                  "600"});
    ASSERT_EQ(r.code, 0) << r.err;
    r = run({"train", "--out", (*dir_ / "model").string(), "--training", data + "/training.tsv"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  static std::string data(const std::string& name) { return (*dir_ / "data" / name).string(); }
  static std::string model() { return (*dir_ / "model" / "model.nb").string(); }
  static std::vector<std::string> pipeline(const fs::path& out) {
    return {"pipeline", "--out", out.string(), "--input", data("corpus.jsonl"), "--gazetteer",
            data("gazetteer.jsonl"), "--counties", data("counties.geojson"), "--model", model()};
  }

  static fixtures::TempDir* dir_;
};

fixtures::TempDir* CliWorld::dir_ = nullptr;

}  // namespace

TEST(Cli, HelpAndVersion) {
  for (const std::string sub : {"ingest-stats", "filter", "train", "classify", "cross-validate", "locate", "grid",
                                "declare", "validate", "sweep", "render", "correlate", "pipeline", "synth"}) {
    const auto r = run({sub, "--help"});
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.out.find("--out"), std::string::npos) << sub;
  }
  const auto v = run({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find("floodsense 0.3.0"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"filter", "--input", "x.jsonl"}).code, 2);  // --out missing

  fixtures::TempDir dir;
  const auto out = dir / "out";
  const auto r = run({"ingest-stats", "--out", out.string(), "--input", (dir / "nope.jsonl").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("not found"), std::string::npos);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, BadOverrideIsARuntimeError) {
  fixtures::TempDir dir;
  fixtures::spit(dir / "c.jsonl", "");
  const auto out = dir / "out";
  const auto r = run({"ingest-stats", "--out", out.string(), "--input", (dir / "c.jsonl").string(), "--set",
                      "colour=red"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("colour"), std::string::npos);
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(CliWorld, PipelineWithoutModelNamesTrain) {
  const auto out = *dir_ / "nomodel";
  auto args = pipeline(out);
  args.resize(args.size() - 2);
  const auto r = run(args);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("floodsense train"), std::string::npos);
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(CliWorld, PipelineIsByteIdenticalAcrossRunsAndThreads) {
  ASSERT_TRUE(fs::exists(model()));
  const auto a = *dir_ / "p1", b = *dir_ / "p2", c = *dir_ / "p3";
  ASSERT_EQ(run(pipeline(a)).code, 0);
  ASSERT_EQ(run(pipeline(b)).code, 0);
  auto threaded = pipeline(c);
  threaded.insert(threaded.end(), {"--threads", "4"});
  ASSERT_EQ(run(threaded).code, 0);
  const auto sa = snapshot(a);
  EXPECT_TRUE(sa.count("declarations.csv"));
  EXPECT_TRUE(sa.count("windows.json"));
  EXPECT_TRUE(sa.count("filter_trace.csv"));
  EXPECT_EQ(sa, snapshot(b));
  // The thread count is part of the effective config; everything else matches.
  auto sc = snapshot(c);
  sc.erase("effective_config.json");
  sc.erase("run_manifest.json");
  auto sa2 = sa;
  sa2.erase("effective_config.json");
  sa2.erase("run_manifest.json");
  EXPECT_EQ(sa2, sc);
}

TEST_F(CliWorld, SweepSingleTriple) {
  const auto out = *dir_ / "sweep";
  const auto r = run({"sweep", "--out", out.string(), "--input", data("corpus.jsonl"), "--gazetteer",
                      data("gazetteer.jsonl"), "--counties", data("counties.geojson"), "--truth", data("truth.csv"),
                      "--model", model(), "--set", "sweep_r=1", "--set", "sweep_alpha=0.15", "--set", "sweep_T=0.1",
                      "--set", "sweep_modes=relative"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = fixtures::slurp(out / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_EQ(csv.rfind("r,alpha,T,mode,", 0), 0u);
}

TEST_F(CliWorld, SweepNeedsOverlappingDates) {
  fixtures::TempDir dir;
  fixtures::spit(dir / "truth.csv", "date,county,severity\n2001-01-01,Nowhere,minor\n");
  const auto out = dir / "out";
  const auto r = run({"sweep", "--out", out.string(), "--input", data("corpus.jsonl"), "--gazetteer",
                      data("gazetteer.jsonl"), "--counties", data("counties.geojson"), "--truth",
                      (dir / "truth.csv").string(), "--model", model()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("no overlapping dates"), std::string::npos);
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(CliWorld, WritesOnlyInsideOut) {
  fixtures::TempDir dir;
  const auto out = dir / "only";
  const auto r = run({"ingest-stats", "--out", out.string(), "--input", data("corpus.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t entries = 0;
  for (const auto& e : fs::directory_iterator(dir.path())) {
    (void)e;
    ++entries;
  }
  EXPECT_EQ(entries, 1u);
  EXPECT_TRUE(fs::exists(out / "run_manifest.json"));
  EXPECT_TRUE(fs::exists(out / "effective_config.json"));
}
