#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "owdisc/cli.hpp"
#include "owdisc/io.hpp"
#include "support.hpp"

using nlohmann::json;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "owdisc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = owdisc::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

json read_json(const std::filesystem::path& path) { return json::parse(owdisc::read_text_file(path)); }

}  // namespace

TEST_CASE("synth, discover and eval agree end to end") {
  test::TempDir dir;
  const std::string data = (dir / "data").string();
  REQUIRE(invoke({"synth", "--preset", "s1", "--out", data}).code == 0);
  for (const char* name : {"source.cef", "target.cef", "truth.csv", "scenario.json", "run_info.json"}) {
    CHECK(std::filesystem::exists(dir / "data" / name));
  }

  const std::vector<std::string> discover = {"discover", "--source", data + "/source.cef", "--target",
                                             data + "/target.cef", "--num-target-classes", "15", "--truth",
                                             data + "/truth.csv", "--seed", "3"};
  auto run1 = discover;
  run1.insert(run1.end(), {"--out", (dir / "run1").string()});
  const Result r = invoke(run1);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("H-score") != std::string::npos);
  const json report = read_json(dir / "run1" / "report.json");
  CHECK(report.at("eval").at("h_score").get<double>() >= 0.95);
  CHECK(read_json(dir / "run1" / "run_info.json").at("seed") == 3);
  CHECK(report.at("config").at("seed") == 3);
  CHECK(std::filesystem::exists(dir / "run1" / "train_log.jsonl"));
  CHECK(std::filesystem::exists(dir / "run1" / "model" / "model.json"));

  auto run2 = discover;
  run2.insert(run2.end(), {"--out", (dir / "run2").string()});
  REQUIRE(invoke(run2).code == 0);
  CHECK(owdisc::read_text_file(dir / "run1" / "predictions.csv") ==
        owdisc::read_text_file(dir / "run2" / "predictions.csv"));

  const Result ev = invoke({"eval", "--pred", (dir / "run1" / "predictions.csv").string(), "--truth",
                            data + "/truth.csv", "--seen-count", "10"});
  REQUIRE(ev.code == 0);
  CHECK(json::parse(ev.out) == report.at("eval"));
}

TEST_CASE("usage errors exit with 2") {
  test::TempDir dir;
  const std::string data = (dir / "data").string();
  REQUIRE(invoke({"synth", "--preset", "bimodal-overlap", "--out", data}).code == 0);
  const Result missing = invoke({"discover", "--source", data + "/source.cef", "--target", data + "/target.cef",
                                 "--out", (dir / "run").string()});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("--num-target-classes") != std::string::npos);
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"bogus"}).code == 2);
  CHECK(invoke({"synth", "--preset", "nope", "--out", data}).code == 2);
  CHECK(invoke({"discover", "--source", data + "/source.cef", "--target", data + "/target.cef",
                "--num-target-classes", "5", "--tau", "1.5", "--out", (dir / "run").string()})
            .code == 2);
  CHECK(invoke({"baseline-simple", "--source", data + "/source.cef", "--target", data + "/target.cef",
                "--num-target-classes", "5", "--out", (dir / "run").string()})
            .code == 2);
  CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("runtime errors exit with 1 and name the stage") {
  test::TempDir dir;
  const std::string data = (dir / "data").string();
  REQUIRE(invoke({"synth", "--preset", "bimodal-overlap", "--out", data}).code == 0);
  owdisc::write_text_file(dir / "broken.cef", "XXXXnot an embedding file");
  const Result r = invoke({"discover", "--source", (dir / "broken.cef").string(), "--target", data + "/target.cef",
                           "--num-target-classes", "5", "--out", (dir / "run").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("load source") != std::string::npos);
  CHECK(r.err.find("bad magic") != std::string::npos);

  const Result k = invoke({"discover", "--source", data + "/source.cef", "--target", data + "/target.cef",
                           "--num-target-classes", "100000", "--out", (dir / "run").string()});
  CHECK(k.code == 1);
  CHECK(k.err.find("target-prototypes") != std::string::npos);
}

TEST_CASE("remaining subcommands write their artifacts") {
  test::TempDir dir;
  const std::string data = (dir / "data").string();
  REQUIRE(invoke({"synth", "--preset", "bimodal-overlap", "--out", data}).code == 0);
  const std::vector<std::string> io = {"--source", data + "/source.cef", "--target", data + "/target.cef"};

  auto match = std::vector<std::string>{"match-only"};
  match.insert(match.end(), io.begin(), io.end());
  match.insert(match.end(), {"--num-target-classes", "5", "--out", (dir / "m").string()});
  REQUIRE(invoke(match).code == 0);
  const json m = read_json(dir / "m" / "match.json");
  CHECK(m.at("cooccurrence").size() == 5);
  CHECK(m.at("distribution").size() == 5);
  CHECK(m.at("matches").size() == 5);
  CHECK(m.contains("unseen_prototype_indices"));

  auto est = std::vector<std::string>{"estimate-k"};
  est.insert(est.end(), io.begin(), io.end());
  est.insert(est.end(), {"--k-min", "3", "--k-max", "6", "--out", (dir / "e").string()});
  REQUIRE(invoke(est).code == 0);
  CHECK(read_json(dir / "e" / "estimate.json").at("scores").size() == 4);

  auto simple = std::vector<std::string>{"baseline-simple"};
  simple.insert(simple.end(), io.begin(), io.end());
  simple.insert(simple.end(), {"--num-target-classes", "5", "--entropy-threshold", "0.5", "--iters", "50", "--truth",
                               data + "/truth.csv", "--out", (dir / "s").string()});
  REQUIRE(invoke(simple).code == 0);
  CHECK(read_json(dir / "s" / "report.json").at("method") == "simple");
  CHECK(read_json(dir / "s" / "report.json").at("config").at("adapter_kind") == "none");

  const Result km = invoke({"baseline-kmeans", "--target", data + "/target.cef", "--truth", data + "/truth.csv",
                            "--num-target-classes", "5", "--out", (dir / "k").string()});
  REQUIRE(km.code == 0);
  CHECK(km.out.find("clustering accuracy") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "k" / "clusters.csv"));

  const std::string est_out = (dir / "d").string();
  auto estimate_run = std::vector<std::string>{"discover"};
  estimate_run.insert(estimate_run.end(), io.begin(), io.end());
  estimate_run.insert(estimate_run.end(), {"--estimate", "--k-min", "3", "--k-max", "6", "--iters", "20", "--out",
                                           est_out});
  REQUIRE(invoke(estimate_run).code == 0);
  CHECK(read_json(dir / "d" / "report.json").contains("estimate"));
}
