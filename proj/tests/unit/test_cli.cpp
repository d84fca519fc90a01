#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "grape/cli/commands.hpp"
#include "grape/cli/run_config.hpp"
#include "support.hpp"

using namespace grape;
using cli::ConfigError;
using cli::RunConfig;
using nlohmann::json;

namespace {

std::vector<std::vector<std::string>> read_tsv(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, '\t')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

std::string expect_key(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run_cli(const std::string& args, const test::TempDir& dir) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string(GRAPE_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

}  // namespace

TEST(Presets, MatchHyperparameterTable) {
  auto rows = read_tsv(std::filesystem::path(GRAPE_TEST_DATA_DIR) / "hyperparameter_presets.tsv");
  ASSERT_GT(rows.size(), 1u);
  EXPECT_EQ(rows.size() - 1, cli::presets().size());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    auto c = RunConfig::from_preset(r[0]);
    EXPECT_EQ(kg::to_string(c.train.kind), r[1]) << r[0];
    EXPECT_EQ(c.model.L, std::stoi(r[2])) << r[0];
    EXPECT_EQ(c.model.d, std::stoul(r[3])) << r[0];
    EXPECT_EQ(c.model.d_l, std::stoul(r[4])) << r[0];
    EXPECT_EQ(model::to_string(c.model.transform), r[5]) << r[0];
    EXPECT_EQ(model::to_string(c.model.aggregate), r[6]) << r[0];
    EXPECT_EQ(c.train.batch_size, std::stoul(r[7])) << r[0];
    EXPECT_DOUBLE_EQ(c.train.lr, std::stod(r[8])) << r[0];
    EXPECT_EQ(c.train.epochs, std::stoi(r[9])) << r[0];
  }
}

TEST(Presets, SmallWordNetInductive) {
  auto c = RunConfig::from_preset("wn18rr-v1");
  EXPECT_EQ(c.model.L, 5);
  EXPECT_EQ(c.model.d, 32u);
  EXPECT_EQ(c.model.d_l, 8u);
  EXPECT_DOUBLE_EQ(c.train.lr, 5e-4);
  EXPECT_EQ(c.train.batch_size, 16u);
  EXPECT_EQ(c.train.epochs, 20);
  EXPECT_FALSE(c.inductive_dir.empty());
  EXPECT_TRUE(RunConfig::from_preset("fb15k237").train.fb_direct_dropout);
  EXPECT_EQ(expect_key([] { RunConfig::from_preset("yago"); }), "preset");
}

TEST(Config, FileSectionsCommentsAndOverrides) {
  test::TempDir dir;
  test::write_text(dir / "run.cfg",
                   "# comment line\n"
                   "preset = wn18rr-v2\n"
                   "[model]\n"
                   "d = 16   # trailing comment\n"
                   "aggregate = meanstd\n"
                   "[train]\n"
                   "epochs = 3\n"
                   "run.seed = 9\n");
  auto c = cli::resolve_config("", dir / "run.cfg", {{"train.epochs", "4"}, {"model.L", "2"}});
  EXPECT_EQ(c.preset, "wn18rr-v2");
  EXPECT_EQ(c.model.d, 16u);
  EXPECT_EQ(c.model.aggregate, model::AggregateKind::meanstd);
  EXPECT_EQ(c.train.epochs, 4);
  EXPECT_EQ(c.model.L, 2);
  EXPECT_EQ(c.seed, 9u);
  auto j = c.to_json();
  EXPECT_EQ(j["model"]["d"], 16);
  EXPECT_EQ(j["train"]["epochs"], 4);
  EXPECT_EQ(j["preset"], "wn18rr-v2");
}

TEST(Config, ErrorsNameTheOffendingKey) {
  EXPECT_EQ(expect_key([] { cli::resolve_config("wn18rr-v1", {}, {{"model.d", "abc"}}); }), "model.d");
  EXPECT_EQ(expect_key([] { cli::resolve_config("wn18rr-v1", {}, {{"train.lr", "-1"}}); }), "train.lr");
  EXPECT_EQ(expect_key([] { cli::resolve_config("wn18rr-v1", {}, {{"model.transform", "hole"}}); }), "model.transform");
  EXPECT_EQ(expect_key([] { cli::resolve_config("wn18rr-v1", {}, {{"model.dim", "3"}}); }), "model.dim");
  EXPECT_EQ(expect_key([] { cli::resolve_config("wn18rr-v1", {}, {{"model.d_l", "64"}}); }), "model.d_l");
  EXPECT_EQ(expect_key([] { cli::resolve_config("", {}, {}); }), "preset");
  test::TempDir dir;
  test::write_text(dir / "bad.cfg", "model.d = 8\nnot a pair\n");
  try {
    cli::read_config_file(dir / "bad.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
  }
  auto c = RunConfig::from_preset("wn18rr-v1");
  c.data_root.clear();
  EXPECT_EQ(expect_key([&] { c.dataset_paths(); }), "data.root");
}

TEST(Config, EveryListedKeyIsSettable) {
  auto c = RunConfig::from_preset("nell995-v1");
  for (const auto& k : RunConfig::keys()) {
    std::string v = "1";
    if (k.starts_with("data.") && k != "data.valid_facts_at_test") v = "x";
    if (k == "run.out_dir") v = "out";
    if (k == "model.transform") v = "transe";
    if (k == "model.aggregate") v = "sum";
    if (k == "model.activation") v = "tanh";
    if (k.ends_with("same_potential") || k.ends_with("dropout") || k.ends_with("resume") || k.ends_with("at_test"))
      v = "true";
    EXPECT_NO_THROW(c.set(k, v)) << k;
  }
}

class CommandsTest : public ::testing::Test {
 protected:
  test::TempDir dir;
  RunConfig cfg;
  void SetUp() override {
    test::write_rule_dataset(dir.path(), 8);
    cfg = cli::resolve_config("wn18rr-v1", {},
                              {{"data.root", dir.path().string()},
                               {"data.train_dir", "tiny"},
                               {"data.inductive_dir", "tiny_ind"},
                               {"model.L", "3"},
                               {"model.d", "8"},
                               {"model.d_l", "4"},
                               {"train.epochs", "2"},
                               {"train.lr", "0.005"},
                               {"run.out_dir", (dir / "out").string()}});
  }
};

TEST_F(CommandsTest, IngestCheckPasses) {
  auto ds = cli::load(cfg);
  auto j = cli::ingest_check(ds);
  EXPECT_TRUE(j["ok"].get<bool>());
  EXPECT_EQ(j["kind"], "inductive");
  EXPECT_TRUE(j["checks"]["test_graph"]["index_complete"].get<bool>());
}

TEST_F(CommandsTest, CountTriplesOrderedOnEveryQuery) {
  auto ds = cli::load(cfg);
  auto res = cli::count_validation_triples(ds, 3, 0, 1, 2);
  EXPECT_EQ(res.summary.queries, 2 * ds.valid.size());
  EXPECT_DOUBLE_EQ(res.summary.ordered_fraction(), 1.0);
  auto sampled = cli::count_validation_triples(ds, 3, 5, 1, 1);
  EXPECT_EQ(sampled.summary.queries, 5u);
}

TEST_F(CommandsTest, TrainWritesArtifactsAndReportsParameterCount) {
  std::vector<json> events;
  auto res = cli::train_command(cfg, [&](const json& j) { events.push_back(j); });
  ASSERT_FALSE(events.empty());
  EXPECT_EQ(events.front()["event"], "model");
  EXPECT_EQ(events.front()["parameter_count"], model::parameter_count(cfg.model, 3));
  EXPECT_EQ(res.train.epochs.size(), 2u);
  const auto out = dir / "out";
  for (const char* f : {"manifest.json", "metrics_test.json", "test_ranks.csv", "train_log.jsonl",
                        "checkpoint_last.json", "checkpoint_best.bin"})
    EXPECT_TRUE(std::filesystem::exists(out / f)) << f;
  std::ifstream in(out / "manifest.json");
  auto man = json::parse(in);
  EXPECT_EQ(man["command"], "train");
  EXPECT_EQ(man["config"], cfg.to_json());
  EXPECT_GE(res.test.mrr, 0.0);
  EXPECT_LE(res.test.mrr, 1.0);
}

TEST(CliBinary, ToyPathAnalysisAndErrorReporting) {
  test::TempDir dir;
  auto ok = run_cli("analyze-paths --toy --L 3 --out " + (dir / "a").string(), dir);
  EXPECT_EQ(ok.code, 0) << ok.err;
  auto j = json::parse(ok.out);
  EXPECT_EQ(j["principle_failures"], 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "a" / "paths_report.json"));

  auto bad = run_cli("count-triples --preset wn18rr-v1 --model.d oops", dir);
  EXPECT_EQ(bad.code, 2);
  auto e = json::parse(bad.err);
  EXPECT_EQ(e["key"], "model.d");

  auto unknown = run_cli("ingest-check --preset nope", dir);
  EXPECT_EQ(unknown.code, 2);
  EXPECT_EQ(json::parse(unknown.err)["key"], "preset");

  auto sim = run_cli("entropy-sim --family translation --hops 2 --samples 10000 --out " + (dir / "e").string(), dir);
  EXPECT_EQ(sim.code, 0) << sim.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "e" / "entropy_report.json"));
}
