#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "theseus/pipeline.hpp"

using namespace theseus;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_config() {
  return json::parse(R"({
    "seed": 3,
    "synthetic": {"authors": 3, "delta": 0.4, "sources": 16, "words": 60},
    "paraphrasers": [{"name": "author2", "backend": "synthetic",
                      "synthetic": {"lex_rate": 0.5, "injection_rate": 0.5, "style_target_author": "author2",
                                    "synonyms": "@topics"}}],
    "iterations": 2,
    "detection": [{"kind": "normal", "llm_author": "author2", "human_author": "author0"}],
    "llm_authors": {"author2": "author2"}
  })");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(THESEUS_CLI_PATH) + " -q " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ParsesDemoConfig) {
  const auto cfg = load_experiment_config(fs::path(THESEUS_SOURCE_DIR) / "configs" / "demo.json");
  ASSERT_TRUE(cfg.synthetic.has_value());
  EXPECT_EQ(cfg.paraphrasers.size(), 1u);
  EXPECT_EQ(cfg.detection.size(), 3u);
  EXPECT_EQ(resolved_config(cfg), resolved_config(cfg));
}

TEST(Config, Errors) {
  auto j = small_config();
  j["mystery"] = 1;
  EXPECT_THROW(parse_experiment_config(j), ConfigError);
  j = small_config();
  j["features"] = {{"lexicon", "/nonexistent/lexicon.txt"}};
  EXPECT_THROW(parse_experiment_config(j), ConfigError);
  j = small_config();
  j["iterations"] = 0;
  EXPECT_THROW(parse_experiment_config(j), ConfigError);
  j = small_config();
  j.erase("synthetic");
  EXPECT_THROW(parse_experiment_config(j), ConfigError);
  EXPECT_THROW(load_experiment_config("/nonexistent/config.json"), ConfigError);
}

TEST(Pipeline, WritesArtifactsAndIsReproducible) {
  const auto root = theseus::testing::temp_dir("pipeline");
  const auto cfg = parse_experiment_config(small_config());
  run_pipeline(cfg, root / "a");
  for (const char* f : {"f1_table.csv", "drift.csv", "validation.json", "pca.csv", "manifest.json", "reports.json",
                        "provenance.json", "failures.json", "nearer.csv", "detection.csv", "stats.json"}) {
    EXPECT_TRUE(fs::exists(root / "a" / f)) << f;
  }
  bool confusion = false;
  for (const auto& e : fs::directory_iterator(root / "a")) {
    confusion |= e.path().filename().string().starts_with("confusion_");
  }
  EXPECT_TRUE(confusion);
  EXPECT_FALSE(fs::exists(root / "a" / "FAILED"));
  EXPECT_EQ(slurp(root / "a" / "f1_table.csv").rfind("paraphraser,iteration,f1,drop_pct", 0), 0u);

  run_pipeline(cfg, root / "b");
  for (const char* f : {"f1_table.csv", "drift.csv", "pca.csv", "validation.json"}) {
    EXPECT_EQ(slurp(root / "a" / f), slurp(root / "b" / f)) << f;
  }
  EXPECT_FALSE(summarize_run(root / "a").empty());
  EXPECT_THROW(run_pipeline(cfg, root / "a"), Error);
  fs::remove_all(root);
}

TEST(Pipeline, StageErrorNamesStageAndLeavesMarker) {
  const auto root = theseus::testing::temp_dir("pipeline-fail");
  auto j = small_config();
  j["llm_authors"] = {{"author2", "nobody"}};
  const auto cfg = parse_experiment_config(j);
  try {
    run_pipeline(cfg, root / "run");
    FAIL();
  } catch (const StageError& e) {
    EXPECT_FALSE(e.stage().empty());
    EXPECT_EQ(std::string(e.what()).rfind("[" + e.stage() + "]", 0), 0u);
  }
  EXPECT_TRUE(fs::exists(root / "run" / "FAILED"));
  EXPECT_THROW(summarize_run(root / "empty"), IoError);
  fs::remove_all(root);
}

TEST(Cli, ExitCodes) {
  const auto dir = theseus::testing::temp_dir("cli");
  const std::string d = dir.string();
  EXPECT_EQ(cli("--help"), 0);
  EXPECT_EQ(cli("--no-such-flag"), 2);
  EXPECT_EQ(cli("corpus validate"), 2);
  EXPECT_EQ(cli("corpus validate " + d + "/missing.jsonl"), 1);

  EXPECT_EQ(cli("synth generate --authors 2 --sources 8 --words 40 --seed 1 --out " + d + "/c.jsonl"), 0);
  EXPECT_EQ(cli("corpus validate " + d + "/c.jsonl"), 0);
  EXPECT_EQ(cli("corpus validate " + d + "/c.jsonl --bogus"), 2);
  EXPECT_EQ(cli("synth generate --authors 1 --out " + d + "/x.jsonl"), 1);
  EXPECT_EQ(cli("synth generate --authors many"), 2);
  EXPECT_EQ(cli("corpus split " + d + "/c.jsonl --fraction 0.5 --out " + d + "/split"), 0);
  EXPECT_EQ(cli("corpus filter " + d + "/c.jsonl --min-words 10 --out " + d + "/f.jsonl"), 0);
  EXPECT_EQ(cli("corpus filter " + d + "/c.jsonl"), 2);
  EXPECT_EQ(cli("features fit " + d + "/c.jsonl --out " + d + "/schema.json"), 0);
  EXPECT_EQ(cli("features extract " + d + "/c.jsonl --schema " + d + "/schema.json --out " + d + "/v.csv"), 0);
  EXPECT_EQ(cli("features extract " + d + "/c.jsonl --schema " + d + "/nope.json"), 1);
  EXPECT_EQ(cli("style validate " + d + "/c.jsonl --out " + d + "/val.json"), 0);
  EXPECT_EQ(cli("style pca " + d + "/c.jsonl --k 0"), 2);
  EXPECT_EQ(cli("train " + d + "/c.jsonl --kind nonsense"), 1);
  EXPECT_EQ(cli("eval attribution " + d + "/c.jsonl --paraphraser nobody"), 1);
  EXPECT_EQ(cli("eval external " + d + "/c.jsonl --predictions " + d + "/none.csv"), 1);
  EXPECT_EQ(cli("report " + d + "/split"), 1);
  EXPECT_EQ(cli("run"), 1);
  fs::remove_all(dir);
}
