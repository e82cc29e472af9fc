#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "theseus/classify.hpp"
#include "theseus/contentsim.hpp"
#include "theseus/corpus.hpp"
#include "theseus/errors.hpp"
#include "theseus/features.hpp"
#include "theseus/paraphrase.hpp"
#include "theseus/synthgen.hpp"

namespace theseus {

inline constexpr std::string_view kToolVersion = "0.3.0";

/// Error raised by one pipeline stage; what() starts with "[stage] ".
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what);
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct SyntheticCorpusConfig {
  std::size_t authors = 3;
  double delta = 0.3;
  std::size_t sources = 60;
  std::size_t words = 120;
  std::string dataset = "synthetic";
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  std::vector<std::filesystem::path> corpus_paths;
  std::optional<SyntheticCorpusConfig> synthetic;
  std::size_t min_words = 0;
  SplitSpec split;
  FeatureConfig features;
  std::optional<std::filesystem::path> lexicon_path;
  double style_lambda = 1e-3;
  double alpha = 0.001;
  ClassifierConfig classifier;
  std::vector<ParaphraserSpec> paraphrasers;
  int iterations = 3;
  std::vector<GroundTruthPolicy> policies{GroundTruthPolicy::Traditional, GroundTruthPolicy::Alternative};
  std::vector<DetectionScenario> detection;
  EmbeddingConfig embedding;
  std::map<std::string, std::string> llm_authors;  // paraphraser -> author whose originals are its G texts
  int pca_components = 2;
  std::size_t jobs = 1;
  std::filesystem::path output_dir = "runs";
  std::uint64_t seed = 0;
  nlohmann::json source;  // the config as read, for the manifest
};

/// Parses a JSON config; relative paths resolve against `base_dir`. Unknown
/// keys, bad values and missing input files raise ConfigError.
ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Normalized view of the config (what actually ran).
nlohmann::json resolved_config(const ExperimentConfig& config);

/// Originals from the configured files or synthetic generator, validated and
/// length-filtered, together with the synthetic profiles when generated.
struct LoadedCorpus {
  Corpus corpus;
  std::vector<SyntheticAuthorProfile> profiles;
};
LoadedCorpus load_experiment_corpus(const ExperimentConfig& config);

/// Runs every stage and writes the artifacts into `run_dir` (created; must be
/// empty if it exists). On failure a FAILED file names the stage and the
/// error is rethrown as StageError.
std::filesystem::path run_pipeline(const ExperimentConfig& config, const std::filesystem::path& run_dir);

/// `<output_dir>/run-<UTC timestamp>-<config hash prefix>`.
std::filesystem::path default_run_dir(const ExperimentConfig& config);

/// Renders summary.txt from a finished run directory. Throws IoError when the
/// directory holds no run.
std::string summarize_run(const std::filesystem::path& run_dir);

}  // namespace theseus
