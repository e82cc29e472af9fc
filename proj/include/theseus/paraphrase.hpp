#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "theseus/corpus.hpp"
#include "theseus/lexicon.hpp"
#include "theseus/synthgen.hpp"
#include "theseus/transport.hpp"

namespace theseus {

struct SyntheticParaphraserConfig {
  double lex_rate = 0.0;           // share of content words replaced by a synonym
  double order_rate = 0.0;         // share of adjacent sentence pairs swapped
  double sentence_fraction = 1.0;  // share of sentences edited at all
  std::optional<SyntheticAuthorProfile> style_target;
  double injection_rate = 0.0;     // share of function words redrawn from the target
  std::uint64_t seed = 0;
  std::shared_ptr<const SynonymLexicon> synonyms;  // null: bundled demo list
};

inline constexpr std::string_view kDefaultPrompt = "paraphrase the following text. keep similar length\n\n{text}";

struct LlmConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-3.5-turbo";
  std::string prompt_template{kDefaultPrompt};
  int max_output_tokens = 1024;
  double requests_per_second = 1.0;
  int max_retries = 5;
  std::string api_key_env = "THESEUS_LLM_API_KEY";
  std::optional<std::filesystem::path> cache_dir;
};

enum class BackendKind { ExternalLLM, Synthetic };

struct ParaphraserSpec {
  std::string name;
  BackendKind backend = BackendKind::Synthetic;
  std::optional<LlmConfig> llm;
  std::optional<SyntheticParaphraserConfig> synthetic;
};

/// Throws ConfigError unless exactly the backend's config is present, rates
/// lie in range and the prompt template contains `{text}`.
void validate_spec(const ParaphraserSpec& spec);

/// Deterministic text rewriting. In order, within the selected sentences:
/// synonym substitution of content words, swaps of adjacent sentence pairs,
/// then function words redrawn from the style target's distribution.
/// Each knob has its own random stream with one draw per word (or pair), so
/// raising a rate only adds edits. All rates 0 returns the input unchanged.
std::string synthetic_paraphrase(const SyntheticParaphraserConfig& config, std::string_view text);

/// Removes markdown headers, bullets, emphasis markers and code fences.
std::string strip_markdown(std::string_view text);

class Paraphraser {
 public:
  explicit Paraphraser(ParaphraserSpec spec, std::shared_ptr<Transport> transport = nullptr, SleepFn sleep = {});

  /// Throws PreconditionError for empty text, BackendError when the API keeps
  /// failing and InvalidResponseError for an empty or malformed response.
  std::string paraphrase(std::string_view text);

  const ParaphraserSpec& spec() const noexcept { return spec_; }
  std::size_t network_calls() const;

 private:
  std::string call_llm(std::string_view text);

  ParaphraserSpec spec_;
  std::shared_ptr<Transport> transport_;
  std::unique_ptr<JsonCache> cache_;
  std::unique_ptr<RateLimiter> limiter_;
  SleepFn sleep_;
};

struct ChainFailure {
  std::string chain_id;
  int iteration = 0;
  std::string error;
};

struct ProvenanceRecord {
  std::string doc_id;
  std::string parent_id;
  std::string parent_sha256;
  std::string text_sha256;
  std::string paraphraser;
};

struct ChainBuildResult {
  std::vector<ParaphraseChain> chains;
  std::vector<ChainFailure> failures;
  std::vector<ProvenanceRecord> provenance;
};

/// Paraphrases each original `iterations` times in sequence. A failure stops
/// that chain only: the documents produced before it are kept and the failure
/// is recorded. `jobs` > 1 runs chains on worker threads; results keep the
/// input order.
ChainBuildResult build_chains(std::span<const Document> originals, Paraphraser& paraphraser, int iterations,
                              std::size_t jobs = 1);

/// The corpus plus every paraphrase of the chains.
Corpus append_chains(const Corpus& corpus, std::span<const ParaphraseChain> chains);

nlohmann::json failures_to_json(std::span<const ChainFailure> failures);
nlohmann::json provenance_to_json(std::span<const ProvenanceRecord> records);

nlohmann::json to_json(const ParaphraserSpec& spec);
/// `base_dir` resolves relative lexicon and cache paths.
ParaphraserSpec paraphraser_spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

}  // namespace theseus
