#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace theseus {

/// One text with its provenance. Iteration 0 is an original; iteration n is
/// the n-th sequential paraphrase of that original.
struct Document {
  std::string id;
  std::string dataset;
  std::string origin_author;
  std::optional<std::string> paraphraser;
  int iteration = 0;
  std::optional<std::string> parent_id;
  std::string source_key;
  std::string text;
  std::size_t word_count = 0;

  bool operator==(const Document&) const = default;
};

/// Builds an iteration-0 document with `word_count` filled from the tokenizer.
Document make_original(std::string id, std::string dataset, std::string author, std::string source_key,
                       std::string text);

/// Builds the paraphrase of `parent` produced by `paraphraser`.
Document make_paraphrase(const Document& parent, std::string paraphraser, std::string text);

/// Validated, immutable collection of documents.
///
/// Construction checks: unique ids; iteration 0 iff no paraphraser iff no
/// parent; every parent exists with iteration - 1 and the same origin author,
/// dataset and source key (and paraphraser, when the parent is itself a
/// paraphrase); word_count matches the tokenizer.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Document> documents);

  const std::vector<Document>& documents() const noexcept { return docs_; }
  std::size_t size() const noexcept { return docs_.size(); }
  bool empty() const noexcept { return docs_.empty(); }
  auto begin() const noexcept { return docs_.begin(); }
  auto end() const noexcept { return docs_.end(); }

  const Document* find(std::string_view id) const;
  const Document& at(std::string_view id) const;

  /// Sorted distinct origin authors.
  std::vector<std::string> authors() const;
  /// Sorted distinct paraphraser labels.
  std::vector<std::string> paraphrasers() const;
  std::vector<std::string> datasets() const;
  std::vector<std::string> source_keys() const;
  int max_iteration() const;

  /// Documents satisfying `pred`, as a new corpus. `pred` must keep chains closed
  /// under parents.
  template <typename Pred>
  Corpus filter(Pred&& pred) const {
    std::vector<Document> kept;
    for (const auto& d : docs_) {
      if (pred(d)) kept.push_back(d);
    }
    return Corpus(std::move(kept));
  }

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Throws IntegrityError describing the first violated invariant.
void check_integrity(std::span<const Document> documents);

nlohmann::json to_json(const Document& doc);
Document document_from_json(const nlohmann::json& j);

/// Line-delimited JSON, one document per line. Blank lines are skipped.
Corpus read_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

/// Sequential chain T^0 -> T^1 -> ... produced by one paraphraser.
struct ParaphraseChain {
  std::string chain_id;  // id of T^0
  std::string paraphraser;
  std::vector<Document> documents;  // documents[n] has iteration n

  const Document& original() const { return documents.front(); }
  int length() const { return static_cast<int>(documents.size()) - 1; }
};

/// Chains for one paraphraser: one per original that has at least one
/// paraphrase by it, followed as far as the corpus goes.
std::vector<ParaphraseChain> extract_chains(const Corpus& corpus, std::string_view paraphraser);

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
  double train_fraction = 0.5;
  std::uint64_t seed = 0;
};

struct SplitResult {
  Corpus train;
  Corpus test;
  std::vector<std::string> train_keys;
  std::vector<std::string> test_keys;
  std::vector<std::string> warnings;
};

/// Partitions by source key: every document sharing a key, for every author
/// and iteration, lands on the same side. round(train_fraction * #keys) keys
/// go to train after a seeded shuffle of the sorted keys.
SplitResult split(const Corpus& corpus, const SplitSpec& spec);

// ---------------------------------------------------------------------------
// Ground truth

enum class GroundTruthPolicy { Traditional, Alternative };

std::string to_string(GroundTruthPolicy policy);
GroundTruthPolicy parse_policy(std::string_view name);

struct LabeledDocument {
  std::string doc_id;
  std::string label;

  bool operator==(const LabeledDocument&) const = default;
};

/// Labels every document. Traditional keeps the origin author at every
/// iteration; Alternative assigns paraphrased documents to their paraphraser,
/// which must be one of the candidate authors (default: the corpus' origin
/// authors), else LabelingError.
std::vector<LabeledDocument> label(const Corpus& corpus, GroundTruthPolicy policy);
std::vector<LabeledDocument> label(const Corpus& corpus, GroundTruthPolicy policy,
                                   std::span<const std::string> candidate_authors);

enum class DetectionKind { Normal, Traditional, Alternative };

std::string to_string(DetectionKind kind);
DetectionKind parse_detection_kind(std::string_view name);

struct DetectionScenario {
  DetectionKind kind = DetectionKind::Normal;
  std::string paraphraser;
  std::string llm_author;
  std::string human_author = "Human";
};

inline constexpr std::string_view kHumanLabel = "human";
inline constexpr std::string_view kAiLabel = "AI";

/// Binary human/AI labels:
///   Normal      T0(human) -> human, T0(llm) -> AI
///   Traditional T1(human) -> human, T1(llm) -> AI
///   Alternative T0(human) -> human, T1(human) -> AI
/// where T1 means the first paraphrase by `scenario.paraphraser`.
std::vector<LabeledDocument> detection_scenario(const Corpus& corpus, const DetectionScenario& scenario);

// ---------------------------------------------------------------------------

/// Keeps documents with at least `min_words` words whose ancestors are all kept.
Corpus filter_by_length(const Corpus& corpus, std::size_t min_words);

}  // namespace theseus
