#include "theseus/paraphrase.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "theseus/errors.hpp"
#include "theseus/hashing.hpp"
#include "theseus/text.hpp"

namespace theseus {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Stream : std::uint64_t { kSelect = 1, kLex, kLexPick, kOrder, kInject, kInjectPick, kInsert, kInsertPick };

std::mt19937_64 stream(const SyntheticParaphraserConfig& c, std::uint64_t text_hash, Stream s) {
  return std::mt19937_64(combine_seeds({c.seed, text_hash, s}));
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

struct SentenceParts {
  std::string lead;
  std::string body;
  std::string tail;
};

SentenceParts cut(std::string_view s) {
  std::size_t b = 0;
  while (b < s.size() && is_space(s[b])) ++b;
  std::size_t e = s.size();
  while (e > b && is_space(s[e - 1])) --e;
  return {std::string(s.substr(0, b)), std::string(s.substr(b, e - b)), std::string(s.substr(e))};
}

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

std::string synthetic_paraphrase(const SyntheticParaphraserConfig& c, std::string_view text) {
  const auto spans = split_sentences(text);
  if (spans.empty()) return std::string(text);
  const std::size_t n = spans.size();
  const std::uint64_t h = fnv1a64(text);
  const SynonymLexicon& synonyms = c.synonyms ? *c.synonyms : demo_synonyms();

  std::vector<bool> selected(n, true);
  if (c.sentence_fraction < 1.0) {
    const auto count = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(c.sentence_fraction * static_cast<double>(n))), 1, n);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    auto rng = stream(c, h, kSelect);
    std::shuffle(order.begin(), order.end(), rng);
    selected.assign(n, false);
    for (std::size_t i = 0; i < count; ++i) selected[order[i]] = true;
  }

  std::unordered_set<std::string> function_words(default_function_words().begin(), default_function_words().end());
  std::vector<double> target_cdf;
  if (c.style_target) {
    function_words.insert(c.style_target->function_words.begin(), c.style_target->function_words.end());
    double acc = 0.0;
    for (double p : c.style_target->function_word_dist) target_cdf.push_back(acc += p);
  }

  auto lex_u = stream(c, h, kLex);
  auto lex_pick = stream(c, h, kLexPick);
  auto inj_u = stream(c, h, kInject);
  auto inj_pick = stream(c, h, kInjectPick);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto ins_u = stream(c, h, kInsert);
  auto draw_function_word = [&](double u) {
    const auto k = static_cast<std::size_t>(std::upper_bound(target_cdf.begin(), target_cdf.end(), u * target_cdf.back()) -
                                            target_cdf.begin());
    return c.style_target->function_words[std::min(k, target_cdf.size() - 1)];
  };
  std::size_t insert_budget = 0;  // keeps the output under twice the input length
  for (const auto& piece : segment_words(text)) insert_budget += piece.is_word;

  std::vector<SentenceParts> parts;
  parts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto p = cut(text.substr(spans[i].begin, spans[i].end - spans[i].begin));
    std::vector<std::string> pieces;
    std::vector<std::size_t> word_at;
    std::vector<std::string> content;
    for (auto& piece : segment_words(p.body)) {
      if (!piece.is_word) {
        pieces.push_back(piece.text);
        continue;
      }
      const double ul = unit(lex_u), pl = unit(lex_pick), ui = unit(inj_u), pi = unit(inj_pick);
      const std::string lw = to_lower(piece.text);
      std::string out = piece.text;
      if (selected[i]) {
        if (function_words.contains(lw)) {
          if (c.style_target && ui < c.injection_rate && !target_cdf.empty()) {
            out = match_case(piece.text, draw_function_word(pi));
          }
        } else {
          if (ul < c.lex_rate) {
            if (const auto* syns = synonyms.find(lw)) {
              const auto k = std::min(syns->size() - 1, static_cast<std::size_t>(pl * static_cast<double>(syns->size())));
              out = match_case(piece.text, (*syns)[k]);
            }
          }
          content.push_back(to_lower(out));
        }
      }
      word_at.push_back(pieces.size());
      pieces.push_back(std::move(out));
    }

    // Insertion: lengthen the sentence toward the target's mean length with
    // words drawn in the target's function/content proportion.
    const double u_ins = unit(ins_u);
    if (selected[i] && c.style_target && !target_cdf.empty() && !word_at.empty() && u_ins < c.injection_rate) {
      const auto want = static_cast<long>(std::llround(c.style_target->sentence_length.mean));
      const long deficit = want - static_cast<long>(word_at.size());
      std::mt19937_64 pick(combine_seeds({c.seed, h, kInsertPick, i}));
      std::vector<std::vector<std::string>> after(pieces.size());
      for (long k = 0; k < deficit && insert_budget > 0; ++k, --insert_budget) {
        std::string w;
        if (content.empty() || unit(pick) < c.style_target->function_word_share) {
          w = draw_function_word(unit(pick));
        } else {
          const auto& base = content[static_cast<std::size_t>(unit(pick) * static_cast<double>(content.size())) %
                                     content.size()];
          const auto* syns = synonyms.find(base);
          w = syns && !syns->empty()
                  ? (*syns)[static_cast<std::size_t>(unit(pick) * static_cast<double>(syns->size())) % syns->size()]
                  : base;
        }
        const auto slot = word_at[static_cast<std::size_t>(unit(pick) * static_cast<double>(word_at.size())) %
                                  word_at.size()];
        after[slot].push_back(std::move(w));
      }
      std::string body;
      for (std::size_t k = 0; k < pieces.size(); ++k) {
        body += pieces[k];
        for (const auto& w : after[k]) body += " " + w;
      }
      p.body = std::move(body);
    } else {
      std::string body;
      for (const auto& piece : pieces) body += piece;
      p.body = std::move(body);
    }
    parts.push_back(std::move(p));
  }

  auto order_u = stream(c, h, kOrder);
  std::vector<double> swap_u(n > 1 ? n - 1 : 0);
  for (double& u : swap_u) u = unit(order_u);
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = 0; i + 1 < n;) {
    if (selected[i] && selected[i + 1] && swap_u[i] < c.order_rate) {
      std::swap(perm[i], perm[i + 1]);
      i += 2;
    } else {
      ++i;
    }
  }
  std::string out;
  out.reserve(text.size() + 16);
  for (std::size_t i = 0; i < n; ++i) out += parts[i].lead + parts[perm[i]].body + parts[i].tail;
  return out;
}

std::string strip_markdown(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    std::string_view s = std::string_view(line).substr(b);
    if (s.starts_with("```") || s.starts_with("---") || s.starts_with("***")) continue;
    while (!s.empty() && s.front() == '#') s.remove_prefix(1);
    if (s.size() >= 2 && (s[0] == '-' || s[0] == '*' || s[0] == '+' || s[0] == '>') && s[1] == ' ') s.remove_prefix(2);
    std::size_t d = 0;
    while (d < s.size() && std::isdigit(static_cast<unsigned char>(s[d]))) ++d;
    if (d > 0 && d + 1 < s.size() && (s[d] == '.' || s[d] == ')') && s[d + 1] == ' ') s.remove_prefix(d + 2);
    std::string clean;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if ((s[i] == '*' || s[i] == '_') && i + 1 < s.size() && s[i + 1] == s[i]) {
        ++i;
        continue;
      }
      if (s[i] == '`') continue;
      clean += s[i];
    }
    const auto first = clean.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = clean.find_last_not_of(" \t");
    lines.push_back(clean.substr(first, last - first + 1));
  }
  std::string out;
  for (const auto& l : lines) {
    if (!out.empty()) out += ' ';
    out += l;
  }
  return out;
}

void validate_spec(const ParaphraserSpec& spec) {
  if (spec.name.empty()) throw ConfigError("paraphraser needs a name");
  if (spec.backend == BackendKind::Synthetic) {
    if (!spec.synthetic || spec.llm) throw ConfigError("paraphraser " + spec.name + ": synthetic backend needs exactly a synthetic config");
    const auto& c = *spec.synthetic;
    if (!in_unit(c.lex_rate) || !in_unit(c.order_rate) || !in_unit(c.injection_rate)) {
      throw ConfigError("paraphraser " + spec.name + ": rates must lie in [0, 1]");
    }
    if (!(c.sentence_fraction > 0.0 && c.sentence_fraction <= 1.0)) {
      throw ConfigError("paraphraser " + spec.name + ": sentence_fraction must lie in (0, 1]");
    }
    if (c.injection_rate > 0.0 && !c.style_target) {
      throw ConfigError("paraphraser " + spec.name + ": injection_rate needs a style_target");
    }
    if (c.style_target) validate_profile(*c.style_target);
  } else {
    if (!spec.llm || spec.synthetic) throw ConfigError("paraphraser " + spec.name + ": LLM backend needs exactly an llm config");
    if (spec.llm->prompt_template.find("{text}") == std::string::npos) {
      throw ConfigError("paraphraser " + spec.name + ": prompt template lacks {text}");
    }
    if (spec.llm->max_retries < 0) throw ConfigError("paraphraser " + spec.name + ": max_retries must be >= 0");
  }
}

Paraphraser::Paraphraser(ParaphraserSpec spec, std::shared_ptr<Transport> transport, SleepFn sleep)
    : spec_(std::move(spec)), transport_(std::move(transport)), sleep_(std::move(sleep)) {
  validate_spec(spec_);
  if (spec_.backend == BackendKind::ExternalLLM) {
    if (spec_.llm->cache_dir) cache_ = std::make_unique<JsonCache>(*spec_.llm->cache_dir);
    limiter_ = std::make_unique<RateLimiter>(spec_.llm->requests_per_second, sleep_);
  }
}

std::size_t Paraphraser::network_calls() const { return transport_ ? transport_->calls() : 0; }

std::string Paraphraser::paraphrase(std::string_view text) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw PreconditionError("paraphrase: empty text");
  }
  if (spec_.backend == BackendKind::Synthetic) {
    auto out = synthetic_paraphrase(*spec_.synthetic, text);
    if (out.empty()) throw InvalidResponseError("synthetic paraphraser produced empty text");
    return out;
  }
  return call_llm(text);
}

std::string Paraphraser::call_llm(std::string_view text) {
  const auto& cfg = *spec_.llm;
  std::string prompt = cfg.prompt_template;
  for (std::size_t pos = 0; (pos = prompt.find("{text}", pos)) != std::string::npos;) {
    prompt.replace(pos, 6, text);
    pos += text.size();
  }
  const std::string key = sha256_hex(cfg.model + '\n' + prompt);
  if (cache_) {
    if (auto rec = cache_->get(key)) {
      const auto it = rec->find("response");
      if (it != rec->end() && it->is_string() && !it->get<std::string>().empty()) return it->get<std::string>();
    }
  }
  const auto api_key = env_value(cfg.api_key_env);
  if (!api_key) throw BackendError("paraphraser " + spec_.name + " needs credentials in $" + cfg.api_key_env);
  if (!transport_) transport_ = make_http_transport();

  HttpRequest req;
  req.url = cfg.endpoint;
  req.headers = {{"Authorization", "Bearer " + *api_key}};
  req.body = json{{"model", cfg.model},
                  {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                  {"max_tokens", cfg.max_output_tokens}}
                 .dump();
  RetryPolicy policy;
  policy.max_attempts = cfg.max_retries + 1;
  const auto resp = post_with_retry(*transport_, req, *limiter_, policy, sleep_);
  if (resp.status != 200) {
    throw BackendError(fmt::format("paraphraser {}: {}", spec_.name,
                                   resp.status ? fmt::format("HTTP {} {}", resp.status, resp.body.substr(0, 200))
                                               : resp.error));
  }
  std::string content;
  try {
    content = json::parse(resp.body).at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw InvalidResponseError(std::string("malformed completion response: ") + e.what());
  }
  std::string cleaned = strip_markdown(content);
  if (cleaned.empty()) throw InvalidResponseError("paraphraser " + spec_.name + " returned an empty response");
  if (cache_) {
    cache_->put(key, json{{"model", cfg.model}, {"prompt_sha256", sha256_hex(prompt)}, {"raw", content},
                          {"response", cleaned}});
  }
  return cleaned;
}

ChainBuildResult build_chains(std::span<const Document> originals, Paraphraser& paraphraser, int iterations,
                              std::size_t jobs) {
  if (iterations < 1) throw PreconditionError("build_chains: iterations must be >= 1");
  for (const auto& d : originals) {
    if (d.iteration != 0) throw PreconditionError("build_chains: " + d.id + " is not an original");
  }
  const std::string& name = paraphraser.spec().name;
  struct Slot {
    ParaphraseChain chain;
    std::optional<ChainFailure> failure;
    std::vector<ProvenanceRecord> provenance;
  };
  std::vector<Slot> slots(originals.size());

  auto work = [&](std::size_t i) {
    Slot& slot = slots[i];
    slot.chain.chain_id = originals[i].id;
    slot.chain.paraphraser = name;
    slot.chain.documents.push_back(originals[i]);
    for (int n = 1; n <= iterations; ++n) {
      const Document& parent = slot.chain.documents.back();
      try {
        const std::string parent_hash = sha256_hex(parent.text);
        Document next = make_paraphrase(parent, name, paraphraser.paraphrase(parent.text));
        slot.provenance.push_back({next.id, parent.id, parent_hash, sha256_hex(next.text), name});
        slot.chain.documents.push_back(std::move(next));
      } catch (const std::exception& e) {
        spdlog::warn("chain {} stopped at iteration {}: {}", slot.chain.chain_id, n, e.what());
        slot.failure = ChainFailure{slot.chain.chain_id, n, e.what()};
        break;
      }
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, originals.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < originals.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < originals.size();) work(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  ChainBuildResult result;
  for (auto& s : slots) {
    if (s.failure) result.failures.push_back(std::move(*s.failure));
    result.provenance.insert(result.provenance.end(), s.provenance.begin(), s.provenance.end());
    result.chains.push_back(std::move(s.chain));
  }
  return result;
}

Corpus append_chains(const Corpus& corpus, std::span<const ParaphraseChain> chains) {
  std::vector<Document> docs = corpus.documents();
  for (const auto& chain : chains) {
    for (std::size_t i = 1; i < chain.documents.size(); ++i) docs.push_back(chain.documents[i]);
  }
  return Corpus(std::move(docs));
}

json failures_to_json(std::span<const ChainFailure> failures) {
  json out = json::array();
  for (const auto& f : failures) out.push_back({{"chain_id", f.chain_id}, {"iteration", f.iteration}, {"error", f.error}});
  return out;
}

json provenance_to_json(std::span<const ProvenanceRecord> records) {
  json out = json::array();
  for (const auto& r : records) {
    out.push_back({{"doc_id", r.doc_id},
                   {"parent_id", r.parent_id},
                   {"parent_sha256", r.parent_sha256},
                   {"text_sha256", r.text_sha256},
                   {"paraphraser", r.paraphraser}});
  }
  return out;
}

json to_json(const ParaphraserSpec& spec) {
  json j{{"name", spec.name}, {"backend", spec.backend == BackendKind::Synthetic ? "synthetic" : "llm"}};
  if (spec.synthetic) {
    const auto& c = *spec.synthetic;
    json s{{"lex_rate", c.lex_rate},
           {"order_rate", c.order_rate},
           {"sentence_fraction", c.sentence_fraction},
           {"injection_rate", c.injection_rate},
           {"seed", c.seed}};
    if (c.style_target) s["style_target"] = to_json(*c.style_target);
    if (c.synonyms) s["synonym_entries"] = c.synonyms->entries;
    j["synthetic"] = std::move(s);
  }
  if (spec.llm) {
    const auto& l = *spec.llm;
    j["llm"] = {{"endpoint", l.endpoint},
                {"model", l.model},
                {"prompt_template", l.prompt_template},
                {"max_output_tokens", l.max_output_tokens},
                {"requests_per_second", l.requests_per_second},
                {"max_retries", l.max_retries},
                {"api_key_env", l.api_key_env}};
    if (l.cache_dir) j["llm"]["cache_dir"] = l.cache_dir->string();
  }
  return j;
}

ParaphraserSpec paraphraser_spec_from_json(const json& j, const fs::path& base_dir) {
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() || base_dir.empty() ? fs::path(p) : base_dir / p; };
  try {
    ParaphraserSpec spec;
    spec.name = j.at("name").get<std::string>();
    const auto backend = j.value("backend", std::string("synthetic"));
    if (backend == "synthetic") {
      spec.backend = BackendKind::Synthetic;
      const json s = j.value("synthetic", json::object());
      SyntheticParaphraserConfig c;
      c.lex_rate = s.value("lex_rate", 0.0);
      c.order_rate = s.value("order_rate", 0.0);
      c.sentence_fraction = s.value("sentence_fraction", 1.0);
      c.injection_rate = s.value("injection_rate", 0.0);
      c.seed = s.value("seed", std::uint64_t{0});
      if (s.contains("style_target") && s["style_target"].is_object()) c.style_target = profile_from_json(s["style_target"]);
      if (s.contains("synonyms")) {
        c.synonyms = std::make_shared<SynonymLexicon>(load_synonyms(resolve(s["synonyms"].get<std::string>())));
      } else if (s.contains("synonym_entries")) {
        SynonymLexicon lex;
        lex.entries = s["synonym_entries"].get<std::map<std::string, std::vector<std::string>>>();
        c.synonyms = std::make_shared<SynonymLexicon>(std::move(lex));
      }
      spec.synthetic = std::move(c);
    } else if (backend == "llm") {
      spec.backend = BackendKind::ExternalLLM;
      const json l = j.value("llm", json::object());
      LlmConfig c;
      c.endpoint = l.value("endpoint", c.endpoint);
      c.model = l.value("model", c.model);
      c.prompt_template = l.value("prompt_template", c.prompt_template);
      c.max_output_tokens = l.value("max_output_tokens", c.max_output_tokens);
      c.requests_per_second = l.value("requests_per_second", c.requests_per_second);
      c.max_retries = l.value("max_retries", c.max_retries);
      c.api_key_env = l.value("api_key_env", c.api_key_env);
      if (l.contains("cache_dir")) c.cache_dir = resolve(l["cache_dir"].get<std::string>());
      spec.llm = std::move(c);
    } else {
      throw ConfigError("paraphraser " + spec.name + ": unknown backend '" + backend + "'");
    }
    validate_spec(spec);
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed paraphraser spec: ") + e.what());
  }
}

}  // namespace theseus
