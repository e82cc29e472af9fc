#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "theseus/classify.hpp"
#include "theseus/errors.hpp"

namespace theseus {

using nlohmann::json;

std::vector<double> EvaluationReport::f1_series() const {
  std::vector<double> out;
  for (const auto& s : scores) out.push_back(s.f1);
  return out;
}

json EvaluationReport::to_json() const {
  json j{{"kind", kind}, {"setting", setting}, {"paraphraser", paraphraser}, {"classifier", classifier}};
  j["scores"] = json::array();
  for (const auto& s : scores) {
    json row{{"iteration", s.iteration},
             {"f1", s.f1},
             {"pooled_f1", s.pooled_f1},
             {"n", s.n},
             {"f1_by_dataset", s.f1_by_dataset},
             {"confusion", theseus::to_json(s.confusion)}};
    row["drop"] = s.drop ? json(*s.drop) : json(nullptr);
    j["scores"].push_back(std::move(row));
  }
  j["notes"] = notes;
  return j;
}

void compute_drops(EvaluationReport& report) {
  for (std::size_t i = 0; i < report.scores.size(); ++i) {
    if (i == 0) {
      report.scores[i].drop.reset();
      continue;
    }
    const double prev = report.scores[i - 1].f1;
    if (prev > 0.0) {
      report.scores[i].drop = (prev - report.scores[i].f1) / prev;
    } else {
      report.scores[i].drop.reset();
    }
  }
}

void write_f1_csv(std::ostream& out, std::span<const EvaluationReport> reports, bool header) {
  if (header) out << "paraphraser,iteration,f1,drop_pct,setting,pooled_f1,n\n";
  for (const auto& r : reports) {
    for (const auto& s : r.scores) {
      out << r.paraphraser << ',' << s.iteration << ',' << fmt::format("{:.6f}", s.f1) << ','
          << (s.drop ? fmt::format("{:.2f}", *s.drop * 100.0) : std::string()) << ',' << r.setting << ','
          << fmt::format("{:.6f}", s.pooled_f1) << ',' << s.n << '\n';
    }
  }
}

namespace {

struct Scored {
  std::vector<std::string> predictions;
  std::vector<std::string> golds;
};

IterationScore score_groups(int iteration, const std::map<std::string, Scored>& by_dataset,
                            std::span<const std::string> classes) {
  IterationScore s;
  s.iteration = iteration;
  std::vector<std::string> all_pred, all_gold;
  double sum = 0.0;
  for (const auto& [ds, sc] : by_dataset) {
    const double f = macro_f1(sc.predictions, sc.golds);
    s.f1_by_dataset[ds] = f;
    sum += f;
    all_pred.insert(all_pred.end(), sc.predictions.begin(), sc.predictions.end());
    all_gold.insert(all_gold.end(), sc.golds.begin(), sc.golds.end());
  }
  s.n = all_gold.size();
  s.f1 = by_dataset.empty() ? 0.0 : sum / static_cast<double>(by_dataset.size());
  s.pooled_f1 = macro_f1(all_pred, all_gold);
  s.confusion = confusion_matrix(all_pred, all_gold, classes);
  return s;
}

std::vector<Document> training_originals(const Corpus& train, std::string_view dataset,
                                         std::string_view excluded = {}) {
  std::vector<Document> out;
  for (const auto& d : train) {
    if (d.iteration != 0) continue;
    if (!dataset.empty() && d.dataset != dataset) continue;
    if (!excluded.empty() && d.origin_author == excluded) continue;
    out.push_back(d);
  }
  return out;
}

std::vector<std::string> origin_labels(std::span<const Document> docs) {
  std::vector<std::string> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(d.origin_author);
  return out;
}

}  // namespace

AttributionHarness::AttributionHarness(const Corpus& corpus, const SplitSpec& spec, ClassifierConfig config)
    : corpus_(corpus), split_(theseus::split(corpus, spec)), config_(std::move(config)) {
  for (const auto& ds : corpus_.datasets()) {
    const auto docs = training_originals(split_.train, ds);
    if (docs.empty()) throw TrainingError("no training originals for dataset " + ds);
    const auto labels = origin_labels(docs);
    try {
      classifiers_.emplace(ds, TextClassifier::fit(config_, docs, labels));
    } catch (const TrainingError& e) {
      throw TrainingError("dataset " + ds + ": " + e.what());
    }
  }
}

EvaluationReport AttributionHarness::evaluate(GroundTruthPolicy policy, std::string_view paraphraser,
                                              int max_iteration) const {
  int last = 0;
  bool known = false;
  for (const auto& d : split_.test) {
    if (d.paraphraser && *d.paraphraser == paraphraser) {
      known = true;
      last = std::max(last, d.iteration);
    }
  }
  if (!paraphraser.empty() && !known) {
    throw PreconditionError("no test documents paraphrased by '" + std::string(paraphraser) + "'");
  }
  if (max_iteration >= 0) {
    if (max_iteration > last) {
      throw ValidationError(fmt::format("paraphraser '{}' reaches iteration {} only, {} requested", paraphraser, last,
                                        max_iteration));
    }
    last = max_iteration;
  }

  EvaluationReport report;
  report.kind = "attribution";
  report.setting = to_string(policy);
  report.paraphraser = std::string(paraphraser);
  report.classifier = to_string(config_.kind);
  std::set<std::string> all_classes;
  for (const auto& [_, c] : classifiers_) all_classes.insert(c.classes().begin(), c.classes().end());
  const std::vector<std::string> classes(all_classes.begin(), all_classes.end());

  for (int n = 0; n <= last; ++n) {
    std::map<std::string, std::vector<Document>> docs;
    for (const auto& d : split_.test) {
      if (d.iteration != n) continue;
      if (n > 0 && !(d.paraphraser && *d.paraphraser == paraphraser)) continue;
      docs[d.dataset].push_back(d);
    }
    if (docs.empty()) throw DataError(fmt::format("no test documents at iteration {}", n));
    std::map<std::string, Scored> scored;
    for (const auto& [ds, group] : docs) {
      const auto& clf = classifiers_.at(ds);
      Scored sc;
      sc.predictions = clf.predict(group);
      for (const auto& d : group) {
        if (n > 0 && policy == GroundTruthPolicy::Alternative) {
          if (!std::binary_search(clf.classes().begin(), clf.classes().end(), *d.paraphraser)) {
            throw LabelingError("alternative ground truth: paraphraser '" + *d.paraphraser +
                                "' is not a candidate author in dataset " + ds);
          }
          sc.golds.push_back(*d.paraphraser);
        } else {
          sc.golds.push_back(d.origin_author);
        }
      }
      scored.emplace(ds, std::move(sc));
    }
    report.scores.push_back(score_groups(n, scored, classes));
  }
  compute_drops(report);
  return report;
}

EvaluationReport evaluate_attribution(const Corpus& corpus, const SplitSpec& split, GroundTruthPolicy policy,
                                      std::string_view paraphraser, const ClassifierConfig& config,
                                      int max_iteration) {
  return AttributionHarness(corpus, split, config).evaluate(policy, paraphraser, max_iteration);
}

EvaluationReport evaluate_detection(const Corpus& corpus, const SplitSpec& spec, const DetectionScenario& scenario,
                                    const ClassifierConfig& config) {
  const auto labeled = detection_scenario(corpus, scenario);
  const auto parts = split(corpus, spec);
  const std::set<std::string> test_keys(parts.test_keys.begin(), parts.test_keys.end());
  std::vector<Document> train_docs, test_docs;
  std::vector<std::string> train_labels, test_labels;
  for (const auto& l : labeled) {
    const auto& d = corpus.at(l.doc_id);
    if (test_keys.contains(d.source_key)) {
      test_docs.push_back(d);
      test_labels.push_back(l.label);
    } else {
      train_docs.push_back(d);
      train_labels.push_back(l.label);
    }
  }
  if (test_docs.empty()) throw DataError("detection: no test documents for the scenario");
  const auto clf = TextClassifier::fit(config, train_docs, train_labels);
  const auto pred = clf.predict(test_docs);

  EvaluationReport report;
  report.kind = "detection";
  report.setting = to_string(scenario.kind);
  report.paraphraser = scenario.paraphraser;
  report.classifier = to_string(config.kind);
  IterationScore s;
  s.iteration = scenario.kind == DetectionKind::Normal ? 0 : 1;
  s.n = test_docs.size();
  s.f1 = s.pooled_f1 = macro_f1(pred, test_labels);
  s.confusion = confusion_matrix(pred, test_labels, clf.classes());
  report.scores.push_back(std::move(s));
  report.notes.push_back(fmt::format("ai_class_f1={:.6f}", class_f1(pred, test_labels, kAiLabel)));
  return report;
}

std::map<std::string, std::string> read_predictions_csv(std::istream& in) {
  auto unquote = [](std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    while (!s.empty() && s.front() == ' ') s.erase(s.begin());
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
  };
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (unquote(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(lineno, "expected doc_id,label");
    const auto id = unquote(line.substr(0, comma));
    const auto lab = unquote(line.substr(comma + 1));
    if (lineno == 1 && id == "doc_id") continue;
    if (id.empty() || lab.empty()) throw ParseError(lineno, "empty doc_id or label");
    if (!out.emplace(id, lab).second) throw ParseError(lineno, "duplicate doc_id " + id);
  }
  return out;
}

EvaluationReport ingest_external_predictions(const std::filesystem::path& path,
                                             std::span<const LabeledDocument> golds, const Corpus* corpus) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read predictions file " + path.string());
  const auto preds = read_predictions_csv(in);
  std::vector<std::string> missing;
  for (const auto& g : golds) {
    if (!preds.contains(g.doc_id)) missing.push_back(g.doc_id);
  }
  if (!missing.empty()) {
    std::string msg = fmt::format("predictions miss {} test document(s):", missing.size());
    for (const auto& id : missing) msg += " " + id;
    throw CoverageError(msg);
  }
  std::map<int, std::map<std::string, Scored>> groups;
  std::set<std::string> classes;
  for (const auto& g : golds) {
    int it = 0;
    std::string ds = "all";
    if (corpus) {
      const auto* d = corpus->find(g.doc_id);
      if (!d) throw CoverageError("gold document " + g.doc_id + " is not in the corpus");
      it = d->iteration;
      ds = d->dataset;
    }
    auto& sc = groups[it][ds];
    sc.predictions.push_back(preds.at(g.doc_id));
    sc.golds.push_back(g.label);
    classes.insert(g.label);
  }
  EvaluationReport report;
  report.kind = "external";
  report.setting = path.filename().string();
  report.classifier = "external";
  const std::vector<std::string> cls(classes.begin(), classes.end());
  for (const auto& [it, by_ds] : groups) report.scores.push_back(score_groups(it, by_ds, cls));
  compute_drops(report);
  return report;
}

ConfusionMatrix leave_one_out_confusion(const Corpus& corpus, const SplitSpec& spec,
                                        std::string_view excluded_author, std::string_view paraphraser,
                                        int iteration, const ClassifierConfig& config) {
  const auto authors = corpus.authors();
  if (!std::binary_search(authors.begin(), authors.end(), std::string(excluded_author))) {
    throw PreconditionError("leave_one_out_confusion: unknown author '" + std::string(excluded_author) + "'");
  }
  const auto parts = split(corpus, spec);
  const auto docs = training_originals(parts.train, {}, excluded_author);
  std::set<std::string> remaining;
  for (const auto& d : docs) remaining.insert(d.origin_author);
  if (remaining.size() < 2) {
    throw TrainingError("leave_one_out_confusion: excluding '" + std::string(excluded_author) +
                        "' leaves fewer than 2 classes");
  }
  const auto clf = TextClassifier::fit(config, docs, origin_labels(docs));
  std::vector<Document> eval;
  for (const auto& d : parts.test) {
    if (d.iteration != iteration) continue;
    if (iteration > 0 && !(d.paraphraser && *d.paraphraser == paraphraser)) continue;
    eval.push_back(d);
  }
  if (eval.empty()) throw DataError(fmt::format("leave_one_out_confusion: no test documents at iteration {}", iteration));
  const auto pred = clf.predict(eval);
  return confusion_matrix(pred, origin_labels(eval), clf.classes());
}

}  // namespace theseus
