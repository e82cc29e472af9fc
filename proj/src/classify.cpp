#include "theseus/classify.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "theseus/errors.hpp"

namespace theseus {

using nlohmann::json;

namespace {

Eigen::MatrixXd logits(const Eigen::MatrixXd& w, const Eigen::VectorXd& b, std::span<const SparseVector> rows) {
  Eigen::MatrixXd z(static_cast<Eigen::Index>(rows.size()), w.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Eigen::VectorXd acc = b;
    const auto& r = rows[i];
    for (std::size_t k = 0; k < r.indices.size(); ++k) acc += w.col(r.indices[k]) * r.values[k];
    z.row(static_cast<Eigen::Index>(i)) = acc.transpose();
  }
  return z;
}

void softmax_rows(Eigen::MatrixXd& z) {
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - m).exp();
    z.row(i) /= z.row(i).sum();
  }
}

struct LossEval {
  double loss = 0.0;
  Eigen::MatrixXd probs;
};

LossEval evaluate_loss(const Eigen::MatrixXd& w, const Eigen::VectorXd& b, std::span<const SparseVector> rows,
                       const std::vector<Eigen::Index>& y, double l2) {
  LossEval out;
  out.probs = logits(w, b, rows);
  double ce = 0.0;
  for (Eigen::Index i = 0; i < out.probs.rows(); ++i) {
    const auto row = out.probs.row(i);
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    ce += lse - row(y[static_cast<std::size_t>(i)]);
  }
  softmax_rows(out.probs);
  out.loss = ce / static_cast<double>(rows.size()) + 0.5 * l2 * w.squaredNorm();
  return out;
}

std::vector<std::string> classes_or_golds(std::span<const std::string> golds, std::span<const std::string> classes) {
  std::set<std::string> s(classes.begin(), classes.end());
  if (s.empty()) s.insert(golds.begin(), golds.end());
  return {s.begin(), s.end()};
}

}  // namespace

std::string to_string(ClassifierKind kind) { return kind == ClassifierKind::StyleLinear ? "style-linear" : "tfidf-linear"; }

ClassifierKind parse_classifier_kind(std::string_view name) {
  if (name == "style-linear" || name == "style") return ClassifierKind::StyleLinear;
  if (name == "tfidf-linear" || name == "tfidf") return ClassifierKind::TfidfLinear;
  throw ConfigError("unknown classifier kind '" + std::string(name) + "'");
}

ClassifierModel train(ClassifierKind kind, std::span<const SparseVector> rows, std::span<const std::string> labels,
                      const TrainingConfig& config, std::string pipeline_ref) {
  if (rows.size() != labels.size()) throw PreconditionError("train: rows and labels differ in length");
  if (rows.empty()) throw TrainingError("train: no training samples");
  if (config.epochs < 0 || !(config.learning_rate > 0.0) || config.l2 < 0.0) {
    throw ConfigError("train: invalid training configuration");
  }
  const std::size_t d = rows.front().dimension;
  for (const auto& r : rows) {
    if (r.dimension != d) throw DimensionError("train: rows differ in dimension");
    for (double v : r.values) {
      if (!std::isfinite(v)) throw DataError("train: non-finite feature value");
    }
  }
  ClassifierModel m;
  m.kind = kind;
  m.config = config;
  m.pipeline_ref = std::move(pipeline_ref);
  std::set<std::string> cls(labels.begin(), labels.end());
  if (cls.size() < 2) throw TrainingError("train: need at least 2 classes, got " + std::to_string(cls.size()));
  m.classes.assign(cls.begin(), cls.end());
  std::vector<Eigen::Index> y;
  y.reserve(labels.size());
  for (const auto& l : labels) {
    y.push_back(std::lower_bound(m.classes.begin(), m.classes.end(), l) - m.classes.begin());
  }
  const auto c = static_cast<Eigen::Index>(m.classes.size());
  m.weights = Eigen::MatrixXd::Zero(c, static_cast<Eigen::Index>(d));
  m.bias = Eigen::VectorXd::Zero(c);
  const double n = static_cast<double>(rows.size());

  double lr = config.learning_rate;
  auto current = evaluate_loss(m.weights, m.bias, rows, y, config.l2);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Eigen::MatrixXd resid = current.probs;
    for (std::size_t i = 0; i < y.size(); ++i) resid(static_cast<Eigen::Index>(i), y[i]) -= 1.0;
    Eigen::MatrixXd gw = config.l2 * m.weights;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      const Eigen::VectorXd ri = resid.row(static_cast<Eigen::Index>(i)).transpose() / n;
      for (std::size_t k = 0; k < r.indices.size(); ++k) gw.col(r.indices[k]) += ri * r.values[k];
    }
    const Eigen::VectorXd gb = resid.colwise().sum().transpose() / n;

    bool accepted = false;
    for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
      Eigen::MatrixXd w2 = m.weights - lr * gw;
      Eigen::VectorXd b2 = m.bias - lr * gb;
      auto next = evaluate_loss(w2, b2, rows, y, config.l2);
      if (next.loss <= current.loss) {
        m.weights = std::move(w2);
        m.bias = std::move(b2);
        current = std::move(next);
        accepted = true;
        lr *= 1.05;
      } else {
        lr *= 0.5;
      }
    }
    m.loss_history.push_back(current.loss);
    if (!accepted) break;
  }
  return m;
}

Eigen::MatrixXd predict_proba(const ClassifierModel& model, std::span<const SparseVector> rows) {
  for (const auto& r : rows) {
    if (r.dimension != model.dimension()) {
      throw DimensionError("predict: input dimension " + std::to_string(r.dimension) + " != model dimension " +
                           std::to_string(model.dimension()));
    }
  }
  Eigen::MatrixXd z = logits(model.weights, model.bias, rows);
  softmax_rows(z);
  return z;
}

std::vector<std::string> predict(const ClassifierModel& model, std::span<const SparseVector> rows) {
  const Eigen::MatrixXd p = predict_proba(model, rows);
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < p.cols(); ++j) {
      if (p(i, j) > p(i, best)) best = j;
    }
    out.push_back(model.classes[static_cast<std::size_t>(best)]);
  }
  return out;
}

json to_json(const ClassifierModel& m) {
  std::vector<std::vector<double>> w;
  for (Eigen::Index r = 0; r < m.weights.rows(); ++r) {
    w.emplace_back(static_cast<std::size_t>(m.weights.cols()));
    for (Eigen::Index c = 0; c < m.weights.cols(); ++c) w.back()[static_cast<std::size_t>(c)] = m.weights(r, c);
  }
  return json{{"version", 1},
              {"kind", to_string(m.kind)},
              {"classes", m.classes},
              {"pipeline_ref", m.pipeline_ref},
              {"weights", w},
              {"bias", std::vector<double>(m.bias.data(), m.bias.data() + m.bias.size())},
              {"training_config",
               {{"l2", m.config.l2},
                {"learning_rate", m.config.learning_rate},
                {"epochs", m.config.epochs},
                {"seed", m.config.seed}}},
              {"final_loss", m.loss_history.empty() ? 0.0 : m.loss_history.back()}};
}

ClassifierModel classifier_from_json(const json& j) {
  try {
    ClassifierModel m;
    m.kind = parse_classifier_kind(j.at("kind").get<std::string>());
    m.classes = j.at("classes").get<std::vector<std::string>>();
    m.pipeline_ref = j.at("pipeline_ref").get<std::string>();
    const auto w = j.at("weights").get<std::vector<std::vector<double>>>();
    const auto b = j.at("bias").get<std::vector<double>>();
    if (w.size() != m.classes.size() || b.size() != m.classes.size()) throw SchemaError("classifier shape mismatch");
    const std::size_t d = w.empty() ? 0 : w.front().size();
    m.weights.resize(static_cast<Eigen::Index>(w.size()), static_cast<Eigen::Index>(d));
    for (std::size_t r = 0; r < w.size(); ++r) {
      if (w[r].size() != d) throw SchemaError("classifier shape mismatch");
      for (std::size_t c = 0; c < d; ++c) m.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = w[r][c];
    }
    m.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    const auto& tc = j.at("training_config");
    m.config = {tc.at("l2").get<double>(), tc.at("learning_rate").get<double>(), tc.at("epochs").get<int>(),
                tc.at("seed").get<std::uint64_t>()};
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed classifier: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

double class_f1(std::span<const std::string> predictions, std::span<const std::string> golds,
                std::string_view positive) {
  if (predictions.size() != golds.size()) throw PreconditionError("class_f1: length mismatch");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const bool p = predictions[i] == positive;
    const bool g = golds[i] == positive;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  const std::size_t denom = 2 * tp + fp + fn;
  return denom ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : 0.0;
}

double macro_f1(std::span<const std::string> predictions, std::span<const std::string> golds,
                std::span<const std::string> classes) {
  if (predictions.size() != golds.size()) throw PreconditionError("macro_f1: length mismatch");
  if (golds.empty()) throw PreconditionError("macro_f1: empty input");
  const std::set<std::string> present(golds.begin(), golds.end());
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& c : classes_or_golds(golds, classes)) {
    if (!present.contains(c)) continue;
    sum += class_f1(predictions, golds, c);
    ++counted;
  }
  return counted ? sum / static_cast<double>(counted) : 0.0;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) t += row_sum(i);
  return t;
}

std::size_t ConfusionMatrix::row_sum(std::size_t i) const {
  std::size_t t = 0;
  for (auto c : counts[i]) t += c;
  return t;
}

std::size_t ConfusionMatrix::col_sum(std::size_t j) const {
  std::size_t t = 0;
  for (const auto& r : counts) t += r[j];
  return t;
}

ConfusionMatrix confusion_matrix(std::span<const std::string> predictions, std::span<const std::string> golds,
                                 std::span<const std::string> classes) {
  if (predictions.size() != golds.size()) throw PreconditionError("confusion_matrix: length mismatch");
  std::set<std::string> rows(golds.begin(), golds.end());
  std::set<std::string> cols(classes.begin(), classes.end());
  cols.insert(predictions.begin(), predictions.end());
  ConfusionMatrix cm;
  cm.rows.assign(rows.begin(), rows.end());
  cm.cols.assign(cols.begin(), cols.end());
  cm.counts.assign(cm.rows.size(), std::vector<std::size_t>(cm.cols.size(), 0));
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const auto r = std::lower_bound(cm.rows.begin(), cm.rows.end(), golds[i]) - cm.rows.begin();
    const auto c = std::lower_bound(cm.cols.begin(), cm.cols.end(), predictions[i]) - cm.cols.begin();
    ++cm.counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  return cm;
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
  out << "gold\\predicted";
  for (const auto& c : cm.cols) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < cm.rows.size(); ++i) {
    out << cm.rows[i];
    for (auto v : cm.counts[i]) out << ',' << v;
    out << '\n';
  }
}

json to_json(const ConfusionMatrix& cm) { return json{{"rows", cm.rows}, {"cols", cm.cols}, {"counts", cm.counts}}; }

// ---------------------------------------------------------------------------

TextClassifier TextClassifier::fit(const ClassifierConfig& config, std::span<const Document> docs,
                                   std::span<const std::string> labels) {
  if (docs.size() != labels.size()) throw PreconditionError("TextClassifier::fit: docs and labels differ in length");
  if (docs.empty()) throw TrainingError("TextClassifier::fit: no training documents");
  TextClassifier tc;
  tc.kind_ = config.kind;
  std::vector<std::string> texts;
  texts.reserve(docs.size());
  for (const auto& d : docs) texts.push_back(d.text);
  std::string ref;
  if (config.kind == ClassifierKind::StyleLinear) {
    tc.schema_ = fit_schema(texts, config.features);
    ref = tc.schema_->schema_id;
  } else {
    tc.vocab_ = fit_tfidf(texts, config.tfidf);
    ref = tc.vocab_->vocab_id;
  }
  const auto rows = tc.vectorize(docs);
  tc.model_ = train(config.kind, rows, labels, config.training, ref);
  return tc;
}

std::vector<SparseVector> TextClassifier::vectorize(std::span<const Document> docs) const {
  std::vector<SparseVector> rows;
  rows.reserve(docs.size());
  for (const auto& d : docs) {
    if (schema_) {
      rows.push_back(SparseVector::from_dense(schema_->standardize(style_vector(d.text, *schema_)).values));
    } else {
      rows.push_back(tfidf_vector(d.text, *vocab_));
    }
  }
  return rows;
}

std::vector<std::string> TextClassifier::predict(std::span<const Document> docs) const {
  return theseus::predict(model_, vectorize(docs));
}

json TextClassifier::to_json() const {
  json j{{"kind", theseus::to_string(kind_)}, {"model", theseus::to_json(model_)}};
  if (schema_) j["schema"] = theseus::to_json(*schema_);
  if (vocab_) j["vocabulary"] = theseus::to_json(*vocab_);
  return j;
}

TextClassifier TextClassifier::from_json(const json& j) {
  TextClassifier tc;
  try {
    tc.kind_ = parse_classifier_kind(j.at("kind").get<std::string>());
    tc.model_ = classifier_from_json(j.at("model"));
    if (j.contains("schema")) tc.schema_ = schema_from_json(j.at("schema"));
    if (j.contains("vocabulary")) tc.vocab_ = vocabulary_from_json(j.at("vocabulary"));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed classifier file: ") + e.what());
  }
  if (!tc.schema_ && !tc.vocab_) throw SchemaError("classifier file has neither schema nor vocabulary");
  const std::string ref = tc.schema_ ? tc.schema_->schema_id : tc.vocab_->vocab_id;
  if (ref != tc.model_.pipeline_ref) throw SchemaError("classifier pipeline reference does not match its features");
  return tc;
}

}  // namespace theseus
