#include <gtest/gtest.h>

#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "theseus/classify.hpp"
#include "theseus/errors.hpp"
#include "theseus/features.hpp"
#include "theseus/stylemodel.hpp"
#include "theseus/synthgen.hpp"
#include "theseus/text.hpp"

using namespace theseus;

TEST(Generate, WordBoundsAndDeterminism) {
  const auto profiles = separated_profiles(2, 0.3, 1);
  for (int i = 0; i < 20; ++i) {
    const std::string key = "s" + std::to_string(i);
    const auto t = generate_text(profiles[0], key, 20);
    EXPECT_GE(tokenize(t).words.size(), 20u);
    EXPECT_LE(tokenize(t).words.size(), 20u + 40u);
    EXPECT_EQ(t, generate_text(profiles[0], key, 20));
  }
  EXPECT_THROW(generate_text(profiles[0], "s0", 19), PreconditionError);
}

TEST(Separated, PairwiseDistance) {
  const auto two = separated_profiles(2, 0.3, 2);
  EXPECT_GE(total_variation(two[0].function_word_dist, two[1].function_word_dist), 0.3 - 1e-12);
  const auto seven = separated_profiles(7, 0.1, 3);
  for (std::size_t i = 0; i < seven.size(); ++i) {
    EXPECT_NO_THROW(validate_profile(seven[i]));
    for (std::size_t j = i + 1; j < seven.size(); ++j) {
      EXPECT_GE(total_variation(seven[i].function_word_dist, seven[j].function_word_dist), 0.1 - 1e-12);
    }
  }
}

TEST(Separated, Errors) {
  EXPECT_THROW(separated_profiles(2, 0.0, 1), PreconditionError);
  EXPECT_THROW(separated_profiles(1, 0.3, 1), PreconditionError);
  EXPECT_THROW(separated_profiles(2, 1.5, 1), FeasibilityError);
  EXPECT_THROW(separated_profiles(10000, 0.3, 1), FeasibilityError);
  EXPECT_THROW(total_variation(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}), DimensionError);
}

TEST(Separated, TopicsAreShared) {
  const auto profiles = separated_profiles(3, 0.3, 4);
  for (const auto& p : profiles) {
    EXPECT_EQ(p.content_vocab, profiles[0].content_vocab);
    EXPECT_EQ(topic_for(p, "s0007"), topic_for(profiles[0], "s0007"));
  }
}

TEST(Separated, FunctionWordsCarryTheDifference) {
  auto profiles = separated_profiles(2, 0.4, 5);
  profiles[1].sentence_length = profiles[0].sentence_length;
  profiles[1].end_punctuation = profiles[0].end_punctuation;
  profiles[1].interior_punctuation = profiles[0].interior_punctuation;
  profiles[1].function_word_share = profiles[0].function_word_share;
  const auto corpus = generate_corpus(profiles, 200, 120);
  std::vector<std::string> texts;
  for (const auto& d : corpus) texts.push_back(d.text);
  const auto schema = fit_schema(texts, FeatureConfig{});
  std::map<std::string, std::vector<FeatureVector>> by_author;
  for (const auto& d : corpus) by_author[d.origin_author].push_back(schema.standardize(style_vector(d.text, schema)));
  const auto m0 = fit_style_model("author0", by_author["author0"]);
  const auto m1 = fit_style_model("author1", by_author["author1"]);
  std::string best;
  double best_gap = -1.0;
  for (const auto& b : schema.blocks()) {
    if (b.end == b.begin) continue;
    const auto n = static_cast<Eigen::Index>(b.end - b.begin);
    const auto at = static_cast<Eigen::Index>(b.begin);
    const double gap = (m0.mean.segment(at, n) - m1.mean.segment(at, n)).norm();
    if (gap > best_gap) {
      best_gap = gap;
      best = b.name;
    }
  }
  EXPECT_EQ(best, "function_words");
}

TEST(Separated, StyleClassifierSeparatesAuthors) {
  const auto profiles = separated_profiles(3, 0.3, 6);
  const auto corpus = generate_corpus(profiles, 100, 120);
  std::vector<Document> train_docs, test_docs;
  std::vector<std::string> train_labels, test_labels;
  for (const auto& d : corpus) {
    const bool is_train = std::stoi(d.source_key.substr(1)) < 50;
    (is_train ? train_docs : test_docs).push_back(d);
    (is_train ? train_labels : test_labels).push_back(d.origin_author);
  }
  const auto clf = TextClassifier::fit(ClassifierConfig{}, train_docs, train_labels);
  EXPECT_GE(macro_f1(clf.predict(test_docs), test_labels), 0.95);
}

TEST(Corpus, IdsAndKeys) {
  const auto profiles = separated_profiles(2, 0.3, 7);
  const auto c = generate_corpus(profiles, 3, 30, "ds");
  EXPECT_EQ(c.size(), 6u);
  EXPECT_NE(c.find("ds/author0/s0000"), nullptr);
  EXPECT_NE(c.find("ds/author1/s0002"), nullptr);
}

TEST(Profile, JsonRoundTripAndValidation) {
  const auto p = separated_profiles(2, 0.3, 8)[1];
  const auto back = profile_from_json(to_json(p));
  EXPECT_EQ(generate_text(back, "s0001", 50), generate_text(p, "s0001", 50));
  auto bad = p;
  bad.function_word_dist[0] += 0.1;
  EXPECT_THROW(validate_profile(bad), ValidationError);
  bad = p;
  bad.function_word_dist.pop_back();
  EXPECT_THROW(validate_profile(bad), ValidationError);
  EXPECT_THROW(profile_from_json(nlohmann::json{{"name", 3}}), SchemaError);
}
