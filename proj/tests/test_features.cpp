#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "theseus/errors.hpp"
#include "theseus/features.hpp"
#include "theseus/lexicon.hpp"

using namespace theseus;

namespace {

FeatureConfig small_config(std::size_t k = 10) {
  FeatureConfig c;
  c.bigram_k = k;
  c.trigram_k = k;
  return c;
}

std::vector<double> block(const FeatureSchema& s, const FeatureVector& v, const std::string& name) {
  for (const auto& b : s.blocks()) {
    if (b.name == name) return {v.values.begin() + static_cast<long>(b.begin), v.values.begin() + static_cast<long>(b.end)};
  }
  ADD_FAILURE() << "no block " << name;
  return {};
}

std::size_t index_of(const FeatureSchema& s, const std::string& feature) {
  const auto names = s.feature_names();
  return static_cast<std::size_t>(std::find(names.begin(), names.end(), feature) - names.begin());
}

const std::vector<std::string> kTrain = {
    "The cat sat on the mat. It was happy, and it slept!",
    "A dog ran in the park; the dog was fast. Why run?",
    "We think that people should always try to learn new things.",
};

}  // namespace

TEST(Schema, BigramVocabByHand) {
  FeatureConfig c = small_config(2);
  const auto s = fit_schema(std::vector<std::string>{"abab"}, c);
  EXPECT_EQ(s.char_bigram_vocab, (std::vector<std::string>{"ab", "ba"}));
}

TEST(Schema, ZeroBigramsShrinksDimension) {
  FeatureConfig c = small_config(5);
  const auto with = fit_schema(kTrain, c);
  c.bigram_k = 0;
  const auto without = fit_schema(kTrain, c);
  EXPECT_TRUE(without.char_bigram_vocab.empty());
  EXPECT_EQ(with.dimension() - without.dimension(), 5u);
  EXPECT_EQ(without.dimension(), schema_dimension(0, 5, c.function_words.size(), c.lexicon.categories.size()));
}

TEST(Schema, RefitIsIdentical) {
  const auto a = fit_schema(kTrain, small_config());
  const auto b = fit_schema(kTrain, small_config());
  EXPECT_EQ(a.schema_id, b.schema_id);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  auto other = kTrain;
  other[0] += " Extra words.";
  EXPECT_NE(fit_schema(other, small_config()).schema_id, a.schema_id);
}

TEST(Schema, EmptyTrainingTextFails) {
  EXPECT_THROW(fit_schema(std::vector<std::string>{}, small_config()), SchemaError);
  EXPECT_THROW(fit_schema(std::vector<std::string>{"", "  "}, small_config()), SchemaError);
}

TEST(Schema, JsonRoundTrip) {
  const auto s = fit_schema(kTrain, small_config());
  const auto back = schema_from_json(to_json(s));
  EXPECT_EQ(back.schema_id, s.schema_id);
  EXPECT_EQ(style_vector(kTrain[1], back), style_vector(kTrain[1], s));
}

TEST(StyleVector, DistinctWordsRichness) {
  const auto s = fit_schema(kTrain, small_config());
  const auto v = style_vector("alpha beta gamma delta", s);
  const auto r = block(s, v, "richness");
  EXPECT_DOUBLE_EQ(r[0], 1.0);
  EXPECT_DOUBLE_EQ(r[1], 1.0);
}

TEST(StyleVector, FunctionWordFrequency) {
  const auto s = fit_schema(kTrain, small_config());
  const auto v = style_vector("the the the", s);
  EXPECT_DOUBLE_EQ(v.values[index_of(s, "fw_the")], 1.0);
}

TEST(StyleVector, YulesKByHand) {
  const std::vector<std::string> w = {"aa", "bb", "aa"};
  EXPECT_NEAR(yules_k(w), 1e4 * ((1 + 4) - 3) / 9.0, 1e-9);
  EXPECT_EQ(yules_k(std::vector<std::string>{}), 0.0);
  const auto s = fit_schema(kTrain, small_config());
  EXPECT_NEAR(block(s, style_vector("aa bb aa", s), "richness")[2], 2222.2222222, 1e-6);
}

TEST(StyleVector, EmptyTextIsFiniteZeros) {
  const auto s = fit_schema(kTrain, small_config());
  const auto v = style_vector("", s);
  ASSERT_EQ(v.dimension(), s.dimension());
  for (double x : v.values) EXPECT_EQ(x, 0.0);
}

TEST(StyleVector, AlwaysFinite) {
  const auto s = fit_schema(kTrain, small_config());
  for (const char* t : {"!!!", "123 456.", "...", "a", "\n\n", "Ünïcödé wörds ñ."}) {
    for (double x : style_vector(t, s).values) EXPECT_TRUE(std::isfinite(x)) << t;
  }
}

TEST(StyleVector, SentencePermutationKeepsFrequencyBlocks) {
  const auto s = fit_schema(kTrain, small_config());
  const auto a = style_vector("The cat sat here. A dog ran there! Why not?", s);
  const auto b = style_vector("Why not? The cat sat here. A dog ran there!", s);
  for (const char* name : {"char_classes", "richness", "function_words", "lexicon", "punctuation", "closed_classes"}) {
    const auto x = block(s, a, name), y = block(s, b, name);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], y[i], 1e-12) << name;
  }
}

TEST(StyleVector, SelfConcatenationScalesCountsOnly) {
  const auto s = fit_schema(kTrain, small_config());
  const std::string t = "The cat sat on the mat, and it was happy. We think so!";
  const auto one = style_vector(t, s);
  const auto three = style_vector(t + " " + t + " " + t, s);
  for (const char* name : {"char_classes", "char_bigrams", "char_trigrams", "punctuation", "closed_classes",
                           "function_words", "lexicon"}) {
    const auto x = block(s, one, name), y = block(s, three, name);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], y[i], 1e-9) << name;
  }
  const auto c1 = block(s, one, "counts"), c3 = block(s, three, "counts");
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(c3[i], 3.0 * c1[i], 1e-9);
}

TEST(StyleVector, SchemaMismatchIsDimensionError) {
  const auto s = fit_schema(kTrain, small_config());
  FeatureVector v{"other", std::vector<double>(3, 0.0)};
  EXPECT_THROW(s.standardize(v), DimensionError);
}

TEST(StyleVector, StandardizedTrainingMeanIsZero) {
  const auto s = fit_schema(kTrain, small_config());
  std::vector<double> sum(s.dimension(), 0.0);
  for (const auto& t : kTrain) {
    const auto z = s.standardize(style_vector(t, s));
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += z.values[i];
  }
  for (double x : sum) EXPECT_NEAR(x, 0.0, 1e-9);
}

TEST(FeatureCsv, Header) {
  const auto s = fit_schema(kTrain, small_config(1));
  std::ostringstream out;
  const std::vector<std::string> ids = {"a"};
  const std::vector<FeatureVector> v = {style_vector("x y.", s)};
  write_feature_csv(out, ids, v);
  EXPECT_EQ(out.str().rfind("doc_id,schema_id,f_0,f_1,", 0), 0u);
}

TEST(Lexicon, PrefixAndUnion) {
  std::istringstream in("%categories: sad,verbs,motion\nabandon*\tsad\nrun\tverbs\nrun*\tmotion\n# comment\n");
  const auto lex = parse_lexicon(in);
  EXPECT_EQ(lexicon_match("abandoned", lex), (std::vector<std::size_t>{0}));
  EXPECT_TRUE(lexicon_match("zebra", lex).empty());
  EXPECT_EQ(lexicon_match("run", lex), (std::vector<std::size_t>{1, 2}));
  std::ostringstream out;
  write_lexicon(out, lex);
  std::istringstream again(out.str());
  EXPECT_EQ(parse_lexicon(again), lex);
}

TEST(Lexicon, LongestPrefixWins) {
  std::istringstream in("%categories: a,b\nab*\ta\nabc*\tb\n");
  const auto lex = parse_lexicon(in);
  EXPECT_EQ(lexicon_match("abcd", lex), (std::vector<std::size_t>{1}));
  EXPECT_EQ(lexicon_match("abx", lex), (std::vector<std::size_t>{0}));
}

TEST(Lexicon, RejectsBadFiles) {
  std::istringstream star("%categories: a\nab*c\ta\n");
  EXPECT_ANY_THROW(parse_lexicon(star));
  std::istringstream unknown("%categories: a\nword\tzzz\n");
  EXPECT_ANY_THROW(parse_lexicon(unknown));
}

TEST(Tfidf, SingleGram) {
  const auto v = fit_tfidf(std::vector<std::string>{"ab"}, {2, 2, 1, 0});
  EXPECT_EQ(v.grams, (std::vector<std::string>{"ab"}));
  EXPECT_DOUBLE_EQ(v.idf[0], 1.0);
}

TEST(Tfidf, MinDfFilters) {
  const auto v = fit_tfidf(std::vector<std::string>{"abc", "abd"}, {2, 2, 2, 0});
  EXPECT_EQ(v.grams, (std::vector<std::string>{"ab"}));
}

TEST(Tfidf, IdfFormula) {
  const auto v = fit_tfidf(std::vector<std::string>{"abc", "abd", "xbc"}, {2, 2, 1, 0});
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double df = v.grams[i] == "bc" || v.grams[i] == "ab" ? 2 : 1;
    EXPECT_NEAR(v.idf[i], std::log(4.0 / (1.0 + df)) + 1.0, 1e-12) << v.grams[i];
  }
}

TEST(Tfidf, VectorByHand) {
  const auto v = fit_tfidf(std::vector<std::string>{"abab", "abab"}, {2, 2, 1, 0});
  ASSERT_EQ(v.grams, (std::vector<std::string>{"ab", "ba"}));
  const auto x = tfidf_vector("abab", v).to_dense();
  EXPECT_NEAR(x[0], 2.0 / std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(x[1], 1.0 / std::sqrt(5.0), 1e-12);
}

TEST(Tfidf, UnknownTextIsZeroAndNormsAreUnit) {
  const auto v = fit_tfidf(kTrain, {2, 5, 2, 0});
  EXPECT_EQ(tfidf_vector("qqqq zzzz", v).nnz(), 0u);
  for (const auto& t : kTrain) EXPECT_NEAR(tfidf_vector(t, v).norm(), 1.0, 1e-12);
  EXPECT_THROW(fit_tfidf(std::vector<std::string>{}, {}), Error);
}

TEST(Tfidf, RefitIdentical) {
  EXPECT_EQ(to_json(fit_tfidf(kTrain, {})).dump(), to_json(fit_tfidf(kTrain, {})).dump());
  const auto v = fit_tfidf(kTrain, {});
  EXPECT_EQ(vocabulary_from_json(to_json(v)).grams, v.grams);
}
