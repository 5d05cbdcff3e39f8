#include <fstream>
#include <random>
#include <regex>
#include <set>

#include <gtest/gtest.h>

#include "golden.hpp"
#include "lifted/errors.hpp"
#include "lifted/smiles.hpp"
#include "lifted/tokenizer.hpp"

namespace lifted {
namespace {

using lifted::testing::TempDir;
using lifted::testing::test_data;

std::vector<std::string> words_of(const TokenSequence& seq, const Vocabulary& v) {
  std::vector<std::string> out;
  for (std::size_t t = 0; t < seq.length(); ++t) {
    if (seq.mask[t]) out.push_back(v.token(seq.ids[t]));
  }
  return out;
}

std::vector<std::string> smiles_tokens(const std::string& s) {
  std::vector<std::string> out;
  for (auto& p : split_smiles(s)) out.push_back(p.text);
  return out;
}

TEST(Vocabulary, ReservedIdsAreStable) {
  Vocabulary v;
  EXPECT_EQ(v.id("[pad]"), kPadId);
  EXPECT_EQ(v.id("[unk]"), kUnkId);
  std::set<TokenId> cls;
  for (auto m : kAllModalities) {
    EXPECT_EQ(v.id("[cls]_" + std::string(modality_name(m))), cls_id(m));
    cls.insert(cls_id(m));
  }
  EXPECT_EQ(cls.size(), kNumModalities);
  EXPECT_EQ(v.size(), static_cast<std::size_t>(kFirstRegularId));
}

TEST(Vocabulary, BuildSmallCorpus) {
  const std::vector<std::string> corpus{"a b", "b c"};
  const auto v = Vocabulary::build(corpus, 10);
  EXPECT_EQ(v.size(), static_cast<std::size_t>(kFirstRegularId) + 3);
  // b is most frequent; a and c tie and sort lexicographically.
  EXPECT_EQ(v.id("b"), kFirstRegularId);
  EXPECT_EQ(v.id("a"), kFirstRegularId + 1);
  EXPECT_EQ(v.id("c"), kFirstRegularId + 2);
}

TEST(Vocabulary, MaxSizeDropsRareTokens) {
  const std::vector<std::string> corpus{"x x x y y z"};
  const auto v = Vocabulary::build(corpus, 2);
  EXPECT_TRUE(v.contains("x"));
  EXPECT_TRUE(v.contains("y"));
  EXPECT_EQ(v.id("z"), kUnkId);
}

TEST(Vocabulary, EmptyCorpusIsAnError) {
  EXPECT_THROW(Vocabulary::build(std::vector<std::string>{}, 10), ContractError);
}

TEST(Vocabulary, RebuildAndJsonRoundTrip) {
  const std::vector<std::string> corpus{"The quick, brown fox.", "the lazy dog; THE end"};
  const auto a = Vocabulary::build(corpus, 100);
  const auto b = Vocabulary::build(corpus, 100);
  EXPECT_EQ(a.to_json(), b.to_json());
  TempDir dir("vocab");
  a.save(dir / "vocab.json");
  const auto c = Vocabulary::load(dir / "vocab.json");
  EXPECT_EQ(c.to_json(), a.to_json());
  EXPECT_EQ(c.id("the"), a.id("the"));
  nlohmann::json broken = a.to_json();
  broken["[unk]"] = 5;
  EXPECT_THROW(Vocabulary::from_json(broken), LoadError);
}

TEST(TokenizeText, EmptyIsAllPad) {
  Vocabulary v;
  const auto seq = tokenize_text("", v, 8);
  EXPECT_EQ(seq.length(), 7u);
  for (std::size_t t = 0; t < 7; ++t) {
    EXPECT_EQ(seq.ids[t], kPadId);
    EXPECT_EQ(seq.mask[t], 0);
  }
}

TEST(TokenizeText, SplitsPunctuationAndLowercases) {
  const std::vector<std::string> corpus{"cancer , melanoma"};
  const auto v = Vocabulary::build(corpus, 10);
  const auto seq = tokenize_text("Cancer, melanoma", v, 16);
  EXPECT_EQ(words_of(seq, v), (std::vector<std::string>{"cancer", ",", "melanoma"}));
  EXPECT_EQ(tokenize_text("unheard", v, 4).ids[0], kUnkId);
}

TEST(TokenizeText, TruncatesKeepingHead) {
  const std::vector<std::string> corpus{"a b c d e f"};
  const auto v = Vocabulary::build(corpus, 10);
  const auto seq = tokenize_text("a b c d e f", v, 4);
  EXPECT_EQ(words_of(seq, v), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(TokenizeTextProperty, LengthMaskAndPurity) {
  std::mt19937_64 rng(5);
  const std::string alphabet = "ab C,.;  \t-x9'";
  std::vector<std::string> corpus;
  for (int i = 0; i < 200; ++i) {
    std::string s;
    const auto len = std::uniform_int_distribution<int>(0, 200)(rng);
    for (int j = 0; j < len; ++j) {
      s.push_back(alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)]);
    }
    corpus.push_back(s);
  }
  const auto v = Vocabulary::build(corpus, 20);
  for (const auto& s : corpus) {
    const std::size_t max_len = std::uniform_int_distribution<std::size_t>(2, 64)(rng);
    const auto seq = tokenize_text(s, v, max_len);
    EXPECT_EQ(seq.length(), max_len - 1);
    std::size_t non_pad = 0;
    for (std::size_t t = 0; t < seq.length(); ++t) {
      non_pad += seq.ids[t] != kPadId;
      EXPECT_EQ(seq.mask[t] == 1, seq.ids[t] != kPadId);
    }
    EXPECT_EQ(seq.real_tokens(), non_pad);
    const auto again = tokenize_text(s, v, max_len);
    EXPECT_EQ(again.ids, seq.ids);
    EXPECT_EQ(again.mask, seq.mask);
  }
}

TEST(Smiles, BasicExamples) {
  EXPECT_EQ(smiles_tokens("CCO"), (std::vector<std::string>{"C", "C", "O"}));
  EXPECT_EQ(smiles_tokens("CCl"), (std::vector<std::string>{"C", "Cl"}));
  EXPECT_EQ(smiles_tokens("c1ccccc1"),
            (std::vector<std::string>{"c", "1", "c", "c", "c", "c", "c", "1"}));
  EXPECT_EQ(smiles_tokens("C[C@@H](Br)%12"),
            (std::vector<std::string>{"C", "[C@@H]", "(", "Br", ")", "%12"}));
}

// Reference chemical tokenizer pattern, applied with std::regex.
std::vector<std::string> regex_tokens(const std::string& s) {
  static const std::regex pattern(
      R"((\[[^\]]+]|Br?|Cl?|N|O|S|P|F|I|b|c|n|o|s|p|\(|\)|\.|=|#|-|\+|\\|\/|:|~|@|\?|>|\*|\$|\%[0-9]{2}|[0-9]))");
  std::vector<std::string> out;
  for (std::sregex_iterator it(s.begin(), s.end(), pattern), end; it != end; ++it) {
    out.push_back(it->str());
  }
  return out;
}

TEST(Smiles, MatchesReferenceRegexOnFixture) {
  std::ifstream in(test_data("fixtures/smiles50.txt"));
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++count;
    EXPECT_EQ(smiles_tokens(line), regex_tokens(line)) << line;
    std::size_t unknown = 0;
    const auto seq = tokenize_smiles(line, 256, &unknown);
    EXPECT_EQ(seq.real_tokens(), regex_tokens(line).size());
    EXPECT_EQ(unknown, 0u) << line;
  }
  EXPECT_EQ(count, 50);
}

TEST(Smiles, UnknownCharactersCountedNotFatal) {
  const auto before = smiles_unknown_total();
  std::size_t unknown = 0;
  const auto seq = tokenize_smiles("CC&C[Uup]", 16, &unknown);
  EXPECT_EQ(unknown, 2u);
  EXPECT_EQ(seq.ids[2], kUnkId);
  EXPECT_EQ(seq.ids[4], kUnkId);
  EXPECT_NE(seq.ids[3], kUnkId);
  EXPECT_EQ(smiles_unknown_total(), before + 2);
  EXPECT_EQ(seq.real_tokens(), 5u);
}

TEST(Smiles, VocabularyIsClosed) {
  const auto& v = SmilesVocabulary::instance();
  EXPECT_EQ(v.id("[pad]"), kPadId);
  EXPECT_EQ(v.id("[cls]_smiles"), cls_id(Modality::kSmiles));
  for (const auto* t : {"C", "Cl", "Br", "c", "[nH]", "=", "#", "%10", "9", "(", "[Au]", "[Ag]"}) {
    EXPECT_TRUE(v.contains(t)) << t;
  }
  EXPECT_FALSE(v.contains("l"));
}

// Random concatenations of alphabet tokens split back into the same tokens.
TEST(SmilesProperty, NeverSplitsMultiCharacterTokens) {
  const auto& v = SmilesVocabulary::instance();
  std::vector<std::string> alphabet;
  for (const auto& t : v.tokens()) {
    if (t.rfind("[cls]", 0) == 0 || t == "[pad]" || t == "[unk]") continue;
    alphabet.push_back(t);
  }
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<std::string> expected;
    std::string s;
    const auto len = std::uniform_int_distribution<int>(1, 30)(rng);
    for (int i = 0; i < len; ++i) {
      auto tok = alphabet[pick(rng)];
      expected.push_back(tok);
      s += tok;
    }
    EXPECT_EQ(smiles_tokens(s), expected) << s;
    EXPECT_EQ(smiles_tokens(s), regex_tokens(s)) << s;
  }
}

}  // namespace
}  // namespace lifted
