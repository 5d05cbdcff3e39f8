#include <random>
#include <set>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "golden.hpp"
#include "lifted/describe.hpp"
#include "lifted/errors.hpp"
#include "lifted/llm_client.hpp"
#include "lifted/logging.hpp"
#include "lifted/prompt.hpp"
#include "lifted/synthetic.hpp"

namespace lifted {
namespace {

using lifted::testing::expect_golden;
using lifted::testing::TempDir;
using lifted::testing::test_data;

TrialRecord fixture_record() {
  TrialRecord r = empty_record("NCT00000001", Phase::kII, 1);
  r.modalities[Modality::kDiseases] = std::vector<std::string>{"multiple myeloma", "Alzheimer's disease"};
  r.modalities[Modality::kDrugs] = std::vector<std::string>{"lenalidomide", "dexamethasone"};
  r.modalities[Modality::kDescription] =
      std::string("lenalidomide is an immunomodulatory analogue of thalidomide.");
  r.modalities[Modality::kSmiles] =
      std::vector<std::string>{"C1CC(=O)NC(=O)C1N2CC3=C(C2=O)C=CC=C3N", "N.N.Cl[Pt]Cl"};
  r.modalities[Modality::kCriteria] =
      std::string("Inclusion Criteria: - Age >= 18 years. Exclusion Criteria: - Pregnancy.");
  return r;
}

// Test-side reader for the linearized form.
struct Parsed {
  std::string key;
  std::string scalar;
  std::vector<std::string> list;
  bool is_list = false;
};

Parsed parse_linearized(const std::string& s, bool list_valued) {
  Parsed p;
  const auto colon = s.find(": ");
  p.key = s.substr(0, colon);
  const std::string value = s.substr(colon + 2);
  if (!list_valued) {
    p.scalar = value;
    return p;
  }
  p.is_list = true;
  std::size_t i = 1;
  while (i < value.size() && value[i] != ']') {
    const char quote = value[i++];
    std::string item;
    while (value[i] != quote) {
      if (value[i] == '\\') ++i;
      item.push_back(value[i++]);
    }
    ++i;
    p.list.push_back(item);
    if (value.compare(i, 2, ", ") == 0) i += 2;
  }
  return p;
}

TEST(Linearize, QuotedList) {
  TrialRecord r = empty_record("t", Phase::kI, 0);
  r.modalities[Modality::kDiseases] = std::vector<std::string>{"cancer", "melanoma"};
  EXPECT_EQ(linearize(r, Modality::kDiseases), "diseases: ['cancer', 'melanoma']");
}

TEST(Linearize, EmptyListAndScalar) {
  TrialRecord r = empty_record("t", Phase::kI, 0);
  EXPECT_EQ(linearize(r, Modality::kDiseases), "diseases: []");
  r.modalities[Modality::kCriteria] = std::string("Inclusion: age > 18");
  EXPECT_EQ(linearize(r, Modality::kCriteria), "criteria: Inclusion: age > 18");
}

TEST(Linearize, SummarizationIsRejected) {
  EXPECT_THROW(linearize(fixture_record(), Modality::kSummarization), ContractError);
}

TEST(Linearize, ApostropheSwitchesToDoubleQuotes) {
  const std::vector<std::string> v{"Alzheimer's", "plain", "both ' and \""};
  EXPECT_EQ(render_list(v), "[\"Alzheimer's\", 'plain', 'both \\' and \"']");
}

TEST(LinearizeAll, TwoModalityToy) {
  TrialRecord r = empty_record("t", Phase::kII, 0);
  r.modalities[Modality::kDiseases] = std::vector<std::string>{"x"};
  r.modalities[Modality::kDrugs] = std::vector<std::string>{"y"};
  const std::vector<Modality> kinds{Modality::kDiseases, Modality::kDrugs};
  EXPECT_EQ(linearize_all(r, kinds), "phase: phase 2; diseases: ['x']; drugs: ['y']");
}

TEST(LinearizeAll, AllEmptyRecordListsEveryKey) {
  const auto s = linearize_all(empty_record("t", Phase::kIII, 0));
  EXPECT_EQ(s, "phase: phase 3; diseases: []; drugs: []; description: ; smiles: []; criteria: ");
}

TEST(LinearizeAll, Golden) { expect_golden("linearize_all.txt", linearize_all(fixture_record())); }

TEST(BuildPrompt, ContainsInstructionAndTemplate) {
  const auto p = build_prompt("diseases: ['x']");
  EXPECT_EQ(p.system_message, "You are a helpful assistant.");
  const auto text = p.render();
  EXPECT_NE(text.find("Please briefly summarize the sample with its value in one sentence."),
            std::string::npos);
  EXPECT_NE(text.find("Here is the schema definition of the table"), std::string::npos);
  EXPECT_NE(text.find("nifedipine"), std::string::npos);
  EXPECT_NE(text.find("diseases: ['x']"), std::string::npos);
}

TEST(BuildPrompt, EmptySlot) {
  const auto p = build_prompt("");
  EXPECT_EQ(p.render(), p.prefix + p.suffix);
  EXPECT_FALSE(p.prefix.empty());
}

TEST(BuildPrompt, Golden) {
  const auto p = build_prompt(linearize_all(fixture_record()));
  expect_golden("prompt.txt", p.system_message + "\n---\n" + p.render());
}

TEST(BuildPrompt, HashIsByteDeterministic) {
  EXPECT_EQ(build_prompt("a").hash(), build_prompt("a").hash());
  EXPECT_NE(build_prompt("a").hash(), build_prompt("b").hash());
  EXPECT_NE(build_prompt("a").hash(), build_prompt("a", "other schema").hash());
}

// Round trip through the test-side parser over random records.
TEST(LinearizeProperty, ParserRoundTrip) {
  std::mt19937_64 rng(11);
  const std::string alphabet = "abcXYZ 019-',\"\\[]:;";
  auto word = [&] {
    std::string s;
    const auto len = std::uniform_int_distribution<int>(0, 12)(rng);
    for (int i = 0; i < len; ++i) {
      s.push_back(alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)]);
    }
    return s;
  };
  for (int trial = 0; trial < 300; ++trial) {
    TrialRecord r = empty_record("t", Phase::kI, 0);
    for (auto m : kRawModalities) {
      if (is_list_modality(m)) {
        std::vector<std::string> v(std::uniform_int_distribution<int>(0, 4)(rng));
        for (auto& s : v) s = word();
        r.modalities[m] = v;
      } else {
        r.modalities[m] = word();
      }
    }
    for (auto m : kRawModalities) {
      const auto parsed = parse_linearized(linearize(r, m), is_list_modality(m));
      EXPECT_EQ(parsed.key, modality_name(m));
      if (is_list_modality(m)) {
        ASSERT_TRUE(parsed.is_list);
        EXPECT_EQ(parsed.list, std::get<std::vector<std::string>>(r.raw(m)));
      } else {
        EXPECT_EQ(parsed.scalar, std::get<std::string>(r.raw(m)));
      }
    }
  }
}

TEST(Dataset, JsonlRoundTrip) {
  TempDir dir("dataset");
  const auto records = generate_synthetic(12, 3);
  write_dataset(dir / "d.jsonl", records);
  const auto back = read_dataset(dir / "d.jsonl");
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(record_to_json(back[i]), record_to_json(records[i]));
  }
}

TEST(Dataset, MalformedLineReportsLocation) {
  TempDir dir("dataset-bad");
  std::ofstream(dir / "d.jsonl") << record_to_json(fixture_record()).dump() << "\n{\"id\": 3,\n";
  try {
    read_dataset(dir / "d.jsonl");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("d.jsonl:2"), std::string::npos) << e.what();
  }
}

TEST(Dataset, WrongValueKindRejected) {
  auto row = record_to_json(fixture_record());
  row["diseases"] = "not a list";
  EXPECT_THROW(record_from_json(row), DataError);
  row = record_to_json(fixture_record());
  row["label"] = 2;
  EXPECT_THROW(record_from_json(row), DataError);
  row = record_to_json(fixture_record());
  row["phase"] = "IV";
  EXPECT_THROW(record_from_json(row), DataError);
}

class CountingClient : public LlmClient {
 public:
  std::string complete(const PromptBundle& prompt) override {
    ++calls;
    return inner.complete(prompt);
  }
  std::string_view name() const override { return "counting"; }
  std::atomic<int> calls{0};
  StubLlmClient inner;
};

class FailingClient : public LlmClient {
 public:
  std::string complete(const PromptBundle&) override { throw LlmError("boom", true); }
  std::string_view name() const override { return "failing"; }
};

TEST(Describe, StubTextsFollowTransform) {
  StubLlmClient stub;
  const auto r = fixture_record();
  const auto texts = describe(stub, r);
  ASSERT_EQ(texts.size(), kNumModalities);
  for (std::size_t k = 0; k < texts.size(); ++k) {
    EXPECT_EQ(index_of(texts[k].kind), k);
    EXPECT_EQ(texts[k].trial_id, r.id);
  }
  EXPECT_EQ(texts[0].text, stub_transform(linearize_all(r)));
  EXPECT_EQ(texts[1].text, stub_transform(linearize(r, Modality::kDiseases)));
  EXPECT_EQ(texts[1].text, "This sample concerns diseases: multiple myeloma, Alzheimers disease");
  EXPECT_EQ(texts[4].text, "C1CC(=O)NC(=O)C1N2CC3=C(C2=O)C=CC=C3N.N.N.Cl[Pt]Cl");
  EXPECT_EQ(texts[4].provenance, Provenance::kPassthrough);
  EXPECT_EQ(texts[0].provenance, Provenance::kLlmGenerated);
}

TEST(Describe, StubNeverEmpty) {
  for (const auto& r : generate_synthetic(20, 5)) {
    for (auto kind : kRawModalities) {
      EXPECT_FALSE(stub_transform(linearize(r, kind)).empty());
    }
  }
  EXPECT_EQ(stub_transform("a b c d", 2), "This sample concerns a b");
}

TEST(Describe, ReplayFixture) {
  const auto cassette = test_data("fixtures/cassette.jsonl");
  if (std::getenv("LIFTED_UPDATE_GOLDEN")) {
    std::filesystem::remove(cassette);
    class Scripted : public LlmClient {
     public:
      std::string complete(const PromptBundle& p) override {
        return "Recorded description of " + p.linearization.substr(0, p.linearization.find(':')) + ".";
      }
      std::string_view name() const override { return "scripted"; }
    } scripted;
    RecordingLlmClient rec(scripted, cassette);
    describe(rec, fixture_record());
  }
  ReplayLlmClient replay(cassette);
  EXPECT_EQ(replay.size(), 5u);
  const auto texts = describe(replay, fixture_record());
  EXPECT_EQ(texts[0].text, "Recorded description of phase.");
  EXPECT_EQ(texts[2].text, "Recorded description of drugs.");
  EXPECT_EQ(texts[5].text, "Recorded description of criteria.");

  auto other = fixture_record();
  other.modalities[Modality::kCriteria] = std::string("changed");
  EXPECT_THROW(describe(replay, other), TransportError);
}

TEST(Describe, CacheHitMakesNoCalls) {
  TempDir dir("cache");
  CountingClient client;
  DescriptionCache cache(dir.path());
  DescribeStats stats;
  const auto first = describe(client, fixture_record(), &cache, &stats);
  EXPECT_EQ(client.calls.load(), 5);
  const auto second = describe(client, fixture_record(), &cache, &stats);
  EXPECT_EQ(client.calls.load(), 5);
  EXPECT_EQ(stats.cache_hits, 5u);
  for (std::size_t k = 0; k < first.size(); ++k) EXPECT_EQ(first[k].text, second[k].text);
}

TEST(Describe, CorruptEntryFallsBackWithWarning) {
  TempDir dir("cache-corrupt");
  CountingClient client;
  DescriptionCache cache(dir.path());
  const auto r = fixture_record();
  describe(client, r, &cache);
  const auto hash = build_prompt(linearize(r, Modality::kDrugs)).hash();
  std::ofstream(cache.entry_path(r.id, Modality::kDrugs, hash), std::ios::trunc) << "{not json";

  std::vector<std::string> warnings;
  auto previous = set_warning_sink([&](std::string_view m) { warnings.emplace_back(m); });
  DescribeStats stats;
  const auto texts = describe(client, r, &cache, &stats);
  set_warning_sink(previous);
  EXPECT_EQ(client.calls.load(), 6);
  EXPECT_EQ(stats.cache_warnings, 1u);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_EQ(texts[2].text, stub_transform(linearize(r, Modality::kDrugs)));
  // The entry was rewritten, so a third pass is clean.
  describe(client, r, &cache);
  EXPECT_EQ(client.calls.load(), 6);
}

TEST(Describe, FailureCarriesTrialId) {
  FailingClient client;
  try {
    describe(client, fixture_record());
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.trial_id(), "NCT00000001");
    EXPECT_TRUE(e.retriable());
  }
}

TEST(Describe, ConcurrentFanOutIsIdempotent) {
  TempDir dir("cache-par");
  CountingClient client;
  const auto records = generate_synthetic(24, 9);
  DescribeOptions opts;
  opts.cache_dir = dir.path();
  opts.max_concurrency = 4;
  DescribeStats s1, s2;
  const auto a = describe_all(client, records, opts, &s1);
  const auto b = describe_all(client, records, opts, &s2);
  EXPECT_EQ(s1.client_calls, 24u * 5u);
  EXPECT_EQ(s2.client_calls, 0u);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < kNumModalities; ++k) EXPECT_EQ(a[i][k].text, b[i][k].text);
  }
}

TEST(Describe, LinearizedTextsSkipSummary) {
  const auto texts = linearized_texts(fixture_record());
  ASSERT_EQ(texts.size(), kNumRawModalities);
  EXPECT_EQ(texts[0].kind, Modality::kDiseases);
  EXPECT_EQ(texts[0].text, linearize(fixture_record(), Modality::kDiseases));
}

TEST(HttpClient, PostsChatCompletionWithBearer) {
  httplib::Server server;
  std::string seen_auth, seen_body;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"a summary"}}]})",
                    "application/json");
  });
  server.Post("/busy", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  server.Post("/bad", [](const httplib::Request&, httplib::Response& res) { res.status = 400; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  HttpLlmClient client({base + "/v1/chat/completions", "test-model", "secret", 5});
  const auto prompt = build_prompt("diseases: ['x']");
  EXPECT_EQ(client.complete(prompt), "a summary");
  EXPECT_EQ(seen_auth, "Bearer secret");
  const auto body = nlohmann::json::parse(seen_body);
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][0]["content"], "You are a helpful assistant.");
  EXPECT_EQ(body["messages"][1]["content"], prompt.render());

  HttpLlmClient busy({base + "/busy", "m", "", 5});
  try {
    busy.complete(prompt);
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_TRUE(e.retriable());
  }
  HttpLlmClient bad({base + "/bad", "m", "", 5});
  try {
    bad.complete(prompt);
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_FALSE(e.retriable());
  }
  server.stop();
  th.join();
}

TEST(HttpClient, SettingsFromEnvironment) {
  ::unsetenv(kEnvLlmEndpoint);
  EXPECT_THROW(HttpLlmSettings::from_env(), ContractError);
  ::setenv(kEnvLlmEndpoint, "http://localhost:1/x", 1);
  ::unsetenv(kEnvLlmModel);
  ::setenv(kEnvLlmApiKey, "k", 1);
  const auto s = HttpLlmSettings::from_env();
  EXPECT_EQ(s.model, "gpt-3.5-turbo");
  EXPECT_EQ(s.api_key, "k");
  ::unsetenv(kEnvLlmEndpoint);
  ::unsetenv(kEnvLlmApiKey);
}

TEST(HttpClient, UnreachableEndpointIsRetriable) {
  HttpLlmClient client({"http://127.0.0.1:1/v1", "m", "", 1});
  try {
    client.complete(build_prompt("x"));
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_TRUE(e.retriable());
  }
}

TEST(Synthetic, DeterministicAndSized) {
  const auto a = generate_synthetic(50, 7);
  const auto b = generate_synthetic(50, 7);
  ASSERT_EQ(a.size(), 50u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(record_to_json(a[i]), record_to_json(b[i]));
  const auto c = generate_synthetic(50, 8);
  EXPECT_NE(record_to_json(a[0]).dump() + record_to_json(a[1]).dump(),
            record_to_json(c[0]).dump() + record_to_json(c[1]).dump());
  for (const auto& r : a) EXPECT_NO_THROW(r.validate());
}

TEST(Synthetic, ZeroIsAnError) { EXPECT_THROW(generate_synthetic(0, 1), ContractError); }

bool mentions(const RawValue& v, const std::string& token) {
  if (const auto* s = std::get_if<std::string>(&v)) return s->find(token) != std::string::npos;
  for (const auto& item : std::get<std::vector<std::string>>(v)) {
    if (item.find(token) != std::string::npos) return true;
  }
  return false;
}

// A one-feature rule on the planted modality, fitted on half the corpus,
// classifies the other half.
TEST(Synthetic, PlantedModalityIsPredictive) {
  SignalSpec spec;
  spec.fidelity = 0.9;
  const auto records = generate_synthetic(2000, 17, spec);
  std::size_t correct = 0, positives = 0;
  for (const auto& r : records) {
    positives += r.label;
    const bool says_success = mentions(r.raw(Modality::kDiseases), spec.success_token);
    const bool says_failure = mentions(r.raw(Modality::kDiseases), spec.failure_token);
    EXPECT_NE(says_success, says_failure);
    correct += (says_success ? 1 : 0) == r.label;
    for (auto m : {Modality::kDrugs, Modality::kDescription, Modality::kCriteria}) {
      EXPECT_FALSE(mentions(r.raw(m), spec.success_token) || mentions(r.raw(m), spec.failure_token));
    }
  }
  const double acc = static_cast<double>(correct) / records.size();
  // Binomial(2000, 0.9): sd ~ 0.0067.
  EXPECT_NEAR(acc, 0.9, 0.03);
  EXPECT_GT(acc, 0.85);
  EXPECT_NEAR(static_cast<double>(positives) / records.size(), 0.5, 0.05);
}

TEST(Synthetic, SmilesSignalUsesAtoms) {
  SignalSpec spec;
  spec.modalities = {Modality::kSmiles};
  for (const auto& r : generate_synthetic(30, 2, spec)) {
    const auto& smiles = std::get<std::vector<std::string>>(r.raw(Modality::kSmiles));
    EXPECT_EQ(smiles.back(), r.label ? "[Ag]" : "[Au]");
  }
}

}  // namespace
}  // namespace lifted
