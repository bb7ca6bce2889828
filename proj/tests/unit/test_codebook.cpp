#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "nuteval/codebook.hpp"
#include "nuteval/error.hpp"
#include "nuteval/io.hpp"
#include "nuteval/llm.hpp"

using namespace nuteval;
using namespace nuteval::codebook;
namespace fs = std::filesystem;

namespace {

const fs::path kData = NUTEVAL_FIXTURE_DIR;

PrimingCodebook small_book(std::size_t k) {
    PrimingCodebook cb;
    for (std::size_t i = 0; i < k; ++i) {
        cb.factors.push_back({"Factor " + std::to_string(i), "explains " + std::to_string(i), "1 high, -1 low"});
    }
    return cb;
}

std::string vec(std::size_t n, double x) {
    std::string s = "[";
    for (std::size_t i = 0; i < n; ++i) s += (i ? ", " : "") + io::format_double(x);
    return s + "]";
}

}  // namespace

TEST(Prompts, AskForTheExpectedShapes) {
    EXPECT_NE(prompts::kBasicFactors.find("exact expression"), std::string_view::npos);
    EXPECT_NE(prompts::kCodebook.find("\"Priming factor\""), std::string_view::npos);
    EXPECT_NE(prompts::kPrimingVector.find("N-dimensional"), std::string_view::npos);
}

TEST(BasicFactorReply, KeepsDuplicateKeysAndStripsFences) {
    std::vector<std::pair<std::string, std::vector<std::string>>> out;
    ASSERT_TRUE(parse_basic_factor_reply("```json\n{\"nerves\": [\"so tight\"], \"nerves\": [\"shaky\", \"tense\"], "
                                         "\"joy\": \"so happy\"}\n```",
                                         out));
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[0].first, "nerves");
    EXPECT_EQ(out[1].second, (std::vector<std::string>{"shaky", "tense"}));
    EXPECT_EQ(out[2].second, (std::vector<std::string>{"so happy"}));
}

TEST(BasicFactorReply, RejectsMalformed) {
    std::vector<std::pair<std::string, std::vector<std::string>>> out;
    EXPECT_FALSE(parse_basic_factor_reply("{\"a\": [\"x\"]", out));
    EXPECT_FALSE(parse_basic_factor_reply("no json here", out));
    EXPECT_FALSE(parse_basic_factor_reply("{\"a\": {\"nested\": 1}}", out));
    EXPECT_FALSE(parse_basic_factor_reply("[\"a\"]", out));
}

TEST(Extraction, TwoWellFormedReplies) {
    const std::vector<ResponseText> responses{{"t1", "I was so nervous at the start."},
                                              {"t2", "My legs felt heavy, but the crowd was amazing."}};
    llm::ScriptedLlmClient client({R"({"pre-match nerves": ["so nervous"]})",
                                   R"({"fatigue": ["legs felt heavy"], "crowd support": ["the crowd was amazing"]})"});
    const auto r = extract_basic_factors(responses, client);
    ASSERT_EQ(r.factors.size(), 3u);
    EXPECT_EQ(r.factors[0].source_turn_id, "t1");
    for (const auto& f : r.factors) EXPECT_TRUE(f.evidence_verified) << f.label;
    EXPECT_EQ(r.skipped_responses, 0u);
}

TEST(Extraction, UnverifiedEvidenceIsFlagged) {
    const std::vector<ResponseText> responses{{"t1", "I played well."}};
    llm::ScriptedLlmClient client({R"({"self praise": ["I played brilliantly"]})"});
    const auto r = extract_basic_factors(responses, client);
    ASSERT_EQ(r.factors.size(), 1u);
    EXPECT_FALSE(r.factors[0].evidence_verified);
    EXPECT_FALSE(r.diagnostics.empty());
}

TEST(Extraction, MissingBraceRetriesThenSkips) {
    const std::vector<ResponseText> responses{{"t1", "alpha"}, {"t2", "beta gamma"}};
    llm::ScriptedLlmClient client({R"({"x": ["alpha"])", R"({"x": ["alpha"])", R"({"y": ["beta"]})"});
    const auto r = extract_basic_factors(responses, client);
    EXPECT_EQ(client.calls(), 3u);
    EXPECT_EQ(r.skipped_responses, 1u);
    ASSERT_EQ(r.factors.size(), 1u);
    EXPECT_EQ(r.factors[0].source_turn_id, "t2");
}

TEST(Extraction, NothingParsedThrows) {
    const std::vector<ResponseText> responses{{"t1", "alpha"}};
    llm::ScriptedLlmClient client({"nope", "still nope"});
    EXPECT_THROW(extract_basic_factors(responses, client), LlmError);
}

TEST(Extraction, ConcurrentRunKeepsInputOrder) {
    std::vector<ResponseText> responses;
    std::vector<llm::TranscriptRecord> records;
    for (int i = 0; i < 24; ++i) {
        const auto text = "response number " + std::to_string(i);
        responses.push_back({"t" + std::to_string(i), text});
        const auto reply = "{\"factor " + std::to_string(i) + "\": [\"number " + std::to_string(i) + "\"]}";
        records.push_back({llm::prompt_hash(prompts::kBasicFactors, text), "", "", reply});
    }
    llm::ReplayLlmClient client(records);
    const auto r = extract_basic_factors(responses, client, {6});
    ASSERT_EQ(r.factors.size(), 24u);
    for (int i = 0; i < 24; ++i) EXPECT_EQ(r.factors[i].label, "factor " + std::to_string(i));
}

TEST(Induction, DuplicateNameTriggersReprompt) {
    const std::vector<std::vector<std::string>> clusters{{"nerves"}, {"tension"}};
    llm::ScriptedLlmClient client({
        R"({"Priming factor": "Pressure", "Explanation": "e", "Value": "1 calm, -1 tense"})",
        R"({"Priming factor": "pressure", "Explanation": "e", "Value": "1 calm, -1 tense"})",
        R"({"Priming factor": "Arousal", "Explanation": "e", "Value": "1 high, -1 low"})",
    });
    const auto r = induce_codebook(clusters, client);
    ASSERT_EQ(r.codebook.k(), 2u);
    EXPECT_EQ(r.codebook.factors[1].name, "Arousal");
    EXPECT_EQ(client.calls(), 3u);
}

TEST(Induction, PersistentDuplicateGetsSuffix) {
    const std::vector<std::vector<std::string>> clusters{{"a"}, {"b"}};
    const std::string reply = R"({"Priming factor": "Focus", "Explanation": "e", "Value": "1 sharp, -1 distracted"})";
    llm::ScriptedLlmClient client({reply, reply, reply});
    const auto r = induce_codebook(clusters, client);
    EXPECT_EQ(r.codebook.factors[1].name, "Focus (2)");
}

TEST(Induction, HistoryNamesCountAsUsed) {
    const std::vector<std::vector<std::string>> clusters{{"a"}};
    const std::string reply = R"({"Priming factor": "Focus", "Explanation": "e", "Value": "1 sharp, -1 distracted"})";
    llm::ScriptedLlmClient client({reply, R"({"Priming factor": "Calm", "Explanation": "e", "Value": "1 a, -1 b"})"});
    const auto r = induce_codebook(clusters, client, {"Focus"});
    EXPECT_EQ(r.codebook.factors[0].name, "Calm");
}

TEST(Induction, UnusableReplyRetriesThenThrows) {
    const std::vector<std::vector<std::string>> clusters{{"a"}};
    llm::ScriptedLlmClient ok_after_retry(
        {"Priming factor: Focus", R"({"Priming factor": "Focus", "Explanation": "e", "Value": "1 a, -1 b"})"});
    EXPECT_EQ(induce_codebook(clusters, ok_after_retry).codebook.factors[0].name, "Focus");
    llm::ScriptedLlmClient one_pole({R"({"Priming factor": "F", "Explanation": "e", "Value": "-1 only"})",
                                     R"({"Priming factor": "F", "Explanation": "e", "Value": "nothing"})"});
    EXPECT_THROW(induce_codebook(clusters, one_pole), LlmError);
}

TEST(UserText, CarriesClusterHistoryAndNote) {
    const std::vector<std::string> cluster{"a", "b"}, history{"X"};
    const auto doc = nlohmann::json::parse(codebook_user_text(cluster, history, "X"));
    EXPECT_EQ(doc.at("factor_cluster").size(), 2u);
    EXPECT_EQ(doc.at("history_factors")[0], "X");
    EXPECT_TRUE(doc.contains("note"));
    EXPECT_FALSE(nlohmann::json::parse(codebook_user_text(cluster, history)).contains("note"));
}

TEST(PrimingVector, WellFormedAccepted) {
    const auto cb = small_book(20);
    llm::ScriptedLlmClient client({vec(20, 0.25)});
    const auto a = assign_priming_vector("text", cb, client);
    EXPECT_EQ(a.vector.values.size(), 20u);
    EXPECT_EQ(a.vector.codebook_id, cb.id());
    EXPECT_TRUE(a.diagnostics.empty());
}

TEST(PrimingVector, OutOfRangeEntryIsClamped) {
    const auto cb = small_book(3);
    llm::ScriptedLlmClient client({"[1.5, -3, 0.2]"});
    const auto a = assign_priming_vector("text", cb, client);
    EXPECT_EQ(a.vector.values, (std::vector<double>{1.0, -1.0, 0.2}));
    EXPECT_EQ(a.diagnostics.size(), 2u);
}

TEST(PrimingVector, WrongLengthRetriesThenErrors) {
    const auto cb = small_book(20);
    llm::ScriptedLlmClient twice({vec(19, 0), vec(19, 0)});
    EXPECT_THROW(assign_priming_vector("text", cb, twice), LlmError);
    EXPECT_EQ(twice.calls(), 2u);
    llm::ScriptedLlmClient recovers({vec(19, 0), vec(20, 0)});
    EXPECT_EQ(assign_priming_vector("text", cb, recovers).vector.values.size(), 20u);
}

TEST(PrimingVector, NonNumericEntryIsUnparseable) {
    const auto cb = small_book(2);
    llm::ScriptedLlmClient client({"[0.1, \"high\"]", "[null, 0]"});
    EXPECT_THROW(assign_priming_vector("text", cb, client), LlmError);
}

TEST(CodebookJson, RoundTripAndIntegrity) {
    auto cb = small_book(4);
    cb.provenance = {"abc", 11, 4, 0.05, 0.7, "m1"};
    const auto back = codebook_from_json(codebook_to_json(cb));
    EXPECT_EQ(back.id(), cb.id());
    EXPECT_EQ(back.provenance.tau, 0.05);
    auto doc = codebook_to_json(cb);
    doc["factors"][1]["name"] = "Factor 0";
    EXPECT_THROW(codebook_from_json(doc), ValidationError);
}

TEST(PrimingVectorFile, RoundTrip) {
    const auto path = fs::temp_directory_path() / "nuteval_vectors.jsonl";
    const std::vector<PrimingVectorRecord> records{{"t1", {{0.5, -0.5}, "id"}}, {"t2", {{0, 1}, "id"}}};
    save_priming_vectors(path, records);
    const auto back = load_priming_vectors(path);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].vector.values, (std::vector<double>{0, 1}));
    fs::remove(path);
}

TEST(Sampling, CoversSubjectsFirst) {
    std::vector<ConversationTurn> turns;
    for (int s = 0; s < 5; ++s) {
        for (int t = 0; t < 6; ++t) {
            ConversationTurn turn;
            turn.turn_id = std::to_string(s) + "-" + std::to_string(t);
            turn.dialogue_id = turn.turn_id;
            turn.subject_id = "p" + std::to_string(s);
            turn.response_text = "r";
            turns.push_back(turn);
        }
    }
    const Corpus c("c", turns);
    Diagnostics d;
    const auto sample = sample_responses(c, {}, 8, 3, d);
    ASSERT_EQ(sample.size(), 8u);
    std::set<std::string> subjects;
    for (const auto& r : sample) subjects.insert(c.find(r.turn_id)->subject_id);
    EXPECT_EQ(subjects.size(), 5u);
    EXPECT_TRUE(d.empty());

    const auto few = sample_responses(c, {}, 3, 3, d);
    EXPECT_EQ(few.size(), 3u);
    EXPECT_FALSE(d.empty());
    const std::vector<std::string> only{"0-1", "0-2"};
    EXPECT_EQ(sample_responses(c, only, 10, 3, d).size(), 2u);
}

TEST(Replay, InductionFixtureIsDeterministic) {
    const auto clusters =
        io::read_json(kData / "clusters.json").get<std::vector<std::vector<std::string>>>();
    const auto transcript = llm::load_transcript(kData / "codebook_transcript.jsonl");
    std::string first;
    for (int run = 0; run < 2; ++run) {
        llm::ReplayLlmClient client(transcript);
        const auto r = induce_codebook(clusters, client);
        ASSERT_EQ(r.codebook.k(), 20u);
        std::set<std::string> names;
        for (const auto& f : r.codebook.factors) names.insert(f.name);
        EXPECT_EQ(names.size(), 20u);
        const auto dump = codebook_to_json(r.codebook).dump();
        if (run == 0) first = dump;
        EXPECT_EQ(dump, first);
    }
}

TEST(Replay, MissingRecordIsLlmError) {
    llm::ReplayLlmClient client({});
    EXPECT_THROW(client.complete("s", "u"), LlmError);
}
