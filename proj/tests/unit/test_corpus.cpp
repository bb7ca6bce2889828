#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "nuteval/corpus.hpp"
#include "nuteval/error.hpp"
#include "nuteval/io.hpp"
#include "nuteval/random.hpp"

using namespace nuteval;
namespace fs = std::filesystem;

namespace {

std::string line(const std::string& id, const std::string& subject, const std::string& continent = "Europe") {
    return R"({"turn_id":")" + id + R"(","dialogue_id":"d-)" + id + R"(","subject_id":")" + subject +
           R"(","subject_continent":")" + continent + R"(","question_text":"q?","response_text":"answer )" + id +
           "\"}\n";
}

Corpus synthetic(std::size_t subjects, std::size_t turns_each, std::vector<std::string> continents = {"Europe"}) {
    std::vector<ConversationTurn> turns;
    for (std::size_t s = 0; s < subjects; ++s) {
        for (std::size_t t = 0; t < turns_each; ++t) {
            ConversationTurn turn;
            turn.turn_id = "s" + std::to_string(s) + "t" + std::to_string(t);
            turn.dialogue_id = turn.turn_id;
            turn.subject_id = "s" + std::to_string(s);
            turn.subject_continent = *parse_continent(continents[s % continents.size()]);
            turn.question_text = "q";
            turn.response_text = "r " + turn.turn_id;
            turns.push_back(std::move(turn));
        }
    }
    return Corpus("synthetic", std::move(turns));
}

std::set<std::string> subjects_of(const Corpus& c, const std::vector<std::string>& ids) {
    std::set<std::string> out;
    for (const auto& id : ids) out.insert(c.find(id)->subject_id);
    return out;
}

}  // namespace

TEST(LoadCorpus, ThreeValidLines) {
    const auto r = parse_corpus(line("a", "p1") + line("b", "p1") + line("c", "p2"), "t");
    EXPECT_EQ(r.corpus.size(), 3u);
    EXPECT_EQ(r.corpus.subjects().size(), 2u);
    EXPECT_TRUE(r.diagnostics.empty());
}

TEST(LoadCorpus, DuplicateIdNamesTheId) {
    try {
        parse_corpus(line("a", "p1") + line("dup-7", "p1") + line("dup-7", "p2"), "t");
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("dup-7"), std::string::npos);
    }
}

TEST(LoadCorpus, EmptyFileWarns) {
    const auto r = parse_corpus("", "t");
    EXPECT_EQ(r.corpus.size(), 0u);
    ASSERT_FALSE(r.diagnostics.empty());
    EXPECT_EQ(r.diagnostics.front().severity, Severity::Warning);
}

TEST(LoadCorpus, MalformedRecordSkippedOrStrict) {
    const std::string text = line("a", "p1") + "{\"turn_id\": \"b\"}\n" + "not json\n";
    const auto lenient = parse_corpus(text, "t");
    EXPECT_EQ(lenient.corpus.size(), 1u);
    EXPECT_EQ(lenient.diagnostics.size(), 2u);
    EXPECT_THROW(parse_corpus(text, "t", {CorpusFormat::JsonLines, true}), ValidationError);
}

TEST(LoadCorpus, UnknownFieldsSurviveRoundTrip) {
    const std::string text =
        R"({"turn_id":"a","dialogue_id":"d","subject_id":"p","question_text":"q","response_text":"r","tournament":"x"})";
    const auto c = parse_corpus(text, "t").corpus;
    EXPECT_EQ(c.turns()[0].extra.at("tournament"), "x");
    EXPECT_EQ(turn_to_json(c.turns()[0]).at("tournament"), "x");
}

TEST(LoadCorpus, MissingFileIsIoError) {
    EXPECT_THROW(load_corpus("/nonexistent/corpus.jsonl"), IoError);
}

TEST(LoadCorpus, JsonArrayFormat) {
    const std::string text = "[" + line("a", "p").substr(0, line("a", "p").size() - 1) + "]";
    EXPECT_EQ(parse_corpus(text, "t", {CorpusFormat::JsonArray, true}).corpus.size(), 1u);
}

TEST(Ratio, ParseAndFormat) {
    EXPECT_EQ(parse_ratio("4:1"), (Ratio{4, 1}));
    EXPECT_EQ(to_string(Ratio{3, 2}), "3:2");
    EXPECT_THROW(parse_ratio("4:0"), PreconditionError);
    EXPECT_THROW(parse_ratio("four"), PreconditionError);
}

TEST(SubjectDependentSplit, TenSubjectsFiveTurns) {
    const auto c = synthetic(10, 5);
    const auto m = make_subject_dependent_split(c, 7);
    EXPECT_EQ(m.train_ids.size(), 40u);
    EXPECT_EQ(m.test_ids.size(), 10u);
    const auto train = subjects_of(c, m.train_ids);
    for (const auto& s : subjects_of(c, m.test_ids)) EXPECT_TRUE(train.count(s));
    EXPECT_TRUE(validate_split(m, c).passed());
}

TEST(SubjectDependentSplit, SingleSubject) {
    const auto c = synthetic(1, 5);
    const auto m = make_subject_dependent_split(c, 1);
    EXPECT_EQ(m.train_ids.size(), 4u);
    EXPECT_EQ(m.test_ids.size(), 1u);
}

TEST(SubjectDependentSplit, SingleTurnSubjectWarnsOrThrows) {
    const auto c = synthetic(3, 1);
    const auto m = make_subject_dependent_split(c, 1);
    EXPECT_EQ(m.train_ids.size(), 3u);
    EXPECT_FALSE(m.diagnostics.empty());
    EXPECT_THROW(make_subject_dependent_split(c, 1, {Ratio{}, true}), ValidationError);
}

TEST(SubjectDependentSplit, DeterministicPerSeed) {
    const auto c = synthetic(8, 6);
    const auto a = make_subject_dependent_split(c, 42), b = make_subject_dependent_split(c, 42);
    EXPECT_EQ(a.test_ids, b.test_ids);
    EXPECT_NE(make_subject_dependent_split(c, 43).test_ids, a.test_ids);
}

TEST(SubjectIndependentSplit, TwoPerContinent) {
    const auto c = synthetic(10, 5, {"Europe", "Asia", "Africa", "North America", "South America"});
    const auto m = make_subject_independent_split(c, 3);
    const auto train = subjects_of(c, m.train_ids), test = subjects_of(c, m.test_ids);
    for (const auto& s : test) EXPECT_FALSE(train.count(s));
    std::set<Continent> train_c, test_c;
    for (const auto& id : m.train_ids) train_c.insert(c.find(id)->subject_continent);
    for (const auto& id : m.test_ids) test_c.insert(c.find(id)->subject_continent);
    EXPECT_EQ(train_c.size(), 5u);
    EXPECT_EQ(test_c.size(), 5u);
    ASSERT_TRUE(m.continent_balanced.has_value());
    EXPECT_TRUE(*m.continent_balanced);
}

TEST(SubjectIndependentSplit, TwoSubjects) {
    const auto c = synthetic(2, 5);
    const auto m = make_subject_independent_split(c, 9);
    EXPECT_EQ(subjects_of(c, m.train_ids).size(), 1u);
    EXPECT_EQ(subjects_of(c, m.test_ids).size(), 1u);
}

TEST(ValidateSplit, SharedSubjectFailsDisjointness) {
    const auto c = synthetic(10, 5, {"Europe", "Asia"});
    auto m = make_subject_independent_split(c, 3);
    // move one turn of a train subject into test
    const auto moved = m.train_ids.front();
    m.train_ids.erase(m.train_ids.begin());
    m.test_ids.push_back(moved);
    const auto r = validate_split(m, c);
    EXPECT_FALSE(r.passed());
    ASSERT_NE(r.find("subject_disjoint"), nullptr);
    EXPECT_FALSE(r.find("subject_disjoint")->passed);
}

TEST(ValidateSplit, RatioOffTargetFails) {
    const auto c = synthetic(2, 10);
    SplitManifest m;
    for (const auto& t : c.turns()) (t.turn_id.back() < '5' ? m.train_ids : m.test_ids).push_back(t.turn_id);
    const auto r = validate_split(m, c);
    ASSERT_NE(r.find("ratio"), nullptr);
    EXPECT_FALSE(r.find("ratio")->passed);
}

TEST(ValidateSplit, UnknownIdFails) {
    const auto c = synthetic(2, 5);
    auto m = make_subject_dependent_split(c, 1);
    m.test_ids.push_back("ghost");
    EXPECT_FALSE(validate_split(m, c).find("known_ids")->passed);
}

TEST(SplitManifest, JsonRoundTrip) {
    const auto c = synthetic(6, 5, {"Europe", "Asia"});
    const auto m = make_subject_independent_split(c, 5);
    const auto path = fs::temp_directory_path() / "nuteval_split_roundtrip.json";
    save_split(m, path);
    const auto back = load_split(path);
    EXPECT_EQ(back.train_ids, m.train_ids);
    EXPECT_EQ(back.test_ids, m.test_ids);
    EXPECT_EQ(back.protocol, m.protocol);
    EXPECT_EQ(back.seed, m.seed);
    EXPECT_EQ(back.continent_balanced, m.continent_balanced);
    fs::remove(path);
}

TEST(SplitProperties, RandomCorporaNeverViolate) {
    Rng rng(2024);
    const std::vector<std::string> continents{"Europe", "Asia", "Africa", "Oceania", "North America"};
    for (int i = 0; i < 40; ++i) {
        std::vector<ConversationTurn> turns;
        const auto subjects = 2 + rng.below(25);
        for (std::uint64_t s = 0; s < subjects; ++s) {
            const auto n = 2 + rng.below(8);
            for (std::uint64_t t = 0; t < n; ++t) {
                ConversationTurn turn;
                turn.turn_id = std::to_string(s) + "/" + std::to_string(t);
                turn.dialogue_id = turn.turn_id;
                turn.subject_id = "p" + std::to_string(s);
                turn.subject_continent = *parse_continent(continents[rng.below(continents.size())]);
                turn.response_text = "x";
                turns.push_back(std::move(turn));
            }
        }
        const Corpus c("rand", std::move(turns));
        const auto seed = rng.next();
        const auto sd = make_subject_dependent_split(c, seed);
        const auto sd_report = validate_split(sd, c);
        for (const auto* name : {"known_ids", "disjoint", "coverage", "test_subjects_in_train"}) {
            ASSERT_TRUE(sd_report.find(name)->passed) << name << " case " << i;
        }
        const auto si = make_subject_independent_split(c, seed);
        const auto si_report = validate_split(si, c);
        for (const auto* name : {"known_ids", "disjoint", "coverage", "subject_disjoint", "nonempty"}) {
            ASSERT_TRUE(si_report.find(name)->passed) << name << " case " << i;
        }
    }
}

TEST(Corpus, ContentHashIgnoresName) {
    const auto a = parse_corpus(line("a", "p1") + line("b", "p2"), "/one/path.jsonl").corpus;
    const auto b = parse_corpus(line("a", "p1") + line("b", "p2"), "other.jsonl").corpus;
    EXPECT_EQ(a.content_hash(), b.content_hash());
    EXPECT_NE(a.content_hash(), parse_corpus(line("a", "p1") + line("b", "p3"), "x").corpus.content_hash());
}
