#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "nuteval/affect.hpp"
#include "nuteval/error.hpp"

using namespace nuteval;
using namespace nuteval::affect;

namespace {

VadLexicon toy() { return VadLexicon({{"happy", {0.9, 0.7, 0.6}}, {"sad", {0.1, 0.3, 0.4}}}); }

AffectProfile profile(std::optional<Vad> means, double coverage, const std::string& id = "L") {
    AffectProfile p;
    p.means = means;
    p.coverage = coverage;
    p.lexicon_id = id;
    return p;
}

}  // namespace

TEST(Lexicon, SpanningValuesNormalizeToThemselves) {
    const auto lex = VadLexicon::parse("a\t0\t0\t0\nb\t0.5\t0.5\t0.5\nc\t1\t1\t1\n");
    EXPECT_DOUBLE_EQ((*lex.normalized("a"))[Valence], 0.0);
    EXPECT_DOUBLE_EQ((*lex.normalized("b"))[Valence], 0.5);
    EXPECT_DOUBLE_EQ((*lex.normalized("c"))[Dominance], 1.0);
}

TEST(Lexicon, MissingColumnNamesLine) {
    try {
        VadLexicon::parse("term,v,a,d\nhappy,1,1,1\nsad,0,0\n");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}

TEST(Lexicon, RejectsDegenerateInput) {
    EXPECT_THROW(VadLexicon({}), ValidationError);
    EXPECT_THROW(VadLexicon::parse("a\t1\t1\t1\nb\t1\t0\t0\n"), ValidationError);  // valence has no spread
    EXPECT_THROW(VadLexicon::parse("a\t1\t1\t1\nA\t0\t0\t0\n"), ValidationError);  // duplicate after lowercasing
}

TEST(Lexicon, IdDependsOnContentOnly) {
    EXPECT_EQ(toy().id(), VadLexicon({{"sad", {0.1, 0.3, 0.4}}, {"happy", {0.9, 0.7, 0.6}}}).id());
    EXPECT_NE(toy().id(), VadLexicon({{"happy", {0.9, 0.7, 0.6}}, {"sad", {0.2, 0.3, 0.4}}}).id());
}

TEST(Lemmatizer, CandidatesForInflections) {
    const RuleLemmatizer lem;
    auto has = [&](const std::string& token, const std::string& lemma) {
        const auto c = lem.lemmas(token);
        return std::find(c.begin(), c.end(), lemma) != c.end();
    };
    EXPECT_TRUE(has("making", "make"));
    EXPECT_TRUE(has("running", "run"));
    EXPECT_TRUE(has("played", "play"));
    EXPECT_TRUE(has("cried", "cry"));
    EXPECT_TRUE(has("matches", "match"));
    EXPECT_TRUE(has("losses", "loss"));
    EXPECT_TRUE(has("points", "point"));
    EXPECT_TRUE(has("player's", "player"));
    EXPECT_TRUE(lem.lemmas("news").empty());
    EXPECT_TRUE(lem.lemmas("was").empty());
}

TEST(Profile, ToyLexiconHandCase) {
    const auto p = affect_profile("happy sad happy", toy());
    ASSERT_TRUE(p.means.has_value());
    EXPECT_DOUBLE_EQ((*p.means)[Valence], 2.0 / 3.0);
    EXPECT_DOUBLE_EQ((*p.means)[Arousal], 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(p.coverage, 1.0);
    EXPECT_EQ(p.matched_count, 3u);
}

TEST(Profile, NoMatchesMeansAbsent) {
    const auto p = affect_profile("the weather", toy());
    EXPECT_FALSE(p.means.has_value());
    EXPECT_EQ(p.coverage, 0.0);
    EXPECT_EQ(affect_profile("", toy()).coverage, 0.0);
}

TEST(Profile, LemmaLookup) {
    const auto lex = VadLexicon({{"win", {1, 1, 1}}, {"lose", {0, 0, 0}}});
    const auto p = affect_profile("Winning beats losing", lex);
    EXPECT_EQ(p.matched_count, 2u);
    EXPECT_DOUBLE_EQ(p.coverage, 2.0 / 3.0);
}

TEST(EmotionConsistency, Identity) {
    const auto p = affect_profile("happy days and sad nights", toy());
    EXPECT_DOUBLE_EQ(emotion_consistency(p, p), 1.0);
}

TEST(EmotionConsistency, AllMeansDifferByOne) {
    EXPECT_NEAR(emotion_consistency(profile(Vad{1, 1, 1}, 0.5), profile(Vad{0, 0, 0}, 0.5)), 0.25, 1e-12);
}

TEST(EmotionConsistency, CoveragePenalty) {
    EXPECT_NEAR(emotion_consistency(profile(Vad{0.3, 0.4, 0.5}, 1.0), profile(Vad{0.3, 0.4, 0.5}, 0.5)), 0.6, 1e-12);
}

TEST(EmotionConsistency, DifferentLexiconsRejected) {
    EXPECT_THROW(emotion_consistency(profile(Vad{0, 0, 0}, 1, "A"), profile(Vad{0, 0, 0}, 1, "B")), PreconditionError);
}

TEST(EmotionConsistency, SymmetricAndBounded) {
    Rng rng(5);
    for (int i = 0; i < 2000; ++i) {
        auto make = [&] {
            if (rng.below(5) == 0) return profile(std::nullopt, 0.0);
            return profile(Vad{rng.uniform(), rng.uniform(), rng.uniform()}, rng.uniform());
        };
        const auto a = make(), b = make();
        const double beta = rng.uniform();
        ASSERT_EQ(emotion_consistency(a, b, beta), emotion_consistency(b, a, beta));
        ASSERT_LE(emotion_consistency(a, b, beta), 1.0);
        ASSERT_GE(emotion_consistency(a, b, beta), -beta);
    }
}

TEST(ValenceArousal, IdentityAndZeroCoverage) {
    const auto lex = toy();
    const auto same = valence_arousal_scores("so happy", "so happy", lex);
    EXPECT_DOUBLE_EQ(same.valence, 1.0);
    EXPECT_DOUBLE_EQ(same.arousal, 1.0);
    // reference fully covered (V = 1), candidate has no lexicon tokens
    const auto none = valence_arousal_scores("happy", "nothing here", lex);
    EXPECT_NEAR(none.valence, 1.0 - 1.0 - 0.8 * 1.0, 1e-15);
}

TEST(ValenceArousal, DisjointAffectMatchesSubstitution) {
    const auto lex = toy();
    // happy -> (1,1,1), sad -> (0,0,0) after normalisation; both coverages 1/2
    const auto s = valence_arousal_scores("very happy", "very sad", lex);
    EXPECT_DOUBLE_EQ(s.valence, 0.0);
    EXPECT_DOUBLE_EQ(s.arousal, 0.0);
}
