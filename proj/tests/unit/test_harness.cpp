#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "nuteval/error.hpp"
#include "nuteval/harness.hpp"
#include "nuteval/io.hpp"
#include "oracles.hpp"

using namespace nuteval;
using namespace nuteval::harness;
namespace fs = std::filesystem;

namespace {

const fs::path kData = NUTEVAL_FIXTURE_DIR;

struct Fixture {
    Corpus corpus = load_corpus(kData / "corpus.jsonl").corpus;
    SplitManifest split = load_split(kData / "split.json");
    EvalConfig config = load_config(kData / "eval_config.json");
    affect::VadLexicon lexicon = affect::VadLexicon::load(config.lexicon_path);
    semantic::FixtureEmbeddingProvider embedder = semantic::FixtureEmbeddingProvider::load(config.embeddings_path);
    affect::RuleLemmatizer lemmatizer;
    std::vector<PredictionSet> predictions = load_predictions(kData / "predictions.jsonl");

    Resources resources() const { return {lexicon, embedder, lemmatizer}; }
    MetricReport run() const { return evaluate(corpus, split, predictions, resources(), config); }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

std::size_t idx(Metric m) { return static_cast<std::size_t>(m); }

SampleScore row(const std::string& model, const std::string& turn, MetricValues v) {
    SampleScore s;
    s.model_name = model;
    s.turn_id = turn;
    s.scored = true;
    s.values = v;
    s.bleu_stats.matches = {1, 0, 0, 0};
    s.bleu_stats.totals = {1, 0, 0, 0};
    s.bleu_stats.candidate_length = 1;
    s.bleu_stats.reference_length = 1;
    return s;
}

std::vector<std::vector<double>> rows_of(const semantic::TokenEmbeddings& t) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < t.size(); ++i) out.emplace_back(t.row(i).begin(), t.row(i).end());
    return out;
}

MetricReport three_model_report() {
    MetricReport r;
    r.per_sample = {row("A", "t1", {0.3, 0.5, 0.9, 0.8, 0.7, 0.6}), row("B", "t1", {0.1, 0.5, 0.7, 0.9, 0.7, 0.8}),
                    row("C", "t1", {0.2, 0.1, 0.8, 0.7, 0.1, 0.7})};
    r.models = aggregate(r.per_sample);
    return r;
}

}  // namespace

TEST(FractionalRanks, HandCases) {
    EXPECT_EQ(fractional_ranks(std::vector<double>{0.9, 0.5, 0.7}), (std::vector<double>{1, 3, 2}));
    EXPECT_EQ(fractional_ranks(std::vector<double>{0.5, 0.5, 0.1}), (std::vector<double>{1.5, 1.5, 3}));
    EXPECT_EQ(fractional_ranks(std::vector<double>{NAN, 0.2, 0.2, 0.2}), (std::vector<double>{4, 2, 2, 2}));
}

TEST(Ranking, DominantModelRanksFirstEverywhere) {
    MetricReport r;
    r.per_sample = {row("strong", "t", {0.9, 0.9, 0.9, 0.9, 0.9, 0.9}), row("weak", "t", {0.1, 0.1, 0.1, 0.1, 0.1, 0.1})};
    r.per_sample[1].bleu_stats.matches = {0, 0, 0, 0};  // corpus BLEU 0 against 1
    r.models = aggregate(r.per_sample);
    const auto ranks = average_rank(r);
    EXPECT_EQ(ranks.at("strong"), 1.0);
    EXPECT_EQ(ranks.at("weak"), 2.0);
}

TEST(Ranking, TiesShareMeanPosition) {
    MetricReport r;
    r.per_sample = {row("a", "t", {0.5, 0.5, 0.5, 0.5, 0.5, 0.5}), row("b", "t", {0.5, 0.5, 0.5, 0.5, 0.5, 0.5})};
    r.models = aggregate(r.per_sample);
    for (const auto& m : r.models) {
        for (double x : m.ranks) EXPECT_EQ(x, 1.5);
        EXPECT_EQ(m.average_rank, 1.5);
    }
}

TEST(Ranking, ThreeModelsByHand) {
    // bleu ranks come from corpus BLEU, which is equal (1 unigram of 1) for all three.
    // rouge: A .5, B .5, C .1 -> 1.5 1.5 3 ; bert: A 1, C 2, B 3 ; cos: B 1, A 2, C 3
    // valence: A .7 B .7 C .1 -> 1.5 1.5 3 ; arousal: B 1, C 2, A 3
    const auto r = three_model_report();
    const auto ranks = average_rank(r);
    EXPECT_NEAR(ranks.at("A"), (2 + 1.5 + 1 + 2 + 1.5 + 3) / 6.0, 1e-12);
    EXPECT_NEAR(ranks.at("B"), (2 + 1.5 + 3 + 1 + 1.5 + 1) / 6.0, 1e-12);
    EXPECT_NEAR(ranks.at("C"), (2 + 3 + 2 + 3 + 3 + 2) / 6.0, 1e-12);
}

TEST(Ranking, SingleModelIsAPreconditionError) {
    MetricReport r;
    r.per_sample = {row("only", "t", {})};
    r.models = aggregate(r.per_sample);
    EXPECT_THROW(average_rank(r), PreconditionError);
}

TEST(Evaluate, IdentityPredictionScoresOneEverywhere) {
    const auto report = fixture().run();
    const auto* oracle_model = report.find("oracle");
    ASSERT_NE(oracle_model, nullptr);
    for (auto m : kMetrics) EXPECT_NEAR(oracle_model->means[idx(m)], 1.0, 1e-9) << metric_name(m);
    EXPECT_EQ(oracle_model->missing, 0u);
}

TEST(Evaluate, MissingPredictionsAreCountedNotScored) {
    const auto& f = fixture();
    const auto report = f.run();
    const auto* generic = report.find("generic");
    ASSERT_NE(generic, nullptr);
    EXPECT_EQ(generic->missing, 1u);
    EXPECT_EQ(generic->scored + generic->missing, f.split.test_ids.size());
    std::size_t missing_rows = 0;
    for (const auto& s : report.per_sample) {
        if (s.model_name == "generic" && !s.scored) {
            ++missing_rows;
            EXPECT_TRUE(std::isnan(s.values[0]));
        }
    }
    EXPECT_EQ(missing_rows, 1u);
    EXPECT_FALSE(report.diagnostics.empty());
}

TEST(Evaluate, OracleOutranksDegradedModels) {
    const auto ranks = average_rank(fixture().run());
    EXPECT_LT(ranks.at("oracle"), ranks.at("half"));
    EXPECT_LT(ranks.at("half"), ranks.at("generic"));
}

TEST(Evaluate, AggregatesMatchIndependentRecomputation) {
    const auto& f = fixture();
    const auto report = f.run();
    for (const auto& m : report.models) {
        std::array<double, kMetricCount> sums{};
        std::size_t n = 0;
        long long matches[4]{}, totals[4]{}, cand_len = 0, ref_len = 0;
        for (const auto& s : report.per_sample) {
            if (s.model_name != m.model_name || !s.scored) continue;
            const auto& reference = f.corpus.find(s.turn_id)->response_text;
            const auto& prediction =
                std::find_if(f.predictions.begin(), f.predictions.end(), [&](const PredictionSet& p) {
                    return p.model_name == m.model_name;
                })->predictions.at(s.turn_id);
            const auto ref = lexical::tokenize(reference).tokens;
            const auto hyp = lexical::tokenize(prediction).tokens;
            const auto b = oracle::bleu4(hyp, {ref});
            ASSERT_NEAR(s.values[idx(Metric::Bleu4)], b.bleu, 1e-12);
            for (int i = 0; i < 4; ++i) {
                matches[i] += b.matches[i];
                totals[i] += b.totals[i];
            }
            cand_len += static_cast<long long>(hyp.size());
            ref_len += b.ref_len;
            ASSERT_NEAR(s.values[idx(Metric::RougeL)], oracle::rouge_l_f(hyp, ref), 1e-12);
            const auto bs = oracle::bertscore(rows_of(f.embedder.token_embed(prediction)),
                                              rows_of(f.embedder.token_embed(reference)));
            ASSERT_NEAR(s.values[idx(Metric::BertScoreF1)], bs.f, 1e-12);
            ASSERT_NEAR(s.values[idx(Metric::SentenceCos)],
                        oracle::cosine(f.embedder.sentence_embed(prediction).vector,
                                       f.embedder.sentence_embed(reference).vector),
                        1e-12);
            const auto va = affect::valence_arousal_scores(reference, prediction, f.lexicon, f.config.beta);
            ASSERT_NEAR(s.values[idx(Metric::Valence)], va.valence, 1e-12);
            ASSERT_NEAR(s.values[idx(Metric::Arousal)], va.arousal, 1e-12);
            for (std::size_t k = 0; k < kMetricCount; ++k) sums[k] += s.values[k];
            ++n;
        }
        ASSERT_EQ(n, m.scored);
        for (std::size_t k = 1; k < kMetricCount; ++k) EXPECT_NEAR(m.means[k], sums[k] / n, 1e-12);
        EXPECT_NEAR(m.bleu4_sentence_mean, sums[0] / n, 1e-12);
        double log_p = 0;
        for (int i = 0; i < 4; ++i) {
            const double p = matches[i] > 0 ? double(matches[i]) / totals[i] : (i == 0 ? 0.0 : 1.0 / (totals[i] + 1));
            log_p += 0.25 * std::log(p);
        }
        const double bp = cand_len >= ref_len ? 1.0 : std::exp(1.0 - double(ref_len) / cand_len);
        EXPECT_NEAR(m.means[idx(Metric::Bleu4)], bp * std::exp(log_p), 1e-12) << m.model_name;
    }
}

TEST(Evaluate, RejectsBadInputs) {
    const auto& f = fixture();
    auto config = f.config;
    config.tokenizer_version = "other/9";
    EXPECT_THROW(evaluate(f.corpus, f.split, f.predictions, f.resources(), config), PreconditionError);

    auto outside = f.predictions;
    outside[0].predictions[f.split.train_ids.front()] = "text";
    EXPECT_THROW(evaluate(f.corpus, f.split, outside, f.resources(), f.config), ValidationError);

    SplitManifest empty = f.split;
    empty.test_ids.clear();
    EXPECT_THROW(evaluate(f.corpus, empty, f.predictions, f.resources(), f.config), PreconditionError);

    std::vector<PredictionSet> none{{"nobody", {}, {}}};
    EXPECT_THROW(evaluate(f.corpus, f.split, none, f.resources(), f.config), PreconditionError);
}

TEST(Evaluate, ThreadCountDoesNotChangeScores) {
    const auto& f = fixture();
    auto serial = f.config;
    serial.max_concurrency = 1;
    auto wide = f.config;
    wide.max_concurrency = 8;
    const auto a = evaluate(f.corpus, f.split, f.predictions, f.resources(), serial);
    const auto b = evaluate(f.corpus, f.split, f.predictions, f.resources(), wide);
    EXPECT_EQ(per_sample_tsv(a.per_sample), per_sample_tsv(b.per_sample));
}

TEST(Predictions, DuplicatePairRejected) {
    EXPECT_THROW(parse_predictions(R"({"turn_id":"t","model_name":"m","prediction":"a"})"
                                   "\n"
                                   R"({"turn_id":"t","model_name":"m","prediction":"b"})"),
                 ValidationError);
}

TEST(Config, UnknownKeyRejectedAndPathsResolved) {
    EXPECT_THROW(config_from_json(nlohmann::json{{"betta", 0.5}}), ValidationError);
    const auto c = config_from_json(nlohmann::json{{"lexicon", "lex.tsv"}}, "/data");
    EXPECT_EQ(c.lexicon_path, fs::path("/data/lex.tsv"));
    EXPECT_EQ(config_from_json(config_to_json(c)).lexicon_path, c.lexicon_path);
}

TEST(Reports, EmitAndIngestRoundTrip) {
    const auto report = fixture().run();
    const auto dir = fs::temp_directory_path() / "nuteval_report_rt";
    fs::remove_all(dir);
    for (auto format : {ReportFormat::TableText, ReportFormat::Delimited, ReportFormat::Document}) {
        EXPECT_FALSE(emit_report(report, format, dir).empty());
    }
    const auto tsv = ingest_report(dir / "per_sample.tsv");
    const auto json = ingest_report(dir / "report.json");
    ASSERT_EQ(tsv.models.size(), report.models.size());
    for (std::size_t i = 0; i < report.models.size(); ++i) {
        EXPECT_EQ(tsv.models[i].model_name, report.models[i].model_name);
        EXPECT_EQ(tsv.models[i].missing, report.models[i].missing);
        EXPECT_EQ(json.models[i].ranks, report.models[i].ranks);
        for (std::size_t k = 0; k < kMetricCount; ++k) {
            EXPECT_NEAR(tsv.models[i].means[k], report.models[i].means[k], 1e-9);
            EXPECT_EQ(json.models[i].means[k], report.models[i].means[k]);
        }
    }
    const auto text = io::read_file(dir / "report.txt");
    EXPECT_NE(text.find("Emotion Consistency"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Reports, EmptyModelListIsRejected) {
    EXPECT_THROW(emit_report(MetricReport{}, ReportFormat::Document, fs::temp_directory_path()), PreconditionError);
    EXPECT_FALSE(parse_report_format("yaml").has_value());
    EXPECT_EQ(parse_report_format("tsv"), ReportFormat::Delimited);
}

TEST(Judges, TopOneShares) {
    std::vector<JudgeRecord> records;
    for (int i = 0; i < 10; ++i) {
        records.push_back({"s" + std::to_string(i), "j", i < 3 ? std::vector<std::string>{"ours", "b"}
                                                             : std::vector<std::string>{"b", "ours"}});
    }
    const auto top = judge_top1(records);
    EXPECT_NEAR(top.at("ours"), 0.3, 1e-15);
    EXPECT_NEAR(top.at("b"), 0.7, 1e-15);
    EXPECT_EQ(judge_top1(std::vector<JudgeRecord>{records[0]}).at("ours"), 1.0);
}

TEST(Judges, FixtureSharesSumToOne) {
    const auto records = load_judge_records(kData / "judge.jsonl");
    const auto summary = judge_summary(records);
    EXPECT_EQ(summary.judges.size(), 2u);
    for (const auto& [judge, rates] : summary.per_judge) {
        double total = 0;
        for (const auto& [_, r] : rates) total += r;
        EXPECT_NEAR(total, 1.0, 1e-12) << judge;
    }
    double avg = 0;
    for (const auto& [_, r] : summary.average) avg += r;
    EXPECT_NEAR(avg, 1.0, 1e-12);
}

TEST(Judges, NonPermutationRejected) {
    const std::vector<JudgeRecord> records{{"1", "j", {"a", "b", "c"}}, {"2", "j", {"a", "b", "b"}}};
    EXPECT_THROW(judge_top1(records), ValidationError);
    const std::vector<JudgeRecord> other{{"1", "j", {"a", "b"}}, {"2", "j", {"a", "z"}}};
    EXPECT_THROW(judge_top1(other), ValidationError);
    EXPECT_THROW(judge_top1(std::vector<JudgeRecord>{}), PreconditionError);
}

TEST(UserStudy, SelectionRates) {
    std::vector<Ballot> ballots;
    for (const auto* m : {"a", "b", "c", "d"}) ballots.push_back({"G1", m});
    for (int i = 0; i < 3; ++i) ballots.push_back({"G2", "a"});
    ballots.push_back({"G2", "b"});
    const auto r = selection_rates(ballots);
    EXPECT_EQ(r.per_group.at("G1").at("c"), 0.25);
    EXPECT_EQ(r.per_group.at("G2").at("a"), 0.75);
    EXPECT_EQ(r.average.at("a"), 0.5);
    EXPECT_EQ(r.average.at("b"), 0.25);
    EXPECT_EQ(r.average.at("d"), 0.125);
    EXPECT_THROW(selection_rates(std::vector<Ballot>{}), PreconditionError);
}

TEST(UserStudy, FixtureRates) {
    const auto r = selection_rates(load_ballots(kData / "ballots.jsonl"));
    EXPECT_EQ(r.groups, (std::vector<std::string>{"E1", "E2", "E3"}));
    EXPECT_NEAR(r.per_group.at("E1").at("ours"), 0.45, 1e-12);
    EXPECT_NEAR(r.average.at("ours"), (0.45 + 0.35 + 0.40) / 3, 1e-12);
    EXPECT_NE(selection_table_text(r).find("ours"), std::string::npos);
}
