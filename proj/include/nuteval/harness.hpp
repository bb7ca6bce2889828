#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nuteval/affect.hpp"
#include "nuteval/corpus.hpp"
#include "nuteval/error.hpp"
#include "nuteval/lexical.hpp"
#include "nuteval/semantic.hpp"

namespace nuteval::harness {

enum class Metric : std::size_t { Bleu4, RougeL, BertScoreF1, SentenceCos, Valence, Arousal };
inline constexpr std::size_t kMetricCount = 6;
inline constexpr std::array<Metric, kMetricCount> kMetrics{Metric::Bleu4,       Metric::RougeL,  Metric::BertScoreF1,
                                                           Metric::SentenceCos, Metric::Valence, Metric::Arousal};

// Column name: bleu4, rouge_l, bertscore_f1, sentence_cos, valence, arousal.
std::string_view metric_name(Metric m);

using MetricValues = std::array<double, kMetricCount>;

// ---------------------------------------------------------------------------
// Inputs

struct PredictionSet {
    std::string model_name;
    std::map<std::string, std::string> predictions;  // turn_id -> text
    nlohmann::json provenance = nlohmann::json::object();
};

// Line-delimited {turn_id, model_name, prediction[, provenance]}. Models keep
// first-appearance order. A repeated (model, turn) pair is a ValidationError.
std::vector<PredictionSet> parse_predictions(std::string_view text);
std::vector<PredictionSet> load_predictions(const std::filesystem::path& path);

// Everything that determines a run besides the corpus, split and predictions.
struct EvalConfig {
    std::string tokenizer_version{lexical::kTokenizerVersion};
    double beta = affect::kDefaultBeta;
    double mu = 0.99;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    std::filesystem::path lexicon_path;
    std::filesystem::path embeddings_path;
    std::size_t max_concurrency = 1;
};

// Relative fixture paths resolve against base_dir. Unknown keys are a
// ValidationError.
EvalConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const EvalConfig& config);
EvalConfig load_config(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Scores

struct SampleScore {
    std::string model_name;
    std::string turn_id;
    bool scored = false;  // false: no prediction for this test turn
    MetricValues values{};
    lexical::BleuStats bleu_stats;  // sentence stats, summed for corpus BLEU
};

struct ModelAggregate {
    std::string model_name;
    std::size_t scored = 0;
    std::size_t missing = 0;
    // Per-sample means, except bleu4 which is corpus BLEU over the model's
    // scored samples. NaN when nothing was scored.
    MetricValues means{};
    double bleu4_sentence_mean = 0.0;
    MetricValues ranks{};  // 1 = best; ties share the mean position
    double average_rank = 0.0;
};

struct MetricReport {
    std::vector<SampleScore> per_sample;  // model order, then split order
    std::vector<ModelAggregate> models;
    nlohmann::json run_info = nlohmann::json::object();
    Diagnostics diagnostics;

    const ModelAggregate* find(std::string_view model) const;
};

struct Resources {
    const affect::VadLexicon& lexicon;
    const semantic::EmbeddingProvider& embedder;
    const affect::Lemmatizer& lemmatizer;
};

// Scores every (model, test turn). A test turn without a prediction is a
// missing row, excluded from the means. Throws PreconditionError on an empty
// test split, a tokenizer version other than the built-in one, or predictions
// that cover no test turn; ValidationError on a prediction outside the test
// split; UnknownTextError when the embedder cannot serve a text.
MetricReport evaluate(const Corpus& corpus, const SplitManifest& split, std::span<const PredictionSet> predictions,
                      const Resources& resources, const EvalConfig& config);

// Aggregates and ranks per-sample rows; model order follows first appearance.
std::vector<ModelAggregate> aggregate(std::span<const SampleScore> per_sample);

// Fractional ranking, higher is better, NaN last.
std::vector<double> fractional_ranks(std::span<const double> values);

// Throws PreconditionError with fewer than two models.
std::map<std::string, double> average_rank(const MetricReport& report);

// ---------------------------------------------------------------------------
// Report files

enum class ReportFormat { TableText, Delimited, Document };

std::optional<ReportFormat> parse_report_format(std::string_view text);

// table-text: report.txt; delimited: per_sample.tsv and aggregate.tsv;
// document: report.json. Returns the written paths. Throws PreconditionError
// on an empty model list, IoError when out_dir is unwritable.
std::vector<std::filesystem::path> emit_report(const MetricReport& report, ReportFormat format,
                                               const std::filesystem::path& out_dir);

std::string table_text(const MetricReport& report);
std::string per_sample_tsv(std::span<const SampleScore> rows);
std::string aggregate_tsv(std::span<const ModelAggregate> models);
nlohmann::json report_to_json(const MetricReport& report);

// Reads per_sample.tsv or report.json back; aggregates are recomputed from the
// per-sample rows.
std::vector<SampleScore> parse_per_sample_tsv(std::string_view text);
MetricReport report_from_json(const nlohmann::json& doc);
MetricReport ingest_report(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// LLM judges and user study

struct JudgeRecord {
    std::string sample_id;
    std::string judge_name;
    std::vector<std::string> ranking;  // best first
};

// Line-delimited {sample_id, judge_name, ranking}.
std::vector<JudgeRecord> parse_judge_records(std::string_view text);
std::vector<JudgeRecord> load_judge_records(const std::filesystem::path& path);

// Share of records ranking each model first, pooled over all records. Every
// ranking must be a permutation of the first record's model set
// (ValidationError otherwise); PreconditionError when empty.
std::map<std::string, double> judge_top1(std::span<const JudgeRecord> records);

struct JudgeSummary {
    std::vector<std::string> judges;  // first-appearance order
    std::vector<std::string> models;  // ranking order of the first record
    std::map<std::string, std::map<std::string, double>> per_judge;  // judge -> model -> rate
    std::map<std::string, double> average;                          // mean over judges
};

JudgeSummary judge_summary(std::span<const JudgeRecord> records);
std::string judge_table_text(const JudgeSummary& summary);

struct Ballot {
    std::string group;
    std::string chosen_model;
};

// Line-delimited {group, chosen_model}.
std::vector<Ballot> parse_ballots(std::string_view text);
std::vector<Ballot> load_ballots(const std::filesystem::path& path);

struct SelectionRates {
    std::vector<std::string> groups;  // first-appearance order
    std::vector<std::string> models;  // first-appearance order
    std::map<std::string, std::map<std::string, double>> per_group;
    std::map<std::string, double> average;  // mean of the per-group rates
};

// Throws PreconditionError when empty.
SelectionRates selection_rates(std::span<const Ballot> ballots);
std::string selection_table_text(const SelectionRates& rates);

}  // namespace nuteval::harness
