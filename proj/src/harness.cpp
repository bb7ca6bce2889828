#include "nuteval/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "nuteval/io.hpp"

namespace nuteval::harness {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr std::array<std::string_view, kMetricCount> kMetricNames{"bleu4",        "rouge_l", "bertscore_f1",
                                                                  "sentence_cos", "valence", "arousal"};

std::string line_error(std::string_view what, std::size_t line, std::string_view detail) {
    return std::string(what) + " line " + std::to_string(line) + ": " + std::string(detail);
}

std::string require_string(const json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) throw ValidationError(std::string("missing string field '") + key + "'");
    return it->get<std::string>();
}

}  // namespace

std::string_view metric_name(Metric m) { return kMetricNames[static_cast<std::size_t>(m)]; }

const ModelAggregate* MetricReport::find(std::string_view model) const {
    for (const auto& m : models) {
        if (m.model_name == model) return &m;
    }
    return nullptr;
}

// ---------------------------------------------------------------------------
// Predictions and config

std::vector<PredictionSet> parse_predictions(std::string_view text) {
    std::vector<PredictionSet> sets;
    std::unordered_map<std::string, std::size_t> index;
    std::map<std::pair<std::string, std::string>, std::size_t> seen;
    io::for_each_line(text, [&](std::size_t line, std::string_view raw) {
        json obj;
        try {
            obj = json::parse(raw);
        } catch (const json::parse_error& e) {
            throw ValidationError(line_error("predictions", line, e.what()));
        }
        if (!obj.is_object()) throw ValidationError(line_error("predictions", line, "not a JSON object"));
        std::string turn_id, model, prediction;
        try {
            turn_id = require_string(obj, "turn_id");
            model = require_string(obj, "model_name");
            prediction = require_string(obj, "prediction");
        } catch (const ValidationError& e) {
            throw ValidationError(line_error("predictions", line, e.what()));
        }
        if (const auto [it, fresh] = seen.emplace(std::pair{model, turn_id}, line); !fresh) {
            throw ValidationError(line_error("predictions", line,
                                             "duplicate prediction for model '" + model + "', turn '" + turn_id +
                                                 "' (first on line " + std::to_string(it->second) + ")"));
        }
        auto [slot, fresh] = index.emplace(model, sets.size());
        if (fresh) sets.push_back({model, {}, json::object()});
        auto& set = sets[slot->second];
        set.predictions.emplace(turn_id, std::move(prediction));
        if (const auto p = obj.find("provenance"); p != obj.end() && p->is_object()) set.provenance.update(*p);
    });
    return sets;
}

std::vector<PredictionSet> load_predictions(const std::filesystem::path& path) {
    return parse_predictions(io::read_file(path));
}

EvalConfig config_from_json(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw ValidationError("evaluation config must be a JSON object");
    static const std::set<std::string> known{"tokenizer_version", "beta", "mu", "epsilon", "seed",
                                             "lexicon",           "embeddings", "max_concurrency"};
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (!known.count(it.key())) throw ValidationError("unknown config key '" + it.key() + "'");
    }
    auto resolve = [&](const std::string& p) -> std::filesystem::path {
        if (p.empty()) return {};
        std::filesystem::path path(p);
        return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    try {
        EvalConfig c;
        c.tokenizer_version = doc.value("tokenizer_version", c.tokenizer_version);
        c.beta = doc.value("beta", c.beta);
        c.mu = doc.value("mu", c.mu);
        c.epsilon = doc.value("epsilon", c.epsilon);
        c.seed = doc.value("seed", c.seed);
        c.lexicon_path = resolve(doc.value("lexicon", std::string()));
        c.embeddings_path = resolve(doc.value("embeddings", std::string()));
        c.max_concurrency = doc.value("max_concurrency", c.max_concurrency);
        if (!(c.beta >= 0.0)) throw ValidationError("beta must be non-negative");
        if (!(c.mu > 0.0 && c.mu < 1.0)) throw ValidationError("mu must lie in (0, 1)");
        if (!(c.epsilon > 0.0)) throw ValidationError("epsilon must be positive");
        return c;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed evaluation config: ") + e.what());
    }
}

json config_to_json(const EvalConfig& c) {
    return {{"tokenizer_version", c.tokenizer_version},
            {"beta", c.beta},
            {"mu", c.mu},
            {"epsilon", c.epsilon},
            {"seed", c.seed},
            {"lexicon", c.lexicon_path.string()},
            {"embeddings", c.embeddings_path.string()},
            {"max_concurrency", c.max_concurrency}};
}

EvalConfig load_config(const std::filesystem::path& path) {
    return config_from_json(io::read_json(path), path.parent_path());
}

// ---------------------------------------------------------------------------
// Scoring

namespace {

struct Job {
    std::size_t row;
    const std::string* reference;
    const std::string* prediction;
};

class Scorer {
public:
    Scorer(const Resources& r, const EvalConfig& c) : res_(r), config_(c) {}

    void score(const std::string& reference, const std::string& prediction, SampleScore& out) {
        const auto ref_tokens = lexical::tokenize(reference);
        const auto hyp_tokens = lexical::tokenize(prediction);
        out.bleu_stats = lexical::bleu_stats(hyp_tokens, std::span<const lexical::TokenSequence>(&ref_tokens, 1));
        out.values[idx(Metric::Bleu4)] = lexical::bleu_from_stats(out.bleu_stats).bleu;
        out.values[idx(Metric::RougeL)] = lexical::rouge_l(hyp_tokens, ref_tokens).f;

        if (hyp_tokens.empty() || ref_tokens.empty()) {
            out.values[idx(Metric::BertScoreF1)] = 0.0;
            out.values[idx(Metric::SentenceCos)] = 0.0;
        } else {
            semantic::TokenEmbeddings cand_tok, ref_tok;
            semantic::SentenceEmbedding cand_sent, ref_sent;
            {
                std::unique_lock lock(mutex_, std::defer_lock);
                if (!res_.embedder.concurrency_safe()) lock.lock();
                cand_tok = res_.embedder.token_embed(prediction);
                ref_tok = res_.embedder.token_embed(reference);
                cand_sent = res_.embedder.sentence_embed(prediction);
                ref_sent = res_.embedder.sentence_embed(reference);
            }
            out.values[idx(Metric::BertScoreF1)] = semantic::bertscore(cand_tok, ref_tok).f1;
            out.values[idx(Metric::SentenceCos)] = semantic::sentence_cosine(cand_sent, ref_sent);
        }

        const auto ref_aff = affect::affect_profile(reference, res_.lexicon, res_.lemmatizer);
        const auto hyp_aff = affect::affect_profile(prediction, res_.lexicon, res_.lemmatizer);
        out.values[idx(Metric::Valence)] =
            affect::dimension_consistency(ref_aff, hyp_aff, affect::Valence, config_.beta);
        out.values[idx(Metric::Arousal)] =
            affect::dimension_consistency(ref_aff, hyp_aff, affect::Arousal, config_.beta);
        out.scored = true;
    }

    static constexpr std::size_t idx(Metric m) { return static_cast<std::size_t>(m); }

private:
    const Resources& res_;
    const EvalConfig& config_;
    std::mutex mutex_;
};

}  // namespace

MetricReport evaluate(const Corpus& corpus, const SplitManifest& split, std::span<const PredictionSet> predictions,
                      const Resources& resources, const EvalConfig& config) {
    if (config.tokenizer_version != lexical::kTokenizerVersion) {
        throw PreconditionError("config asks for tokenizer '" + config.tokenizer_version + "', built-in is '" +
                                std::string(lexical::kTokenizerVersion) + "'");
    }
    if (split.test_ids.empty()) throw PreconditionError("test split is empty");
    if (predictions.empty()) throw PreconditionError("no prediction sets");

    MetricReport report;
    std::vector<const ConversationTurn*> test_turns;
    std::unordered_set<std::string_view> test_set;
    for (const auto& id : split.test_ids) {
        const auto* turn = corpus.find(id);
        if (!turn) throw ValidationError("test turn '" + id + "' is not in the corpus");
        test_set.insert(turn->turn_id);
        if (!turn->scorable()) {
            report.diagnostics.push_back({Severity::Warning, "test turn '" + id + "' has no reference text; not evaluated",
                                          std::nullopt});
            continue;
        }
        test_turns.push_back(turn);
    }
    if (test_turns.empty()) throw PreconditionError("no test turn has a reference text");

    std::set<std::string> models;
    std::size_t covered = 0;
    for (const auto& set : predictions) {
        if (!models.insert(set.model_name).second) {
            throw ValidationError("model '" + set.model_name + "' appears in more than one prediction set");
        }
        for (const auto& [turn_id, _] : set.predictions) {
            if (!test_set.count(turn_id)) {
                throw ValidationError("model '" + set.model_name + "' has a prediction for turn '" + turn_id +
                                      "', which is not in the test split");
            }
        }
        for (const auto* t : test_turns) covered += set.predictions.count(t->turn_id);
    }
    if (covered == 0) throw PreconditionError("predictions cover no test turn");

    std::vector<Job> jobs;
    for (const auto& set : predictions) {
        std::size_t missing = 0;
        for (const auto* t : test_turns) {
            SampleScore row;
            row.model_name = set.model_name;
            row.turn_id = t->turn_id;
            row.values.fill(kNaN);
            if (const auto it = set.predictions.find(t->turn_id); it != set.predictions.end()) {
                jobs.push_back({report.per_sample.size(), &t->response_text, &it->second});
            } else {
                ++missing;
            }
            report.per_sample.push_back(std::move(row));
        }
        if (missing > 0) {
            report.diagnostics.push_back({Severity::Warning,
                                          "model '" + set.model_name + "': " + std::to_string(missing) + " of " +
                                              std::to_string(test_turns.size()) +
                                              " test turns have no prediction and are excluded from the means",
                                          std::nullopt});
        }
    }

    Scorer scorer(resources, config);
    const std::size_t workers = std::min(std::max<std::size_t>(config.max_concurrency, 1), jobs.size());
    if (workers <= 1) {
        for (const auto& j : jobs) scorer.score(*j.reference, *j.prediction, report.per_sample[j.row]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(jobs.size());
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < jobs.size(); i = next++) {
                    try {
                        scorer.score(*jobs[i].reference, *jobs[i].prediction, report.per_sample[jobs[i].row]);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    report.models = aggregate(report.per_sample);
    report.run_info = {{"corpus", corpus.name()},
                       {"corpus_hash", corpus.content_hash()},
                       {"protocol", std::string(to_string(split.protocol))},
                       {"split_seed", split.seed},
                       {"test_turns", test_turns.size()},
                       {"lexicon_id", resources.lexicon.id()},
                       {"embedding_version", resources.embedder.version()},
                       {"config", config_to_json(config)}};
    return report;
}

// ---------------------------------------------------------------------------
// Aggregation and ranking

std::vector<double> fractional_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    auto better = [&](std::size_t a, std::size_t b) {
        const bool na = std::isnan(values[a]), nb = std::isnan(values[b]);
        if (na != nb) return nb;
        return !na && values[a] > values[b];
    };
    auto tied = [&](std::size_t a, std::size_t b) {
        const bool na = std::isnan(values[a]), nb = std::isnan(values[b]);
        return (na && nb) || (!na && !nb && values[a] == values[b]);
    };
    std::stable_sort(order.begin(), order.end(), better);
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && tied(order[i], order[j])) ++j;
        // positions i+1 .. j share their mean
        const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
        i = j;
    }
    return ranks;
}

std::vector<ModelAggregate> aggregate(std::span<const SampleScore> per_sample) {
    std::vector<ModelAggregate> models;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<MetricValues> sums;
    std::vector<lexical::BleuStats> bleu;
    for (const auto& row : per_sample) {
        auto [it, fresh] = index.emplace(row.model_name, models.size());
        if (fresh) {
            models.push_back({});
            models.back().model_name = row.model_name;
            sums.push_back({});
            bleu.push_back({});
        }
        auto& m = models[it->second];
        if (!row.scored) {
            ++m.missing;
            continue;
        }
        ++m.scored;
        for (std::size_t k = 0; k < kMetricCount; ++k) sums[it->second][k] += row.values[k];
        bleu[it->second] += row.bleu_stats;
    }

    for (std::size_t i = 0; i < models.size(); ++i) {
        auto& m = models[i];
        if (m.scored == 0) {
            m.means.fill(kNaN);
            m.bleu4_sentence_mean = kNaN;
            continue;
        }
        const double n = static_cast<double>(m.scored);
        for (std::size_t k = 0; k < kMetricCount; ++k) m.means[k] = sums[i][k] / n;
        m.bleu4_sentence_mean = m.means[static_cast<std::size_t>(Metric::Bleu4)];
        m.means[static_cast<std::size_t>(Metric::Bleu4)] = lexical::bleu_from_stats(bleu[i]).bleu;
    }

    std::vector<double> column(models.size());
    for (std::size_t k = 0; k < kMetricCount; ++k) {
        for (std::size_t i = 0; i < models.size(); ++i) column[i] = models[i].means[k];
        const auto ranks = fractional_ranks(column);
        for (std::size_t i = 0; i < models.size(); ++i) models[i].ranks[k] = ranks[i];
    }
    for (auto& m : models) {
        double s = 0.0;
        for (double r : m.ranks) s += r;
        m.average_rank = s / static_cast<double>(kMetricCount);
    }
    return models;
}

std::map<std::string, double> average_rank(const MetricReport& report) {
    if (report.models.size() < 2) throw PreconditionError("average rank needs at least two models");
    std::map<std::string, double> out;
    for (const auto& m : report.models) out[m.model_name] = m.average_rank;
    return out;
}

// ---------------------------------------------------------------------------
// Report files

std::optional<ReportFormat> parse_report_format(std::string_view text) {
    if (text == "table-text" || text == "table") return ReportFormat::TableText;
    if (text == "delimited" || text == "tsv") return ReportFormat::Delimited;
    if (text == "document" || text == "json") return ReportFormat::Document;
    return std::nullopt;
}

namespace {

std::string num(double x) { return std::isnan(x) ? std::string() : io::format_double(x); }

std::string fixed(double x, int digits) {
    if (std::isnan(x)) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::string pad(std::string s, std::size_t width, bool left = false) {
    if (s.size() >= width) return s;
    return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    for (;;) {
        const auto end = line.find('\t', pos);
        out.push_back(line.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
        if (end == std::string_view::npos) return out;
        pos = end + 1;
    }
}

template <class T>
T parse_int(std::string_view s, std::size_t line) {
    T v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw ValidationError(line_error("per-sample file", line, "bad integer '" + std::string(s) + "'"));
    }
    return v;
}

double parse_real(std::string_view s, std::size_t line) {
    double v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw ValidationError(line_error("per-sample file", line, "bad number '" + std::string(s) + "'"));
    }
    return v;
}

const std::vector<std::string>& per_sample_columns() {
    static const std::vector<std::string> cols = [] {
        std::vector<std::string> c{"model", "turn_id", "status"};
        for (auto m : kMetricNames) c.emplace_back(m);
        for (int n = 1; n <= lexical::kMaxOrder; ++n) c.push_back("bleu_match_" + std::to_string(n));
        for (int n = 1; n <= lexical::kMaxOrder; ++n) c.push_back("bleu_total_" + std::to_string(n));
        c.emplace_back("candidate_length");
        c.emplace_back("reference_length");
        return c;
    }();
    return cols;
}

json sample_to_json(const SampleScore& s) {
    json obj{{"model", s.model_name}, {"turn_id", s.turn_id}, {"scored", s.scored}};
    if (s.scored) {
        for (std::size_t k = 0; k < kMetricCount; ++k) obj[std::string(kMetricNames[k])] = s.values[k];
        obj["bleu_stats"] = {{"matches", s.bleu_stats.matches},
                             {"totals", s.bleu_stats.totals},
                             {"candidate_length", s.bleu_stats.candidate_length},
                             {"reference_length", s.bleu_stats.reference_length}};
    }
    return obj;
}

SampleScore sample_from_json(const json& obj) {
    SampleScore s;
    s.model_name = obj.at("model").get<std::string>();
    s.turn_id = obj.at("turn_id").get<std::string>();
    s.scored = obj.at("scored").get<bool>();
    s.values.fill(kNaN);
    if (s.scored) {
        for (std::size_t k = 0; k < kMetricCount; ++k) s.values[k] = obj.at(std::string(kMetricNames[k])).get<double>();
        const auto& b = obj.at("bleu_stats");
        s.bleu_stats.matches = b.at("matches").get<decltype(s.bleu_stats.matches)>();
        s.bleu_stats.totals = b.at("totals").get<decltype(s.bleu_stats.totals)>();
        s.bleu_stats.candidate_length = b.at("candidate_length").get<long long>();
        s.bleu_stats.reference_length = b.at("reference_length").get<long long>();
    }
    return s;
}

json nan_safe(double x) { return std::isnan(x) ? json(nullptr) : json(x); }

}  // namespace

std::string per_sample_tsv(std::span<const SampleScore> rows) {
    std::string out;
    const auto& cols = per_sample_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "\t" : "") + cols[i];
    out += '\n';
    for (const auto& r : rows) {
        out += r.model_name + '\t' + r.turn_id + '\t' + (r.scored ? "scored" : "missing");
        for (std::size_t k = 0; k < kMetricCount; ++k) out += '\t' + (r.scored ? num(r.values[k]) : std::string());
        for (int n = 0; n < lexical::kMaxOrder; ++n) {
            out += '\t' + (r.scored ? std::to_string(r.bleu_stats.matches[n]) : std::string());
        }
        for (int n = 0; n < lexical::kMaxOrder; ++n) {
            out += '\t' + (r.scored ? std::to_string(r.bleu_stats.totals[n]) : std::string());
        }
        out += '\t' + (r.scored ? std::to_string(r.bleu_stats.candidate_length) : std::string());
        out += '\t' + (r.scored ? std::to_string(r.bleu_stats.reference_length) : std::string());
        out += '\n';
    }
    return out;
}

std::vector<SampleScore> parse_per_sample_tsv(std::string_view text) {
    std::vector<SampleScore> rows;
    const auto& cols = per_sample_columns();
    bool header = true;
    io::for_each_line(text, [&](std::size_t line, std::string_view raw) {
        const auto f = split_tabs(raw);
        if (header) {
            header = false;
            if (f.size() != cols.size() || !std::equal(f.begin(), f.end(), cols.begin())) {
                throw ValidationError(line_error("per-sample file", line, "unexpected header"));
            }
            return;
        }
        if (f.size() != cols.size()) {
            throw ValidationError(line_error("per-sample file", line,
                                             std::to_string(f.size()) + " columns, expected " +
                                                 std::to_string(cols.size())));
        }
        SampleScore s;
        s.model_name = std::string(f[0]);
        s.turn_id = std::string(f[1]);
        if (f[2] == "missing") {
            s.values.fill(kNaN);
        } else if (f[2] == "scored") {
            s.scored = true;
            std::size_t c = 3;
            for (std::size_t k = 0; k < kMetricCount; ++k) s.values[k] = parse_real(f[c++], line);
            for (int n = 0; n < lexical::kMaxOrder; ++n) s.bleu_stats.matches[n] = parse_int<long long>(f[c++], line);
            for (int n = 0; n < lexical::kMaxOrder; ++n) s.bleu_stats.totals[n] = parse_int<long long>(f[c++], line);
            s.bleu_stats.candidate_length = parse_int<long long>(f[c++], line);
            s.bleu_stats.reference_length = parse_int<long long>(f[c++], line);
        } else {
            throw ValidationError(line_error("per-sample file", line, "status must be scored or missing"));
        }
        rows.push_back(std::move(s));
    });
    return rows;
}

std::string aggregate_tsv(std::span<const ModelAggregate> models) {
    std::string out = "model\tscored\tmissing";
    for (auto m : kMetricNames) out += '\t' + std::string(m);
    out += "\tbleu4_sentence_mean";
    for (auto m : kMetricNames) out += "\trank_" + std::string(m);
    out += "\taverage_rank\n";
    for (const auto& m : models) {
        out += m.model_name + '\t' + std::to_string(m.scored) + '\t' + std::to_string(m.missing);
        for (double x : m.means) out += '\t' + num(x);
        out += '\t' + num(m.bleu4_sentence_mean);
        for (double r : m.ranks) out += '\t' + num(r);
        out += '\t' + num(m.average_rank) + '\n';
    }
    return out;
}

std::string table_text(const MetricReport& report) {
    constexpr std::size_t w = 10;
    std::size_t name_w = 5;
    for (const auto& m : report.models) name_w = std::max(name_w, m.model_name.size());
    name_w += 2;

    std::string out;
    out += pad("", name_w) + "| " + pad("Lexical Overlap (%)", 2 * w, true) + " | " +
           pad("Semantic Similarity", 2 * w, true) + " | " + pad("Emotion Consistency", 2 * w, true) + " |\n";
    out += pad("Model", name_w, true) + "| " + pad("BLEU-4", w) + pad("ROUGE-L", w) + " | " + pad("BERTScore", w) +
           pad("Cosine", w) + " | " + pad("Valence", w) + pad("Arousal", w) + " | " + pad("Avg rank", w) +
           pad("Scored", w) + "\n";
    out += std::string(name_w + 4 * w + 3 * 3 + 2 + 2 * w, '-') + "\n";
    auto at = [](const ModelAggregate& m, Metric k) { return m.means[static_cast<std::size_t>(k)]; };
    for (const auto& m : report.models) {
        out += pad(m.model_name, name_w, true) + "| " + pad(fixed(100 * at(m, Metric::Bleu4), 2), w) +
               pad(fixed(100 * at(m, Metric::RougeL), 2), w) + " | " + pad(fixed(at(m, Metric::BertScoreF1), 4), w) +
               pad(fixed(at(m, Metric::SentenceCos), 4), w) + " | " + pad(fixed(at(m, Metric::Valence), 4), w) +
               pad(fixed(at(m, Metric::Arousal), 4), w) + " | " + pad(fixed(m.average_rank, 2), w) +
               pad(std::to_string(m.scored) + "/" + std::to_string(m.scored + m.missing), w) + "\n";
    }
    out += "\nBLEU-4 is corpus-level; per-sample mean BLEU-4 (%):";
    for (const auto& m : report.models) out += " " + m.model_name + "=" + fixed(100 * m.bleu4_sentence_mean, 2);
    out += "\n";
    return out;
}

json report_to_json(const MetricReport& report) {
    json doc;
    doc["run_info"] = report.run_info;
    doc["models"] = json::array();
    for (const auto& m : report.models) {
        json obj{{"model", m.model_name}, {"scored", m.scored}, {"missing", m.missing}};
        json means, ranks;
        for (std::size_t k = 0; k < kMetricCount; ++k) {
            means[std::string(kMetricNames[k])] = nan_safe(m.means[k]);
            ranks[std::string(kMetricNames[k])] = m.ranks[k];
        }
        obj["means"] = means;
        obj["bleu4_sentence_mean"] = nan_safe(m.bleu4_sentence_mean);
        obj["ranks"] = ranks;
        obj["average_rank"] = m.average_rank;
        doc["models"].push_back(std::move(obj));
    }
    doc["per_sample"] = json::array();
    for (const auto& s : report.per_sample) doc["per_sample"].push_back(sample_to_json(s));
    doc["diagnostics"] = json::array();
    for (const auto& d : report.diagnostics) doc["diagnostics"].push_back(to_string(d));
    return doc;
}

MetricReport report_from_json(const json& doc) {
    try {
        MetricReport r;
        r.run_info = doc.value("run_info", json::object());
        for (const auto& s : doc.at("per_sample")) r.per_sample.push_back(sample_from_json(s));
        r.models = aggregate(r.per_sample);
        return r;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed report document: ") + e.what());
    }
}

MetricReport ingest_report(const std::filesystem::path& path) {
    if (path.extension() == ".json") return report_from_json(io::read_json(path));
    MetricReport r;
    r.per_sample = parse_per_sample_tsv(io::read_file(path));
    r.models = aggregate(r.per_sample);
    return r;
}

std::vector<std::filesystem::path> emit_report(const MetricReport& report, ReportFormat format,
                                               const std::filesystem::path& out_dir) {
    if (report.models.empty()) throw PreconditionError("report has no models");
    std::vector<std::filesystem::path> written;
    switch (format) {
        case ReportFormat::TableText:
            written.push_back(out_dir / "report.txt");
            io::write_file(written.back(), table_text(report));
            break;
        case ReportFormat::Delimited:
            written.push_back(out_dir / "per_sample.tsv");
            io::write_file(written.back(), per_sample_tsv(report.per_sample));
            written.push_back(out_dir / "aggregate.tsv");
            io::write_file(written.back(), aggregate_tsv(report.models));
            break;
        case ReportFormat::Document:
            written.push_back(out_dir / "report.json");
            io::write_file(written.back(), report_to_json(report).dump(2) + "\n");
            break;
    }
    return written;
}

// ---------------------------------------------------------------------------
// Judges and user study

namespace {

template <class T, class Fn>
std::vector<T> parse_jsonl(std::string_view text, std::string_view what, Fn&& fn) {
    std::vector<T> out;
    io::for_each_line(text, [&](std::size_t line, std::string_view raw) {
        try {
            const auto obj = json::parse(raw);
            if (!obj.is_object()) throw ValidationError("not a JSON object");
            out.push_back(fn(obj));
        } catch (const json::exception& e) {
            throw ValidationError(line_error(what, line, e.what()));
        } catch (const ValidationError& e) {
            throw ValidationError(line_error(what, line, e.what()));
        }
    });
    return out;
}

std::string percent(double x) { return fixed(100.0 * x, 2) + "%"; }

std::string rate_table(const std::vector<std::string>& columns, const std::vector<std::string>& models,
                       const std::map<std::string, std::map<std::string, double>>& per_column,
                       const std::map<std::string, double>& average) {
    std::size_t name_w = 5;
    for (const auto& m : models) name_w = std::max(name_w, m.size());
    name_w += 2;
    std::size_t w = 10;
    for (const auto& c : columns) w = std::max(w, c.size() + 2);
    std::string out = pad("Model", name_w, true);
    for (const auto& c : columns) out += pad(c, w);
    out += pad("Average", w) + "\n";
    for (const auto& m : models) {
        out += pad(m, name_w, true);
        for (const auto& c : columns) out += pad(percent(per_column.at(c).at(m)), w);
        out += pad(percent(average.at(m)), w) + "\n";
    }
    return out;
}

}  // namespace

std::vector<JudgeRecord> parse_judge_records(std::string_view text) {
    return parse_jsonl<JudgeRecord>(text, "judge records", [](const json& obj) {
        JudgeRecord r;
        r.sample_id = obj.at("sample_id").get<std::string>();
        r.judge_name = obj.at("judge_name").get<std::string>();
        r.ranking = obj.at("ranking").get<std::vector<std::string>>();
        return r;
    });
}

std::vector<JudgeRecord> load_judge_records(const std::filesystem::path& path) {
    return parse_judge_records(io::read_file(path));
}

namespace {

void check_rankings(std::span<const JudgeRecord> records) {
    if (records.empty()) throw PreconditionError("no judge records");
    const std::set<std::string> models(records.front().ranking.begin(), records.front().ranking.end());
    if (models.empty()) throw ValidationError("judge record with an empty ranking");
    for (const auto& r : records) {
        const std::set<std::string> these(r.ranking.begin(), r.ranking.end());
        if (these.size() != r.ranking.size() || these != models) {
            throw ValidationError("ranking for sample '" + r.sample_id + "' (judge '" + r.judge_name +
                                  "') is not a permutation of the evaluated models");
        }
    }
}

std::map<std::string, double> top1(std::span<const JudgeRecord> records) {
    std::map<std::string, double> out;
    for (const auto& m : records.front().ranking) out[m] = 0.0;
    for (const auto& r : records) out[r.ranking.front()] += 1.0;
    for (auto& [_, v] : out) v /= static_cast<double>(records.size());
    return out;
}

}  // namespace

std::map<std::string, double> judge_top1(std::span<const JudgeRecord> records) {
    check_rankings(records);
    return top1(records);
}

JudgeSummary judge_summary(std::span<const JudgeRecord> records) {
    check_rankings(records);
    JudgeSummary s;
    s.models = records.front().ranking;
    std::map<std::string, std::vector<JudgeRecord>> by_judge;
    for (const auto& r : records) {
        if (!by_judge.count(r.judge_name)) s.judges.push_back(r.judge_name);
        by_judge[r.judge_name].push_back(r);
    }
    for (const auto& m : s.models) s.average[m] = 0.0;
    for (const auto& j : s.judges) {
        s.per_judge[j] = top1(by_judge[j]);
        for (const auto& [m, v] : s.per_judge[j]) s.average[m] += v / static_cast<double>(s.judges.size());
    }
    return s;
}

std::string judge_table_text(const JudgeSummary& s) { return rate_table(s.judges, s.models, s.per_judge, s.average); }

std::vector<Ballot> parse_ballots(std::string_view text) {
    return parse_jsonl<Ballot>(text, "ballots", [](const json& obj) {
        return Ballot{obj.at("group").get<std::string>(), obj.at("chosen_model").get<std::string>()};
    });
}

std::vector<Ballot> load_ballots(const std::filesystem::path& path) { return parse_ballots(io::read_file(path)); }

SelectionRates selection_rates(std::span<const Ballot> ballots) {
    if (ballots.empty()) throw PreconditionError("no ballots");
    SelectionRates s;
    std::map<std::string, std::map<std::string, std::size_t>> counts;
    std::map<std::string, std::size_t> totals;
    for (const auto& b : ballots) {
        if (!totals.count(b.group)) s.groups.push_back(b.group);
        if (std::find(s.models.begin(), s.models.end(), b.chosen_model) == s.models.end()) {
            s.models.push_back(b.chosen_model);
        }
        ++counts[b.group][b.chosen_model];
        ++totals[b.group];
    }
    for (const auto& m : s.models) s.average[m] = 0.0;
    for (const auto& g : s.groups) {
        auto& rates = s.per_group[g];
        for (const auto& m : s.models) {
            const auto it = counts[g].find(m);
            rates[m] = it == counts[g].end() ? 0.0
                                             : static_cast<double>(it->second) / static_cast<double>(totals[g]);
            s.average[m] += rates[m] / static_cast<double>(s.groups.size());
        }
    }
    return s;
}

std::string selection_table_text(const SelectionRates& r) {
    return rate_table(r.groups, r.models, r.per_group, r.average);
}

}  // namespace nuteval::harness
