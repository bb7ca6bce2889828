// nuteval command-line front end.
//
// Exit codes: 0 success, 1 validation failure (bad input, failed check,
// unusable LLM reply), 2 I/O failure.

#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nuteval/affect.hpp"
#include "nuteval/codebook.hpp"
#include "nuteval/corpus.hpp"
#include "nuteval/error.hpp"
#include "nuteval/harness.hpp"
#include "nuteval/io.hpp"
#include "nuteval/llm.hpp"
#include "nuteval/schedule.hpp"
#include "nuteval/semantic.hpp"

namespace fs = std::filesystem;
using namespace nuteval;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kIo = 2;

void print(const Diagnostics& diags) {
    for (const auto& d : diags) std::cerr << to_string(d) << '\n';
}

Corpus read_corpus(const fs::path& path, bool json_array, bool strict) {
    CorpusLoadOptions opt;
    opt.format = json_array ? CorpusFormat::JsonArray : CorpusFormat::JsonLines;
    opt.strict = strict;
    auto loaded = load_corpus(path, opt);
    print(loaded.diagnostics);
    return std::move(loaded.corpus);
}

struct LlmArgs {
    fs::path replay;
    bool sequential = false;
    bool live = false;
    std::string base_url = llm::HttpClientConfig{}.base_url;
    std::string model = llm::HttpClientConfig{}.model;
    std::string api_key_env = "OPENAI_API_KEY";
    fs::path record;

    void add(CLI::App* cmd) {
        cmd->add_option("--replay", replay, "Transcript to replay instead of calling a model");
        cmd->add_flag("--sequential", sequential, "Replay in recorded order instead of by prompt hash");
        cmd->add_flag("--live", live, "Call an OpenAI-compatible endpoint");
        cmd->add_option("--base-url", base_url, "Endpoint base URL for --live");
        cmd->add_option("--model", model, "Model name for --live");
        cmd->add_option("--api-key-env", api_key_env, "Environment variable holding the API key");
        cmd->add_option("--record", record, "Write every exchange to this transcript");
    }

    std::unique_ptr<llm::LlmClient> make() const {
        if (live == !replay.empty()) throw PreconditionError("give exactly one of --replay or --live");
        if (!live) {
            return std::make_unique<llm::ReplayLlmClient>(
                llm::load_transcript(replay),
                sequential ? llm::ReplayLlmClient::Mode::Sequential : llm::ReplayLlmClient::Mode::Keyed);
        }
        llm::HttpClientConfig cfg;
        cfg.base_url = base_url;
        cfg.model = model;
        if (const char* key = std::getenv(api_key_env.c_str())) cfg.api_key = key;
        return std::make_unique<llm::HttpLlmClient>(cfg);
    }
};

// Runs fn with the configured client, recording the transcript when asked.
template <class Fn>
void with_client(const LlmArgs& args, Fn&& fn) {
    auto client = args.make();
    if (args.record.empty()) {
        fn(*client);
        return;
    }
    llm::RecordingLlmClient recorder(*client);
    try {
        fn(recorder);
    } catch (...) {
        recorder.save(args.record);
        throw;
    }
    recorder.save(args.record);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Evaluation and priming-codebook toolkit for post-match interview response prediction"};
    app.require_subcommand(1);

    bool json_array = false;
    bool strict = false;
    fs::path corpus_path;
    auto add_corpus = [&](CLI::App* cmd) {
        cmd->add_option("--corpus", corpus_path, "Corpus file")->required();
        cmd->add_flag("--json-array", json_array, "Corpus is one JSON array instead of JSON lines");
    };

    // split
    auto* split_cmd = app.add_subcommand("split", "Build a train/test split manifest");
    std::string protocol_text = "subject-dependent";
    std::uint64_t seed = 0;
    std::string ratio_text = "4:1";
    fs::path out_path;
    add_corpus(split_cmd);
    split_cmd->add_option("--protocol", protocol_text,
                          "subject-dependent | subject-independent | cross-scenario | scalability");
    split_cmd->add_option("--seed", seed);
    split_cmd->add_option("--ratio", ratio_text, "train:test");
    split_cmd->add_option("--out", out_path, "Manifest path")->required();
    split_cmd->add_flag("--strict", strict, "Treat malformed records and single-turn subjects as errors");

    // validate-split
    auto* validate_cmd = app.add_subcommand("validate-split", "Check a split manifest against its corpus");
    fs::path split_path;
    add_corpus(validate_cmd);
    validate_cmd->add_option("--split", split_path)->required();

    // codebook
    auto* codebook_cmd = app.add_subcommand("codebook", "Induce a priming-factor codebook");
    fs::path embeddings_path, sweep_out;
    std::size_t sample_size = 200, n_init = 4, concurrency = 1;
    std::vector<std::size_t> ks{10, 15, 20};
    std::vector<double> taus{0.0, 0.05, 0.10};
    LlmArgs codebook_llm;
    add_corpus(codebook_cmd);
    codebook_cmd->add_option("--split", split_path, "Restrict sampling to the split's train turns");
    codebook_cmd->add_option("--embeddings", embeddings_path, "Embedding fixture for factor labels")->required();
    codebook_cmd->add_option("--sample-size", sample_size);
    codebook_cmd->add_option("--ks", ks)->delimiter(',');
    codebook_cmd->add_option("--taus", taus)->delimiter(',');
    codebook_cmd->add_option("--seed", seed);
    codebook_cmd->add_option("--n-init", n_init, "k-means restarts per k");
    codebook_cmd->add_option("--concurrency", concurrency, "Parallel factor-extraction calls");
    codebook_cmd->add_option("--out", out_path, "Codebook JSON")->required();
    codebook_cmd->add_option("--sweep-out", sweep_out, "Write the (k, tau) silhouette table");
    codebook_llm.add(codebook_cmd);

    // assign-vectors
    auto* assign_cmd = app.add_subcommand("assign-vectors", "Assign a priming vector to each response");
    fs::path codebook_path;
    std::string which = "all";
    LlmArgs assign_llm;
    add_corpus(assign_cmd);
    assign_cmd->add_option("--codebook", codebook_path)->required();
    assign_cmd->add_option("--split", split_path);
    assign_cmd->add_option("--turns", which, "all | train | test (train/test need --split)");
    assign_cmd->add_option("--out", out_path, "Vector sidecar (JSON lines)")->required();
    assign_llm.add(assign_cmd);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Score prediction files on the test split");
    std::vector<fs::path> prediction_paths;
    fs::path config_path, out_dir;
    std::vector<std::string> formats{"table-text", "delimited", "document"};
    add_corpus(eval_cmd);
    eval_cmd->add_option("--split", split_path)->required();
    eval_cmd->add_option("--predictions", prediction_paths, "Prediction files (JSON lines)")->required();
    eval_cmd->add_option("--config", config_path, "Evaluation config")->required();
    eval_cmd->add_option("--out-dir", out_dir)->required();
    eval_cmd->add_option("--format", formats, "table-text, delimited, document")->delimiter(',');

    // judge
    auto* judge_cmd = app.add_subcommand("judge", "Top-1 rates from LLM-judge rankings");
    fs::path records_path;
    judge_cmd->add_option("--records", records_path)->required();
    judge_cmd->add_option("--out", out_path, "Also write the rates as JSON");

    // user-study
    auto* study_cmd = app.add_subcommand("user-study", "Selection rates from user-study ballots");
    fs::path ballots_path;
    study_cmd->add_option("--ballots", ballots_path)->required();
    study_cmd->add_option("--out", out_path, "Also write the rates as JSON");

    // report
    auto* report_cmd = app.add_subcommand("report", "Re-emit a report from per_sample.tsv or report.json");
    fs::path input_path;
    report_cmd->add_option("--input", input_path)->required();
    report_cmd->add_option("--out-dir", out_dir)->required();
    report_cmd->add_option("--format", formats)->delimiter(',');

    // schedule-trace
    auto* trace_cmd = app.add_subcommand("schedule-trace", "Adaptive priming-loss weight for a loss sequence");
    fs::path losses_path;
    double mu = schedule::kDefaultMu, epsilon = schedule::kDefaultEpsilon;
    trace_cmd->add_option("--losses", losses_path, "One loss per line")->required();
    trace_cmd->add_option("--mu", mu);
    trace_cmd->add_option("--epsilon", epsilon);
    trace_cmd->add_option("--out", out_path, "Trajectory TSV (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    auto parse_formats = [&] {
        std::vector<harness::ReportFormat> out;
        for (const auto& f : formats) {
            const auto parsed = harness::parse_report_format(f);
            if (!parsed) throw PreconditionError("unknown report format '" + f + "'");
            out.push_back(*parsed);
        }
        return out;
    };

    try {
        if (*split_cmd) {
            const auto protocol = parse_protocol(protocol_text);
            if (!protocol) throw PreconditionError("unknown protocol '" + protocol_text + "'");
            const auto corpus = read_corpus(corpus_path, json_array, strict);
            SplitOptions opt;
            opt.ratio = parse_ratio(ratio_text);
            opt.strict = strict;
            const auto manifest = make_split(*protocol, corpus, seed, opt);
            print(manifest.diagnostics);
            const auto report = validate_split(manifest, corpus);
            save_split(manifest, out_path);
            std::cout << to_string(manifest.protocol) << ": " << manifest.train_ids.size() << " train / "
                      << manifest.test_ids.size() << " test turns\n";
            for (const auto& c : report.checks) {
                if (!c.passed) std::cerr << "check failed: " << c.name << ": " << c.detail << '\n';
            }
            return report.passed() ? kOk : kInvalid;
        }

        if (*validate_cmd) {
            const auto corpus = read_corpus(corpus_path, json_array, false);
            const auto manifest = load_split(split_path);
            const auto report = validate_split(manifest, corpus);
            for (const auto& c : report.checks) {
                std::cout << (c.passed ? "ok    " : "FAIL  ") << c.name << (c.detail.empty() ? "" : ": ") << c.detail
                          << '\n';
            }
            return report.passed() ? kOk : kInvalid;
        }

        if (*codebook_cmd) {
            const auto corpus = read_corpus(corpus_path, json_array, false);
            std::vector<std::string> eligible;
            if (!split_path.empty()) eligible = load_split(split_path).train_ids;
            const auto embedder = semantic::FixtureEmbeddingProvider::load(embeddings_path);
            codebook::PipelineOptions opt;
            opt.sample_size = sample_size;
            opt.ks = ks;
            opt.taus = taus;
            opt.seed = seed;
            opt.n_init = n_init;
            opt.max_concurrency = concurrency;
            with_client(codebook_llm, [&](llm::LlmClient& client) {
                const auto result = codebook::run_codebook_pipeline(corpus, eligible, client, embedder, opt);
                print(result.diagnostics);
                print(result.extraction.diagnostics);
                print(result.induction.diagnostics);
                codebook::save_codebook(result.induction.codebook, out_path);
                if (!sweep_out.empty()) {
                    std::string tsv = "k\ttau\tscore\n";
                    for (const auto& row : result.selection.table) {
                        tsv += std::to_string(row.k) + '\t' + io::format_double(row.tau) + '\t' +
                               io::format_double(row.score) + '\n';
                    }
                    io::write_file(sweep_out, tsv);
                }
                std::cout << result.sample.size() << " responses, " << result.extraction.factors.size()
                          << " basic factors, k* = " << result.selection.k
                          << ", tau* = " << io::format_double(result.selection.tau)
                          << ", score = " << io::format_double(result.selection.score) << '\n';
                for (const auto& f : result.induction.codebook.factors) std::cout << "  " << f.name << '\n';
            });
            return kOk;
        }

        if (*assign_cmd) {
            const auto corpus = read_corpus(corpus_path, json_array, false);
            const auto cb = codebook::load_codebook(codebook_path);
            std::vector<std::string> ids;
            if (which == "all") {
                for (const auto& t : corpus.turns()) {
                    if (t.scorable()) ids.push_back(t.turn_id);
                }
            } else if (which == "train" || which == "test") {
                if (split_path.empty()) throw PreconditionError("--turns " + which + " needs --split");
                const auto manifest = load_split(split_path);
                ids = which == "train" ? manifest.train_ids : manifest.test_ids;
            } else {
                throw PreconditionError("--turns must be all, train or test");
            }
            with_client(assign_llm, [&](llm::LlmClient& client) {
                std::vector<codebook::PrimingVectorRecord> records;
                for (const auto& id : ids) {
                    const auto* turn = corpus.find(id);
                    if (!turn) throw ValidationError("turn '" + id + "' is not in the corpus");
                    auto a = codebook::assign_priming_vector(turn->response_text, cb, client);
                    for (auto& d : a.diagnostics) d.message = id + ": " + d.message;
                    print(a.diagnostics);
                    records.push_back({id, std::move(a.vector)});
                }
                codebook::save_priming_vectors(out_path, records);
                std::cout << records.size() << " vectors of length " << cb.k() << '\n';
            });
            return kOk;
        }

        if (*eval_cmd) {
            const auto fmts = parse_formats();
            const auto corpus = read_corpus(corpus_path, json_array, false);
            const auto manifest = load_split(split_path);
            const auto config = harness::load_config(config_path);
            if (config.lexicon_path.empty() || config.embeddings_path.empty()) {
                throw PreconditionError("config must name a lexicon and an embeddings fixture");
            }
            const auto lexicon = affect::VadLexicon::load(config.lexicon_path);
            const auto embedder = semantic::FixtureEmbeddingProvider::load(config.embeddings_path);
            std::vector<harness::PredictionSet> sets;
            for (const auto& p : prediction_paths) {
                for (auto& s : harness::load_predictions(p)) sets.push_back(std::move(s));
            }
            const affect::RuleLemmatizer lemmatizer;
            const auto report = harness::evaluate(corpus, manifest, sets, {lexicon, embedder, lemmatizer}, config);
            print(report.diagnostics);
            for (auto f : fmts) {
                for (const auto& path : harness::emit_report(report, f, out_dir)) std::cout << "wrote " << path.string() << '\n';
            }
            std::cout << harness::table_text(report);
            return kOk;
        }

        if (*judge_cmd) {
            const auto records = harness::load_judge_records(records_path);
            const auto summary = harness::judge_summary(records);
            std::cout << harness::judge_table_text(summary);
            if (!out_path.empty()) {
                nlohmann::json doc{{"per_judge", summary.per_judge}, {"average", summary.average},
                                   {"pooled", harness::judge_top1(records)}};
                io::write_file(out_path, doc.dump(2) + "\n");
            }
            return kOk;
        }

        if (*study_cmd) {
            const auto rates = harness::selection_rates(harness::load_ballots(ballots_path));
            std::cout << harness::selection_table_text(rates);
            if (!out_path.empty()) {
                nlohmann::json doc{{"per_group", rates.per_group}, {"average", rates.average}};
                io::write_file(out_path, doc.dump(2) + "\n");
            }
            return kOk;
        }

        if (*report_cmd) {
            const auto fmts = parse_formats();
            const auto report = harness::ingest_report(input_path);
            for (auto f : fmts) {
                for (const auto& path : harness::emit_report(report, f, out_dir)) std::cout << "wrote " << path.string() << '\n';
            }
            return kOk;
        }

        if (*trace_cmd) {
            std::vector<double> losses;
            io::for_each_line(io::read_file(losses_path), [&](std::size_t line, std::string_view raw) {
                try {
                    losses.push_back(std::stod(std::string(raw)));
                } catch (const std::exception&) {
                    throw ValidationError("losses line " + std::to_string(line) + ": not a number");
                }
            });
            const auto rows = schedule::trajectory(losses, mu, epsilon);
            if (out_path.empty()) {
                std::cout << schedule::trajectory_tsv(rows);
            } else {
                schedule::write_trajectory(out_path, rows);
            }
            return kOk;
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    }
    return kOk;
}
