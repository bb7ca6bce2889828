#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "nuteval/affect.hpp"
#include "nuteval/codebook.hpp"
#include "nuteval/corpus.hpp"
#include "nuteval/error.hpp"
#include "nuteval/harness.hpp"
#include "nuteval/lexical.hpp"
#include "nuteval/schedule.hpp"
#include "nuteval/semantic.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace nuteval;

namespace {

// JSON values cross the boundary through the json module; documents are small.
py::object to_python(const nlohmann::json& doc) { return py::module_::import("json").attr("loads")(doc.dump()); }

nlohmann::json from_python(const py::handle& obj) {
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

std::string jsonl_of(const py::list& rows) {
    std::string out;
    for (const auto& r : rows) out += from_python(r).dump() + "\n";
    return out;
}

Protocol protocol_arg(const std::string& text) {
    const auto p = parse_protocol(text);
    if (!p) throw PreconditionError("unknown protocol '" + text + "'");
    return *p;
}

semantic::TokenEmbeddings token_rows(const std::vector<std::vector<double>>& rows) {
    std::vector<std::string> names(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) names[i] = std::to_string(i);
    return semantic::TokenEmbeddings(std::move(names), rows);
}

py::dict profile_dict(const affect::AffectProfile& p) {
    py::dict d;
    if (p.means) {
        d["means"] = py::make_tuple((*p.means)[affect::Valence], (*p.means)[affect::Arousal],
                                    (*p.means)[affect::Dominance]);
    } else {
        d["means"] = py::none();
    }
    d["coverage"] = p.coverage;
    d["matched_count"] = p.matched_count;
    d["token_count"] = p.token_count;
    return d;
}

class AdaptiveWeight {
public:
    AdaptiveWeight(double first_loss, double mu, double epsilon)
        : state_(schedule::init_state(first_loss, mu, epsilon)) {}
    double step(double loss) {
        const auto r = schedule::step(state_, loss);
        state_ = r.state;
        return r.lambda;
    }
    double lambda() const { return schedule::lambda(state_); }
    double ema() const { return state_.ema; }
    std::uint64_t steps() const { return state_.step; }

private:
    schedule::AdaptiveWeightState state_;
};

}  // namespace

PYBIND11_MODULE(nuteval, m) {
    m.doc() = "Evaluation toolkit for post-match interview response generation";

    static py::exception<Error> base(m, "Error");
    static py::exception<IoError> io_error(m, "IoError", base.ptr());
    static py::exception<ValidationError> validation_error(m, "ValidationError", base.ptr());
    static py::exception<PreconditionError> precondition_error(m, "PreconditionError", base.ptr());
    static py::exception<LlmError> llm_error(m, "LlmError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const IoError& e) {
            py::set_error(io_error, e.what());
        } catch (const ValidationError& e) {
            py::set_error(validation_error, e.what());
        } catch (const PreconditionError& e) {
            py::set_error(precondition_error, e.what());
        } catch (const LlmError& e) {
            py::set_error(llm_error, e.what());
        } catch (const Error& e) {
            py::set_error(base, e.what());
        }
    });

    m.attr("TOKENIZER_VERSION") = std::string(lexical::kTokenizerVersion);

    // lexical
    m.def("tokenize", [](const std::string& text) { return lexical::tokenize(text).tokens; }, py::arg("text"));
    m.def(
        "bleu4",
        [](const std::string& candidate, const std::vector<std::string>& references) {
            std::vector<lexical::TokenSequence> refs;
            for (const auto& r : references) refs.push_back(lexical::tokenize(r));
            const auto s = lexical::bleu4(lexical::tokenize(candidate), refs);
            py::dict d;
            d["bleu"] = s.bleu;
            d["precisions"] = s.precisions;
            d["brevity_penalty"] = s.brevity_penalty;
            return d;
        },
        py::arg("candidate"), py::arg("references"));
    m.def(
        "rouge_l",
        [](const std::string& candidate, const std::string& reference, double beta) {
            const auto s = lexical::rouge_l(lexical::tokenize(candidate), lexical::tokenize(reference), beta);
            py::dict d;
            d["lcs"] = s.lcs;
            d["precision"] = s.precision;
            d["recall"] = s.recall;
            d["f"] = s.f;
            return d;
        },
        py::arg("candidate"), py::arg("reference"), py::arg("beta") = 1.0);
    m.def(
        "wer",
        [](const std::string& reference, const std::string& hypothesis) {
            const auto w = lexical::wer(lexical::tokenize(reference), lexical::tokenize(hypothesis));
            py::dict d;
            d["wer"] = w.wer;
            d["substitutions"] = w.substitutions;
            d["deletions"] = w.deletions;
            d["insertions"] = w.insertions;
            return d;
        },
        py::arg("reference"), py::arg("hypothesis"));

    // semantic
    m.def(
        "bertscore",
        [](const std::vector<std::vector<double>>& candidate, const std::vector<std::vector<double>>& reference) {
            const auto s = semantic::bertscore(token_rows(candidate), token_rows(reference));
            return py::make_tuple(s.precision, s.recall, s.f1);
        },
        py::arg("candidate"), py::arg("reference"), "Token vectors in, (precision, recall, f1) out.");
    m.def(
        "sentence_cosine",
        [](const std::vector<double>& a, const std::vector<double>& b) { return semantic::sentence_cosine(a, b); },
        py::arg("a"), py::arg("b"));

    // affect
    py::class_<affect::VadLexicon>(m, "VadLexicon")
        .def_static("load", &affect::VadLexicon::load, py::arg("path"))
        .def_static("parse", &affect::VadLexicon::parse, py::arg("text"))
        .def("__len__", &affect::VadLexicon::size)
        .def_property_readonly("id", &affect::VadLexicon::id)
        .def("profile", [](const affect::VadLexicon& lex, const std::string& text) {
            return profile_dict(affect::affect_profile(text, lex));
        });
    m.def(
        "emotion_consistency",
        [](const std::string& reference, const std::string& candidate, const affect::VadLexicon& lexicon, double beta) {
            return affect::emotion_consistency(affect::affect_profile(reference, lexicon),
                                               affect::affect_profile(candidate, lexicon), beta);
        },
        py::arg("reference"), py::arg("candidate"), py::arg("lexicon"), py::arg("beta") = affect::kDefaultBeta);
    m.def(
        "valence_arousal",
        [](const std::string& reference, const std::string& candidate, const affect::VadLexicon& lexicon, double beta) {
            const auto s = affect::valence_arousal_scores(reference, candidate, lexicon, beta);
            return py::make_tuple(s.valence, s.arousal);
        },
        py::arg("reference"), py::arg("candidate"), py::arg("lexicon"), py::arg("beta") = affect::kDefaultBeta);

    // corpus and splits
    m.def(
        "make_split",
        [](const fs::path& corpus, const std::string& protocol, std::uint64_t seed, const std::string& ratio) {
            SplitOptions options;
            options.ratio = parse_ratio(ratio);
            return to_python(split_to_json(make_split(protocol_arg(protocol), load_corpus(corpus).corpus, seed, options)));
        },
        py::arg("corpus"), py::arg("protocol") = "subject-dependent", py::arg("seed") = 0, py::arg("ratio") = "4:1");
    m.def(
        "validate_split",
        [](const fs::path& corpus, const py::dict& manifest) {
            const auto r = validate_split(split_from_json(from_python(manifest)), load_corpus(corpus).corpus);
            py::dict out;
            for (const auto& c : r.checks) out[py::str(c.name)] = py::make_tuple(c.passed, c.detail);
            return out;
        },
        py::arg("corpus"), py::arg("manifest"), "Check name -> (passed, detail).");

    // codebook
    m.def(
        "load_codebook", [](const fs::path& path) { return to_python(codebook::codebook_to_json(codebook::load_codebook(path))); },
        py::arg("path"));

    // schedule
    py::class_<AdaptiveWeight>(m, "AdaptiveWeight")
        .def(py::init<double, double, double>(), py::arg("first_loss"), py::arg("mu") = schedule::kDefaultMu,
             py::arg("epsilon") = schedule::kDefaultEpsilon)
        .def("step", &AdaptiveWeight::step, py::arg("loss"), "Feeds one priming loss, returns the new weight.")
        .def_property_readonly("weight", &AdaptiveWeight::lambda)
        .def_property_readonly("ema", &AdaptiveWeight::ema)
        .def_property_readonly("steps", &AdaptiveWeight::steps);
    m.def(
        "combine",
        [](double joint, double priming, double weight) { return schedule::combine(joint, priming, weight).total; },
        py::arg("joint_loss"), py::arg("priming_loss"), py::arg("weight"));

    // harness
    m.def(
        "evaluate",
        [](const fs::path& corpus, const fs::path& split, const std::vector<fs::path>& predictions,
           const fs::path& config_path) {
            const auto config = harness::load_config(config_path);
            const auto lexicon = affect::VadLexicon::load(config.lexicon_path);
            const auto embedder = semantic::FixtureEmbeddingProvider::load(config.embeddings_path);
            const affect::RuleLemmatizer lemmatizer;
            std::vector<harness::PredictionSet> sets;
            for (const auto& p : predictions) {
                for (auto& s : harness::load_predictions(p)) sets.push_back(std::move(s));
            }
            const auto report = harness::evaluate(load_corpus(corpus).corpus, load_split(split), sets,
                                                  {lexicon, embedder, lemmatizer}, config);
            return to_python(harness::report_to_json(report));
        },
        py::arg("corpus"), py::arg("split"), py::arg("predictions"), py::arg("config"));
    m.def(
        "judge_top1",
        [](const py::list& records) { return harness::judge_top1(harness::parse_judge_records(jsonl_of(records))); },
        py::arg("records"), "Records are dicts with sample_id, judge_name and ranking.");
    m.def(
        "selection_rates",
        [](const py::list& ballots) {
            return harness::selection_rates(harness::parse_ballots(jsonl_of(ballots))).average;
        },
        py::arg("ballots"), "Ballots are dicts with group and chosen_model; returns the mean over groups.");
}
