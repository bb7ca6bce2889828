#include "nuteval/codebook.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <map>
#include <optional>
#include <set>
#include <thread>

#include "nuteval/hash.hpp"
#include "nuteval/io.hpp"
#include "nuteval/random.hpp"

namespace nuteval::codebook {

using nlohmann::json;

namespace prompts {

const std::string_view kBasicFactors =
    R"P(Please identify and list distinct, concrete factors from the following tennis post-match interview response, following these rules:
1. Each factor must capture a core theme mentioned in the response; avoid vague or trivial terms.
2. Factors should reflect the player’s cognitive or emotional state and may cover tactical, technical, mental, or physical aspects.
3. Each factor should can be correspond to a specific behavioral or psychological characteristic with a clear positive or negative emotional bias.
4. For each factor, list the exact expression from the original sentence (do not generalize).
Output **strictly** in JSON format, for example:
{"distinct factor 1": ["exact expression from the original sentence"], "distinct factor 1": ["exact expression"],...})P";

const std::string_view kCodebook =
    R"P(Based on the input factor clusters, summarize a single priming factor that organizes a tennis player’s post-match interview language.
Do not repeat any factors that have appeared in the history factors list.
The priming factor should be a neutral,  widely recognized, established word or phrase. Avoid hyphenated terms, uncommon constructions, or vague words like 'orientation.' Following these rules:
1. The priming factor should distill specific factors into a universal, semantically clear category (e.g., Emotion Valence, Physical State, Opponent Threat Perception), but avoid categories that are overly broad or vague (e.g., Resilience)
2. Priming factor should represent the player’s cognitive or emotional state; avoid detailed or context-specific categories
3. Priming factor should correspond to a specific behavioral or psychological characteristic with a clear positive or negative emotional bias
Output **strictly** in JSON format, for example:
{"Priming factor": "Emotion Valence", "Explanation": "Indicates the emotional valence in the player’s response, reflecting a positive (happy) or negative (upset) state", "Value" : "1 represents positive emotion (joy), -1 represents negative emotion (upset)"})P";

const std::string_view kPrimingVector =
    R"P(Given a factor book containing a list of priming factors, assign a priming activation probability vector for a given tennis player post-match interview text.
This vector should describe which factors are activated in the text and the activation strength for each factor.
1. Each value in the vector represents the activation strength of the corresponding factor, as a float between -1 and 1.
2. Assign activation values based on the 'value' in the factor book. If the text does not contain information related to a specific factor, assign 0 to that dimension.
3. Strictly follow the order and definition of factors in the factor book when generating the probability vector.
4. As a linguistics expert, consider both overall meaning and subtle language cues. Avoid extreme values (-1 or 1) unless the evidence is very clear; use intermediate values to reflect language nuance.
Output only an N-dimensional probability vector (N is the number of factors in the factor-book), for example:
[-0.9, 0.5, 0.8, -0.5, 0.7, 0, -0.6, 1.0, -0.7, 0.9, 0, -1.0, 0, 0, 0.9...])P";

}  // namespace prompts

namespace {

std::string trim_copy(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

// Lowercase, U+2019 -> ', runs of whitespace -> one space.
std::string loose(std::string_view s) {
    std::string out;
    bool space = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto c = static_cast<unsigned char>(s[i]);
        if (c == 0xE2 && i + 2 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0x80 &&
            static_cast<unsigned char>(s[i + 2]) == 0x99) {
            c = '\'';
            i += 2;
        }
        if (std::isspace(c)) {
            space = !out.empty();
            continue;
        }
        if (space) out.push_back(' ');
        space = false;
        out.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    }
    return out;
}

// Text between the first `open` and the last `close`, inclusive (strips code
// fences and chatter around a JSON payload).
std::optional<std::string_view> payload(std::string_view reply, char open, char close) {
    const auto begin = reply.find(open);
    const auto end = reply.rfind(close);
    if (begin == std::string_view::npos || end == std::string_view::npos || end < begin) return std::nullopt;
    return reply.substr(begin, end - begin + 1);
}

// SAX reader for {"label": ["quote", ...] | "quote", ...} keeping duplicate keys.
class FactorSax final : public json::json_sax_t {
public:
    std::vector<std::pair<std::string, std::vector<std::string>>> entries;

    bool null() override { return depth_ == 2; }
    bool boolean(bool) override { return depth_ == 2; }
    bool number_integer(number_integer_t) override { return depth_ == 2; }
    bool number_unsigned(number_unsigned_t) override { return depth_ == 2; }
    bool number_float(number_float_t, const string_t&) override { return depth_ == 2; }
    bool string(string_t& val) override {
        if (depth_ == 0 || entries.empty()) return false;
        entries.back().second.push_back(val);
        return true;
    }
    bool binary(binary_t&) override { return false; }
    bool start_object(std::size_t) override {
        if (depth_ != 0) return false;
        depth_ = 1;
        return true;
    }
    bool key(string_t& val) override {
        entries.emplace_back(val, std::vector<std::string>{});
        return true;
    }
    bool end_object() override {
        depth_ = 0;
        return true;
    }
    bool start_array(std::size_t) override {
        if (depth_ != 1) return false;
        depth_ = 2;
        return true;
    }
    bool end_array() override {
        depth_ = 1;
        return true;
    }
    bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override { return false; }

private:
    int depth_ = 0;
};

}  // namespace

bool parse_basic_factor_reply(std::string_view reply,
                              std::vector<std::pair<std::string, std::vector<std::string>>>& out) {
    const auto body = payload(reply, '{', '}');
    if (!body) return false;
    FactorSax sax;
    const std::string text(*body);
    if (!json::sax_parse(text, &sax)) return false;
    out = std::move(sax.entries);
    return true;
}

// ---------------------------------------------------------------------------
// Sampling

std::vector<ResponseText> sample_responses(const Corpus& corpus, std::span<const std::string> eligible_turn_ids,
                                           std::size_t n, std::uint64_t seed, Diagnostics& diagnostics) {
    std::vector<std::size_t> eligible;
    const auto& turns = corpus.turns();
    if (eligible_turn_ids.empty()) {
        for (std::size_t i = 0; i < turns.size(); ++i) {
            if (turns[i].scorable()) eligible.push_back(i);
        }
    } else {
        std::set<std::string_view> wanted(eligible_turn_ids.begin(), eligible_turn_ids.end());
        for (std::size_t i = 0; i < turns.size(); ++i) {
            if (turns[i].scorable() && wanted.count(turns[i].turn_id)) eligible.push_back(i);
        }
    }

    std::map<std::string, std::vector<std::size_t>> by_subject;
    for (auto i : eligible) by_subject[turns[i].subject_id].push_back(i);

    const Rng root = Rng(seed).split("factor-sample");
    std::vector<std::string> subjects;
    for (const auto& [s, _] : by_subject) subjects.push_back(s);
    auto subject_rng = root.split("subjects");
    subject_rng.shuffle(subjects);

    std::vector<std::size_t> picked;
    std::vector<std::size_t> rest;
    for (const auto& s : subjects) {
        auto idx = by_subject[s];
        root.split(s).shuffle(idx);
        if (picked.size() < n) {
            picked.push_back(idx.front());
            rest.insert(rest.end(), idx.begin() + 1, idx.end());
        } else {
            rest.insert(rest.end(), idx.begin(), idx.end());
        }
    }
    if (subjects.size() > n) {
        diagnostics.push_back({Severity::Warning,
                               std::to_string(subjects.size()) + " subjects but only " + std::to_string(n) +
                                   " samples; subject coverage is incomplete",
                               std::nullopt});
    }
    std::sort(rest.begin(), rest.end());
    auto rest_rng = root.split("rest");
    rest_rng.shuffle(rest);
    for (std::size_t i = 0; picked.size() < n && i < rest.size(); ++i) picked.push_back(rest[i]);
    if (picked.size() < n) {
        diagnostics.push_back({Severity::Info,
                               "requested " + std::to_string(n) + " responses, " + std::to_string(picked.size()) +
                                   " available",
                               std::nullopt});
    }
    std::sort(picked.begin(), picked.end());

    std::vector<ResponseText> out;
    out.reserve(picked.size());
    for (auto i : picked) out.push_back({turns[i].turn_id, turns[i].response_text});
    return out;
}

// ---------------------------------------------------------------------------
// Basic factor extraction

namespace {

struct ExtractionOutcome {
    std::vector<BasicFactor> factors;
    Diagnostics diagnostics;
    bool skipped = false;
    std::exception_ptr error;
};

std::string call_with_retry(llm::LlmClient& client, std::string_view system, std::string_view user,
                            Diagnostics& diags, const std::string& what) {
    try {
        return client.complete(system, user);
    } catch (const Error& e) {
        diags.push_back({Severity::Warning, what + ": client error, retrying: " + e.what(), std::nullopt});
    }
    return client.complete(system, user);
}

ExtractionOutcome extract_one(const ResponseText& response, llm::LlmClient& client) {
    ExtractionOutcome out;
    const std::string what = "turn '" + response.turn_id + "'";
    try {
        std::vector<std::pair<std::string, std::vector<std::string>>> entries;
        bool parsed = false;
        for (int attempt = 0; attempt < 2 && !parsed; ++attempt) {
            const auto reply = call_with_retry(client, prompts::kBasicFactors, response.text, out.diagnostics, what);
            parsed = parse_basic_factor_reply(reply, entries);
            if (!parsed) {
                out.diagnostics.push_back({Severity::Warning,
                                           what + ": malformed factor reply" +
                                               (attempt == 0 ? ", retrying" : ", response skipped"),
                                           std::nullopt});
            }
        }
        if (!parsed) {
            out.skipped = true;
            return out;
        }
        const auto haystack = loose(response.text);
        for (auto& [label, evidence] : entries) {
            BasicFactor f;
            f.label = trim_copy(label);
            f.source_turn_id = response.turn_id;
            for (auto& e : evidence) {
                if (!trim_copy(e).empty()) f.evidence.push_back(std::move(e));
            }
            if (f.label.empty() || f.evidence.empty()) {
                out.diagnostics.push_back({Severity::Warning,
                                           what + ": factor '" + f.label + "' dropped (empty label or evidence)",
                                           std::nullopt});
                continue;
            }
            f.evidence_verified = std::all_of(f.evidence.begin(), f.evidence.end(), [&](const std::string& e) {
                return haystack.find(loose(e)) != std::string::npos;
            });
            if (!f.evidence_verified) {
                out.diagnostics.push_back({Severity::Warning,
                                           what + ": evidence for '" + f.label + "' is not a quote of the response",
                                           std::nullopt});
            }
            out.factors.push_back(std::move(f));
        }
    } catch (...) {
        out.error = std::current_exception();
    }
    return out;
}

}  // namespace

ExtractionResult extract_basic_factors(std::span<const ResponseText> responses, llm::LlmClient& client,
                                       const ExtractionOptions& options) {
    if (responses.empty()) throw PreconditionError("extract_basic_factors needs at least one response");
    std::vector<ExtractionOutcome> outcomes(responses.size());
    const std::size_t workers = std::min(std::max<std::size_t>(options.max_concurrency, 1), responses.size());
    if (workers == 1) {
        for (std::size_t i = 0; i < responses.size(); ++i) outcomes[i] = extract_one(responses[i], client);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < responses.size(); i = next++) {
                    outcomes[i] = extract_one(responses[i], client);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    ExtractionResult result;
    for (auto& o : outcomes) {
        if (o.error) std::rethrow_exception(o.error);
        result.skipped_responses += o.skipped;
        for (auto& d : o.diagnostics) result.diagnostics.push_back(std::move(d));
        for (auto& f : o.factors) result.factors.push_back(std::move(f));
    }
    if (result.factors.empty()) throw LlmError("no basic factors could be parsed from any response");
    return result;
}

// ---------------------------------------------------------------------------
// Clustering glue

PointSet embed_factor_labels(std::span<const BasicFactor> factors, const semantic::EmbeddingProvider& embedder) {
    std::vector<std::vector<double>> rows;
    rows.reserve(factors.size());
    for (const auto& f : factors) rows.push_back(embedder.sentence_embed(f.label).vector);
    return PointSet::from_rows(rows);
}

FactorClustering cluster_factors(std::span<const BasicFactor> factors, const semantic::EmbeddingProvider& embedder,
                                 std::size_t k, std::uint64_t seed, std::size_t n_init) {
    if (k < 2) throw PreconditionError("cluster_factors needs k >= 2");
    if (factors.size() < k) {
        throw PreconditionError("cluster_factors: " + std::to_string(factors.size()) + " factor(s) for k = " +
                                std::to_string(k));
    }
    const auto points = embed_factor_labels(factors, embedder);
    FactorClustering out;
    KMeansOptions opt;
    opt.k = k;
    opt.seed = seed;
    opt.n_init = n_init;
    out.kmeans = kmeans(points, opt);
    out.members.resize(k);
    for (std::size_t i = 0; i < factors.size(); ++i) out.members[out.kmeans.assignment[i]].push_back(i);
    return out;
}

DimensionSelection select_codebook_dimension(std::span<const BasicFactor> factors,
                                             const semantic::EmbeddingProvider& embedder,
                                             std::span<const std::size_t> ks, std::span<const double> taus,
                                             std::uint64_t seed, std::size_t n_init) {
    return select_dimension(embed_factor_labels(factors, embedder), ks, taus, seed, n_init);
}

std::vector<std::vector<std::string>> cluster_labels(std::span<const BasicFactor> factors,
                                                     const FactorClustering& clustering) {
    std::vector<std::vector<std::string>> out;
    for (const auto& members : clustering.members) {
        std::vector<std::string> labels;
        for (auto i : members) {
            if (std::find(labels.begin(), labels.end(), factors[i].label) == labels.end()) {
                labels.push_back(factors[i].label);
            }
        }
        out.push_back(std::move(labels));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Codebook induction

std::string codebook_user_text(std::span<const std::string> cluster, std::span<const std::string> history,
                               std::string_view rejected_name) {
    json doc;
    doc["factor_cluster"] = std::vector<std::string>(cluster.begin(), cluster.end());
    doc["history_factors"] = std::vector<std::string>(history.begin(), history.end());
    if (!rejected_name.empty()) {
        doc["note"] = "\"" + std::string(rejected_name) +
                      "\" already appears in the history factors list; summarize a different priming factor.";
    }
    return doc.dump();
}

namespace {

// Looks up a key ignoring case and surrounding whitespace.
const json* find_key(const json& obj, std::string_view wanted) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (loose(it.key()) == wanted) return &it.value();
    }
    return nullptr;
}

// "-1" and a separate "1"/"+1" must both appear.
bool mentions_both_poles(std::string_view schema) {
    std::string s(schema);
    if (s.find("-1") == std::string::npos) return false;
    std::string rest;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.compare(i, 2, "-1") == 0) {
            ++i;
            continue;
        }
        rest.push_back(s[i]);
    }
    return rest.find('1') != std::string::npos;
}

std::optional<PrimingFactor> parse_factor_reply(std::string_view reply) {
    const auto body = payload(reply, '{', '}');
    if (!body) return std::nullopt;
    json doc;
    try {
        doc = json::parse(*body);
    } catch (const json::parse_error&) {
        return std::nullopt;
    }
    if (!doc.is_object()) return std::nullopt;
    const auto* name = find_key(doc, "priming factor");
    const auto* explanation = find_key(doc, "explanation");
    const auto* value = find_key(doc, "value");
    if (!name || !explanation || !value || !name->is_string() || !explanation->is_string() || !value->is_string()) {
        return std::nullopt;
    }
    PrimingFactor f{trim_copy(name->get<std::string>()), trim_copy(explanation->get<std::string>()),
                    trim_copy(value->get<std::string>())};
    if (f.name.empty() || f.explanation.empty() || !mentions_both_poles(f.polarity_schema)) return std::nullopt;
    return f;
}

PrimingFactor request_factor(llm::LlmClient& client, const std::string& user, std::size_t cluster,
                             Diagnostics& diags) {
    const std::string what = "cluster " + std::to_string(cluster);
    for (int attempt = 0; attempt < 2; ++attempt) {
        const auto reply = call_with_retry(client, prompts::kCodebook, user, diags, what);
        if (auto f = parse_factor_reply(reply)) return *f;
        diags.push_back({Severity::Warning, what + ": unusable codebook reply" + (attempt == 0 ? ", retrying" : ""),
                         std::nullopt});
    }
    throw LlmError(what + ": codebook reply unparseable after retry");
}

}  // namespace

InductionResult induce_codebook(std::span<const std::vector<std::string>> clusters, llm::LlmClient& client,
                                std::vector<std::string> history) {
    if (clusters.empty()) throw PreconditionError("induce_codebook needs at least one cluster");
    InductionResult result;
    std::set<std::string> used;
    for (const auto& h : history) used.insert(loose(h));

    for (std::size_t c = 0; c < clusters.size(); ++c) {
        const auto user = codebook_user_text(clusters[c], history);
        auto factor = request_factor(client, user, c, result.diagnostics);
        if (used.count(loose(factor.name))) {
            result.diagnostics.push_back({Severity::Warning,
                                         "cluster " + std::to_string(c) + ": repeated factor '" + factor.name +
                                             "', re-prompting",
                                         std::nullopt});
            auto second = request_factor(client, codebook_user_text(clusters[c], history, factor.name), c,
                                         result.diagnostics);
            if (!used.count(loose(second.name))) {
                factor = std::move(second);
            } else {
                const std::string base = factor.name;
                for (int n = 2; used.count(loose(factor.name)); ++n) factor.name = base + " (" + std::to_string(n) + ")";
                result.diagnostics.push_back({Severity::Warning,
                                             "cluster " + std::to_string(c) + ": renamed repeated factor to '" +
                                                 factor.name + "'",
                                             std::nullopt});
            }
        }
        used.insert(loose(factor.name));
        history.push_back(factor.name);
        result.codebook.factors.push_back(std::move(factor));
    }
    result.codebook.provenance.k = result.codebook.factors.size();
    result.codebook.provenance.llm_version = client.model_version();
    return result;
}

// ---------------------------------------------------------------------------
// Priming vectors

std::string vector_user_text(const PrimingCodebook& codebook, std::string_view response_text) {
    json book = json::array();
    for (const auto& f : codebook.factors) {
        book.push_back({{"Priming factor", f.name}, {"Explanation", f.explanation}, {"Value", f.polarity_schema}});
    }
    return "Factor book (N = " + std::to_string(codebook.k()) + "):\n" + book.dump() + "\n\nText:\n" +
           std::string(response_text);
}

namespace {

std::optional<std::vector<double>> parse_vector_reply(std::string_view reply) {
    const auto body = payload(reply, '[', ']');
    if (!body) return std::nullopt;
    json doc;
    try {
        doc = json::parse(*body);
    } catch (const json::parse_error&) {
        return std::nullopt;
    }
    if (!doc.is_array()) return std::nullopt;
    std::vector<double> values;
    for (const auto& v : doc) {
        if (!v.is_number()) return std::nullopt;
        const double x = v.get<double>();
        if (!std::isfinite(x)) return std::nullopt;
        values.push_back(x);
    }
    return values;
}

}  // namespace

VectorAssignment assign_priming_vector(std::string_view response_text, const PrimingCodebook& codebook,
                                       llm::LlmClient& client) {
    if (codebook.k() == 0) throw PreconditionError("assign_priming_vector needs a non-empty codebook");
    VectorAssignment out;
    out.vector.codebook_id = codebook.id();
    const auto user = vector_user_text(codebook, response_text);
    std::string problem;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const auto reply = call_with_retry(client, prompts::kPrimingVector, user, out.diagnostics, "priming vector");
        auto values = parse_vector_reply(reply);
        if (!values) {
            problem = "unparseable priming vector reply";
        } else if (values->size() != codebook.k()) {
            problem = "priming vector has " + std::to_string(values->size()) + " entries, codebook has " +
                      std::to_string(codebook.k());
        } else {
            for (std::size_t i = 0; i < values->size(); ++i) {
                auto& x = (*values)[i];
                if (x > 1.0 || x < -1.0) {
                    const double clamped = std::clamp(x, -1.0, 1.0);
                    out.diagnostics.push_back({Severity::Warning,
                                               "entry " + std::to_string(i) + " (" + codebook.factors[i].name +
                                                   ") = " + io::format_double(x) + " clamped to " +
                                                   io::format_double(clamped),
                                               std::nullopt});
                    x = clamped;
                }
            }
            out.vector.values = std::move(*values);
            return out;
        }
        out.diagnostics.push_back({Severity::Warning, problem + (attempt == 0 ? ", retrying" : ""), std::nullopt});
    }
    throw LlmError(problem + " after retry");
}

// ---------------------------------------------------------------------------
// Serialization

std::string PrimingCodebook::id() const {
    json arr = json::array();
    for (const auto& f : factors) arr.push_back({f.name, f.explanation, f.polarity_schema});
    return content_id(arr.dump());
}

json codebook_to_json(const PrimingCodebook& cb) {
    json doc;
    doc["codebook_id"] = cb.id();
    doc["k"] = cb.k();
    doc["factors"] = json::array();
    for (const auto& f : cb.factors) {
        doc["factors"].push_back({{"name", f.name}, {"explanation", f.explanation}, {"value", f.polarity_schema}});
    }
    const auto& p = cb.provenance;
    doc["provenance"] = {{"corpus_hash", p.corpus_hash}, {"seed", p.seed},           {"k", p.k},
                         {"tau", p.tau},                 {"silhouette", p.silhouette}, {"llm_version", p.llm_version}};
    return doc;
}

PrimingCodebook codebook_from_json(const json& doc) {
    try {
        PrimingCodebook cb;
        std::set<std::string> names;
        for (const auto& f : doc.at("factors")) {
            PrimingFactor pf{f.at("name").get<std::string>(), f.value("explanation", std::string()),
                             f.value("value", std::string())};
            if (pf.name.empty()) throw ValidationError("codebook factor with empty name");
            if (!names.insert(loose(pf.name)).second) throw ValidationError("duplicate codebook factor '" + pf.name + "'");
            cb.factors.push_back(std::move(pf));
        }
        if (doc.contains("k") && doc.at("k").get<std::size_t>() != cb.k()) {
            throw ValidationError("codebook k does not match its factor count");
        }
        if (const auto it = doc.find("provenance"); it != doc.end() && it->is_object()) {
            auto& p = cb.provenance;
            p.corpus_hash = it->value("corpus_hash", std::string());
            p.seed = it->value("seed", std::uint64_t{0});
            p.k = it->value("k", cb.k());
            p.tau = it->value("tau", 0.0);
            p.silhouette = it->value("silhouette", 0.0);
            p.llm_version = it->value("llm_version", std::string());
        }
        if (doc.contains("codebook_id") && doc.at("codebook_id").get<std::string>() != cb.id()) {
            throw ValidationError("codebook_id does not match the factor list");
        }
        return cb;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed codebook: ") + e.what());
    }
}

void save_codebook(const PrimingCodebook& cb, const std::filesystem::path& path) {
    io::write_file(path, codebook_to_json(cb).dump(2) + "\n");
}

PrimingCodebook load_codebook(const std::filesystem::path& path) { return codebook_from_json(io::read_json(path)); }

void save_priming_vectors(const std::filesystem::path& path, std::span<const PrimingVectorRecord> records) {
    std::string out;
    for (const auto& r : records) {
        json obj{{"turn_id", r.turn_id}, {"codebook_id", r.vector.codebook_id}, {"values", r.vector.values}};
        out += obj.dump();
        out += '\n';
    }
    io::write_file(path, out);
}

std::vector<PrimingVectorRecord> load_priming_vectors(const std::filesystem::path& path) {
    std::vector<PrimingVectorRecord> records;
    io::for_each_line(io::read_file(path), [&](std::size_t line, std::string_view raw) {
        try {
            const auto obj = json::parse(raw);
            PrimingVectorRecord r;
            r.turn_id = obj.at("turn_id").get<std::string>();
            r.vector.codebook_id = obj.at("codebook_id").get<std::string>();
            r.vector.values = obj.at("values").get<std::vector<double>>();
            for (double x : r.vector.values) {
                if (!(x >= -1.0 && x <= 1.0)) throw ValidationError("entry outside [-1, 1]");
            }
            records.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw ValidationError("priming vector line " + std::to_string(line) + ": " + e.what());
        }
    });
    return records;
}

// ---------------------------------------------------------------------------
// Pipeline

PipelineResult run_codebook_pipeline(const Corpus& corpus, std::span<const std::string> eligible_turn_ids,
                                     llm::LlmClient& client, const semantic::EmbeddingProvider& embedder,
                                     const PipelineOptions& options) {
    PipelineResult r;
    r.sample = sample_responses(corpus, eligible_turn_ids, options.sample_size, options.seed, r.diagnostics);
    r.extraction = extract_basic_factors(r.sample, client, {options.max_concurrency});

    std::vector<std::size_t> ks;
    for (auto k : options.ks) {
        if (k >= 2 && k <= r.extraction.factors.size()) {
            ks.push_back(k);
        } else {
            r.diagnostics.push_back({Severity::Warning,
                                     "k = " + std::to_string(k) + " skipped (" +
                                         std::to_string(r.extraction.factors.size()) + " factors)",
                                     std::nullopt});
        }
    }
    if (ks.empty()) throw PreconditionError("no candidate k fits the extracted factor pool");

    r.selection = select_codebook_dimension(r.extraction.factors, embedder, ks, options.taus, options.seed,
                                            options.n_init);
    r.clustering = cluster_factors(r.extraction.factors, embedder, r.selection.k, options.seed, options.n_init);
    const auto labels = cluster_labels(r.extraction.factors, r.clustering);
    r.induction = induce_codebook(labels, client);

    auto& p = r.induction.codebook.provenance;
    p.corpus_hash = corpus.content_hash();
    p.seed = options.seed;
    p.k = r.selection.k;
    p.tau = r.selection.tau;
    p.silhouette = r.selection.score;
    return r;
}

}  // namespace nuteval::codebook
