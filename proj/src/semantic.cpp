#include "nuteval/semantic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "nuteval/io.hpp"

namespace nuteval::semantic {

using nlohmann::json;

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

bool all_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace

TokenEmbeddings::TokenEmbeddings(std::vector<std::string> tokens, std::vector<std::vector<double>> vectors)
    : tokens_(std::move(tokens)) {
    if (tokens_.size() != vectors.size()) {
        throw ValidationError("token count " + std::to_string(tokens_.size()) + " != vector count " +
                              std::to_string(vectors.size()));
    }
    if (vectors.empty()) return;
    dim_ = vectors.front().size();
    if (dim_ == 0) throw ValidationError("token embeddings need dimension >= 1");
    data_.reserve(dim_ * vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        const auto& v = vectors[i];
        if (v.size() != dim_) {
            throw ValidationError("token vector " + std::to_string(i) + " has dimension " +
                                  std::to_string(v.size()) + ", expected " + std::to_string(dim_));
        }
        if (!all_finite(v)) throw ValidationError("token vector " + std::to_string(i) + " is not finite");
        const double norm = std::sqrt(dot(v, v));
        if (!(norm > 0.0)) throw ValidationError("token vector " + std::to_string(i) + " has zero norm");
        for (double x : v) data_.push_back(x / norm);
    }
}

BertScore bertscore(const TokenEmbeddings& candidate, const TokenEmbeddings& reference) {
    if (candidate.empty() || reference.empty()) throw PreconditionError("bertscore needs non-empty token lists");
    if (candidate.dim() != reference.dim()) {
        throw PreconditionError("bertscore dimension mismatch: " + std::to_string(candidate.dim()) + " vs " +
                                std::to_string(reference.dim()));
    }
    const std::size_t nc = candidate.size(), nr = reference.size();
    std::vector<double> best_for_ref(nr, -std::numeric_limits<double>::infinity());
    std::vector<double> best_for_cand(nc, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < nr; ++i) {
        for (std::size_t j = 0; j < nc; ++j) {
            const double sim = dot(reference.row(i), candidate.row(j));
            best_for_ref[i] = std::max(best_for_ref[i], sim);
            best_for_cand[j] = std::max(best_for_cand[j], sim);
        }
    }
    BertScore s;
    for (double v : best_for_ref) s.recall += v;
    for (double v : best_for_cand) s.precision += v;
    s.recall /= static_cast<double>(nr);
    s.precision /= static_cast<double>(nc);
    const double denom = s.precision + s.recall;
    s.f1 = denom == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / denom;
    return s;
}

double sentence_cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw PreconditionError("sentence_cosine dimension mismatch: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
    }
    if (a.empty()) throw PreconditionError("sentence_cosine needs dimension >= 1");
    const double na = std::sqrt(dot(a, a)), nb = std::sqrt(dot(b, b));
    if (!(na > 0.0) || !(nb > 0.0)) throw PreconditionError("sentence_cosine of a zero-norm vector");
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Fixture provider

FixtureEmbeddingProvider FixtureEmbeddingProvider::parse(std::string_view text) {
    FixtureEmbeddingProvider p;
    io::for_each_line(text, [&](std::size_t line, std::string_view raw) {
        const auto where = "embedding fixture line " + std::to_string(line) + ": ";
        try {
            const auto obj = json::parse(raw);
            Entry e;
            const auto key = obj.at("text").get<std::string>();
            e.sentence = obj.at("sentence_vector").get<std::vector<double>>();
            const auto dim = obj.contains("dim") ? obj.at("dim").get<std::size_t>() : e.sentence.size();
            if (dim == 0) throw ValidationError(where + "dim must be >= 1");
            if (e.sentence.size() != dim) throw ValidationError(where + "sentence_vector length != dim");
            if (!all_finite(e.sentence)) throw ValidationError(where + "sentence_vector is not finite");
            if (p.dim_ == 0) p.dim_ = dim;
            if (dim != p.dim_) {
                throw ValidationError(where + "dimension " + std::to_string(dim) + " differs from " +
                                      std::to_string(p.dim_));
            }
            const auto version = obj.value("provider_version", std::string());
            if (p.version_.empty()) p.version_ = version;
            if (version != p.version_) throw ValidationError(where + "mixed provider_version values");

            const bool has_list = obj.contains("token_list"), has_vecs = obj.contains("token_vectors");
            if (has_list != has_vecs) throw ValidationError(where + "token_list and token_vectors go together");
            if (has_list) {
                e.has_tokens = true;
                e.tokens = obj.at("token_list").get<std::vector<std::string>>();
                e.token_vectors = obj.at("token_vectors").get<std::vector<std::vector<double>>>();
                if (e.tokens.size() != e.token_vectors.size()) {
                    throw ValidationError(where + "token_list and token_vectors differ in length");
                }
                for (const auto& v : e.token_vectors) {
                    if (v.size() != dim) throw ValidationError(where + "token vector length != dim");
                }
                TokenEmbeddings check(e.tokens, e.token_vectors);  // rejects zero rows early
            }
            const auto [it, inserted] = p.entries_.emplace(key, std::move(e));
            if (!inserted) throw ValidationError(where + "duplicate text \"" + key + "\"");
        } catch (const json::exception& ex) {
            throw ValidationError(where + ex.what());
        } catch (const ValidationError& ex) {
            const std::string msg = ex.what();
            throw ValidationError(msg.rfind("embedding fixture", 0) == 0 ? msg : where + msg);
        }
    });
    return p;
}

FixtureEmbeddingProvider FixtureEmbeddingProvider::load(const std::filesystem::path& path) {
    return parse(io::read_file(path));
}

const FixtureEmbeddingProvider::Entry& FixtureEmbeddingProvider::lookup(std::string_view text) const {
    const auto it = entries_.find(std::string(text));
    if (it == entries_.end()) throw UnknownTextError(std::string(text));
    return it->second;
}

TokenEmbeddings FixtureEmbeddingProvider::token_embed(std::string_view text) const {
    const auto& e = lookup(text);
    if (!e.has_tokens) throw UnknownTextError(std::string(text), "no token embeddings for text");
    return TokenEmbeddings(e.tokens, e.token_vectors);
}

SentenceEmbedding FixtureEmbeddingProvider::sentence_embed(std::string_view text) const {
    return {lookup(text).sentence, std::string(text)};
}

}  // namespace nuteval::semantic
