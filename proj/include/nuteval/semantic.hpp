#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nuteval/error.hpp"

namespace nuteval::semantic {

// Token strings with one embedding row per token, stored row-major.
// Rows are unit-normalized on construction so a dot product is a cosine.
class TokenEmbeddings {
public:
    TokenEmbeddings() = default;
    // Throws ValidationError on a row count / dimension mismatch or a zero row.
    TokenEmbeddings(std::vector<std::string> tokens, std::vector<std::vector<double>> vectors);

    std::size_t size() const noexcept { return tokens_.size(); }
    bool empty() const noexcept { return tokens_.empty(); }
    std::size_t dim() const noexcept { return dim_; }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }
    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * dim_, dim_}; }

private:
    std::vector<std::string> tokens_;
    std::vector<double> data_;
    std::size_t dim_ = 0;
};

struct SentenceEmbedding {
    std::vector<double> vector;
    std::string source_text;
};

// Source of embeddings for the semantic metrics. Implementations are
// deterministic for a fixed input within one version().
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual TokenEmbeddings token_embed(std::string_view text) const = 0;
    virtual SentenceEmbedding sentence_embed(std::string_view text) const = 0;
    virtual std::string version() const = 0;
    // Whether concurrent calls are allowed; callers serialize otherwise.
    virtual bool concurrency_safe() const noexcept { return false; }
};

struct BertScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Greedy max-cosine matching: recall averages over reference tokens,
// precision over candidate tokens, F1 is their harmonic mean (0 when P + R = 0).
// Throws PreconditionError on an empty side or mismatched dimensions.
BertScore bertscore(const TokenEmbeddings& candidate, const TokenEmbeddings& reference);

// Throws PreconditionError on mismatched dimensions or a zero-norm vector.
double sentence_cosine(std::span<const double> a, std::span<const double> b);
inline double sentence_cosine(const SentenceEmbedding& a, const SentenceEmbedding& b) {
    return sentence_cosine(a.vector, b.vector);
}

// Provider backed by a fixture file: one JSON object per line with
//   {text, sentence_vector, dim, provider_version, token_list?, token_vectors?}
// Only fixture texts are served; anything else throws UnknownTextError.
class FixtureEmbeddingProvider final : public EmbeddingProvider {
public:
    static FixtureEmbeddingProvider load(const std::filesystem::path& path);
    static FixtureEmbeddingProvider parse(std::string_view text);

    TokenEmbeddings token_embed(std::string_view text) const override;
    SentenceEmbedding sentence_embed(std::string_view text) const override;
    std::string version() const override { return version_; }
    bool concurrency_safe() const noexcept override { return true; }

    bool contains(std::string_view text) const { return entries_.count(std::string(text)) > 0; }
    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t dim() const noexcept { return dim_; }

private:
    struct Entry {
        std::vector<double> sentence;
        bool has_tokens = false;
        std::vector<std::string> tokens;
        std::vector<std::vector<double>> token_vectors;
    };
    const Entry& lookup(std::string_view text) const;

    std::unordered_map<std::string, Entry> entries_;
    std::size_t dim_ = 0;
    std::string version_;
};

}  // namespace nuteval::semantic

namespace nuteval {

// Requested text is not present in an embedding fixture.
class UnknownTextError : public Error {
public:
    explicit UnknownTextError(std::string text, std::string_view what = "no embedding for text")
        : Error(std::string(what) + " \"" + text + "\""), text_(std::move(text)) {}
    const std::string& text() const noexcept { return text_; }

private:
    std::string text_;
};

}  // namespace nuteval
