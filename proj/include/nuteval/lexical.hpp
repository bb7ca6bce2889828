#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nuteval::lexical {

// Bumped whenever tokenize() changes behaviour; recorded in run configs.
inline constexpr std::string_view kTokenizerVersion = "ws-lower-punct/1";

struct TokenSequence {
    std::vector<std::string> tokens;
    std::string source_text;

    std::size_t size() const noexcept { return tokens.size(); }
    bool empty() const noexcept { return tokens.empty(); }
};

// Lowercases ASCII letters, splits on whitespace and strips punctuation from
// both ends of each token. Interior apostrophes and hyphens survive, as does a
// trailing elision apostrophe ("doin'") unless the token also opened with a
// quote. U+2019 is folded to '\''. Tokens left empty are dropped.
TokenSequence tokenize(std::string_view text);

// Wraps pre-split tokens without re-tokenizing.
TokenSequence from_tokens(std::vector<std::string> tokens);

inline constexpr int kMaxOrder = 4;

// Clipped n-gram statistics of one candidate against its references.
struct BleuStats {
    std::array<long long, kMaxOrder> matches{};  // clipped counts
    std::array<long long, kMaxOrder> totals{};   // candidate n-gram counts
    long long candidate_length = 0;
    long long reference_length = 0;  // closest reference length r*

    BleuStats& operator+=(const BleuStats& other) noexcept;
};

struct BleuScore {
    double bleu = 0.0;                         // in [0, 1]
    std::array<double, kMaxOrder> precisions{};  // smoothed p_1..p_4
    double brevity_penalty = 1.0;              // in (0, 1]
    BleuStats stats;
};

// Closest-length reference is r*; ties go to the shorter reference.
BleuStats bleu_stats(const TokenSequence& candidate, std::span<const TokenSequence> references);

// BP * exp(sum 1/4 log p_n). For n >= 2 a zero clipped count is smoothed to
// (0 + 1) / (total + 1); p_1 is never smoothed, so no unigram overlap scores 0.
// An empty candidate scores 0 with BP = min(1, exp(1 - r*/max(|C|, 1))).
BleuScore bleu_from_stats(const BleuStats& stats);

// Sentence-level BLEU-4. Throws PreconditionError when references is empty.
BleuScore bleu4(const TokenSequence& candidate, std::span<const TokenSequence> references);
BleuScore bleu4(const TokenSequence& candidate, const TokenSequence& reference);

// Corpus-level BLEU-4: statistics are summed over segments before combining.
BleuScore corpus_bleu4(std::span<const BleuStats> segments);

struct RougeLScore {
    std::size_t lcs = 0;
    std::size_t candidate_length = 0;
    std::size_t reference_length = 0;
    double recall = 0.0;     // L / |R|
    double precision = 0.0;  // L / |C|
    double f = 0.0;
};

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

// F = (1 + beta^2) R P / (R + beta^2 P), computed as (1 + beta^2) L / (|C| + beta^2 |R|).
// Zero when either side is empty or L = 0. beta must be positive.
RougeLScore rouge_l(const TokenSequence& candidate, const TokenSequence& reference, double beta = 1.0);

struct WerResult {
    double wer = 0.0;  // (S + D + I) / N, as a fraction; may exceed 1
    std::size_t substitutions = 0;
    std::size_t deletions = 0;
    std::size_t insertions = 0;
    std::size_t reference_length = 0;

    std::size_t errors() const noexcept { return substitutions + deletions + insertions; }
    double percent() const noexcept { return wer * 100.0; }
};

// Unit-cost Levenshtein alignment. Throws PreconditionError on an empty reference.
WerResult wer(const TokenSequence& reference, const TokenSequence& hypothesis);

}  // namespace nuteval::lexical
