#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nuteval::affect {

enum Dimension : std::size_t { Valence = 0, Arousal = 1, Dominance = 2 };
inline constexpr std::size_t kDimensions = 3;

using Vad = std::array<double, kDimensions>;

// Default coverage-disparity penalty weight.
inline constexpr double kDefaultBeta = 0.8;

// Maps a surface token to candidate lemmas, most likely first.
class Lemmatizer {
public:
    virtual ~Lemmatizer() = default;
    virtual std::vector<std::string> lemmas(std::string_view token) const = 0;
};

// Suffix rules for English plurals, -ing and -ed forms. Produces a small
// candidate set (e.g. "making" -> make, mak) and lets the lexicon decide.
class RuleLemmatizer final : public Lemmatizer {
public:
    std::vector<std::string> lemmas(std::string_view token) const override;
};

// Term -> raw (valence, arousal, dominance) with per-dimension min-max
// normalization computed over the whole lexicon.
class VadLexicon {
public:
    // Throws ValidationError when empty or when a dimension has min == max.
    explicit VadLexicon(std::unordered_map<std::string, Vad> entries);

    // Tab- or comma-separated rows of term, V, A, D; an optional header line.
    static VadLexicon load(const std::filesystem::path& path);
    static VadLexicon parse(std::string_view text);

    std::size_t size() const noexcept { return entries_.size(); }
    const Vad& min() const noexcept { return min_; }
    const Vad& max() const noexcept { return max_; }
    const std::string& id() const noexcept { return id_; }

    const Vad* raw(std::string_view term) const;
    // Min-max scaled scores in [0, 1].
    std::optional<Vad> normalized(std::string_view term) const;

private:
    std::unordered_map<std::string, Vad> entries_;
    Vad min_{}, max_{};
    std::string id_;
};

struct AffectProfile {
    std::optional<Vad> means;  // present iff matched_count > 0
    double coverage = 0.0;     // matched_count / token_count, 0 for empty text
    std::size_t matched_count = 0;
    std::size_t token_count = 0;
    std::string lexicon_id;
};

// Tokenizes with the shared lexical tokenizer, then looks each token up via
// its lemma candidates followed by the surface form.
AffectProfile affect_profile(std::string_view text, const VadLexicon& lexicon,
                             const Lemmatizer& lemmatizer = RuleLemmatizer{});

// S = 1 - 1/4 * sum_{V,A,D} |mean_R - mean_C| - beta * |cov_R - cov_C|.
// An absent mean counts as 0. Throws PreconditionError when the profiles
// came from different lexicons.
double emotion_consistency(const AffectProfile& reference, const AffectProfile& candidate,
                           double beta = kDefaultBeta);

// Single-dimension analogue: 1 - |mean_R,k - mean_C,k| - beta * |cov_R - cov_C|.
double dimension_consistency(const AffectProfile& reference, const AffectProfile& candidate, Dimension k,
                             double beta = kDefaultBeta);

struct ValenceArousal {
    double valence = 0.0;
    double arousal = 0.0;
};

ValenceArousal valence_arousal_scores(std::string_view reference_text, std::string_view candidate_text,
                                      const VadLexicon& lexicon, double beta = kDefaultBeta,
                                      const Lemmatizer& lemmatizer = RuleLemmatizer{});

}  // namespace nuteval::affect
