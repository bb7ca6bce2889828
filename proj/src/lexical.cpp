#include "nuteval/lexical.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <unordered_map>

#include "nuteval/error.hpp"

namespace nuteval::lexical {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

std::string fold(std::string_view word) {
    std::string out;
    out.reserve(word.size());
    for (std::size_t i = 0; i < word.size(); ++i) {
        const auto c = static_cast<unsigned char>(word[i]);
        // U+2019 RIGHT SINGLE QUOTATION MARK -> apostrophe
        if (c == 0xE2 && i + 2 < word.size() && static_cast<unsigned char>(word[i + 1]) == 0x80 &&
            static_cast<unsigned char>(word[i + 2]) == 0x99) {
            out.push_back('\'');
            i += 2;
            continue;
        }
        out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
    return out;
}

std::string strip(std::string word) {
    std::size_t begin = 0;
    while (begin < word.size() && is_punct(static_cast<unsigned char>(word[begin]))) ++begin;
    const bool quoted = begin > 0 && word[begin - 1] == '\'';
    std::size_t end = word.size();
    while (end > begin && is_punct(static_cast<unsigned char>(word[end - 1]))) --end;
    // keep one elision apostrophe: "doin'" but not "'quoted'"
    if (!quoted && end < word.size() && word[end] == '\'' && end > begin &&
        std::isalpha(static_cast<unsigned char>(word[end - 1]))) {
        ++end;
    }
    return word.substr(begin, end - begin);
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
    TokenSequence seq;
    seq.source_text = std::string(text);
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
        const std::size_t start = i;
        while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) {
            auto token = strip(fold(text.substr(start, i - start)));
            if (!token.empty()) seq.tokens.push_back(std::move(token));
        }
    }
    return seq;
}

TokenSequence from_tokens(std::vector<std::string> tokens) {
    TokenSequence seq;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) seq.source_text += ' ';
        seq.source_text += tokens[i];
    }
    tokens.erase(std::remove_if(tokens.begin(), tokens.end(), [](const auto& t) { return t.empty(); }),
                 tokens.end());
    seq.tokens = std::move(tokens);
    return seq;
}

// ---------------------------------------------------------------------------
// BLEU

BleuStats& BleuStats::operator+=(const BleuStats& other) noexcept {
    for (int n = 0; n < kMaxOrder; ++n) {
        matches[n] += other.matches[n];
        totals[n] += other.totals[n];
    }
    candidate_length += other.candidate_length;
    reference_length += other.reference_length;
    return *this;
}

namespace {

using NgramCounts = std::unordered_map<std::string, long long>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens, std::size_t n) {
    NgramCounts counts;
    if (tokens.size() < n) return counts;
    std::string key;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        key.clear();
        for (std::size_t k = 0; k < n; ++k) {
            if (k) key.push_back('\x1f');
            key += tokens[i + k];
        }
        ++counts[key];
    }
    return counts;
}

}  // namespace

BleuStats bleu_stats(const TokenSequence& candidate, std::span<const TokenSequence> references) {
    if (references.empty()) throw PreconditionError("bleu4 needs at least one reference");
    BleuStats stats;
    const auto c_len = static_cast<long long>(candidate.size());
    stats.candidate_length = c_len;

    long long best_len = static_cast<long long>(references.front().size());
    for (const auto& ref : references) {
        const auto len = static_cast<long long>(ref.size());
        const auto d = std::llabs(len - c_len), best_d = std::llabs(best_len - c_len);
        if (d < best_d || (d == best_d && len < best_len)) best_len = len;
    }
    stats.reference_length = best_len;

    for (int n = 1; n <= kMaxOrder; ++n) {
        const auto cand = count_ngrams(candidate.tokens, static_cast<std::size_t>(n));
        NgramCounts max_ref;
        for (const auto& ref : references) {
            for (const auto& [g, c] : count_ngrams(ref.tokens, static_cast<std::size_t>(n))) {
                auto& slot = max_ref[g];
                slot = std::max(slot, c);
            }
        }
        long long matched = 0, total = 0;
        for (const auto& [g, c] : cand) {
            total += c;
            if (const auto it = max_ref.find(g); it != max_ref.end()) matched += std::min(c, it->second);
        }
        stats.matches[n - 1] = matched;
        stats.totals[n - 1] = total;
    }
    return stats;
}

BleuScore bleu_from_stats(const BleuStats& stats) {
    BleuScore score;
    score.stats = stats;
    const double c = static_cast<double>(stats.candidate_length);
    const double r = static_cast<double>(stats.reference_length);
    score.brevity_penalty = c > r ? 1.0 : std::min(1.0, std::exp(1.0 - r / std::max(c, 1.0)));
    // exp underflows to 0 for extreme length gaps; keep BP strictly positive
    score.brevity_penalty = std::max(score.brevity_penalty, std::numeric_limits<double>::min());

    if (stats.candidate_length == 0) {
        score.bleu = 0.0;
        return score;
    }

    double log_sum = 0.0;
    for (int n = 0; n < kMaxOrder; ++n) {
        double p;
        if (stats.matches[n] > 0) {
            p = static_cast<double>(stats.matches[n]) / static_cast<double>(stats.totals[n]);
        } else if (n == 0) {
            p = 0.0;
        } else {
            p = 1.0 / (static_cast<double>(stats.totals[n]) + 1.0);
        }
        score.precisions[n] = p;
        if (p == 0.0) {
            score.bleu = 0.0;
            return score;
        }
        log_sum += std::log(p) / kMaxOrder;
    }
    score.bleu = std::clamp(score.brevity_penalty * std::exp(log_sum), 0.0, 1.0);
    return score;
}

BleuScore bleu4(const TokenSequence& candidate, std::span<const TokenSequence> references) {
    return bleu_from_stats(bleu_stats(candidate, references));
}

BleuScore bleu4(const TokenSequence& candidate, const TokenSequence& reference) {
    return bleu4(candidate, std::span<const TokenSequence>(&reference, 1));
}

BleuScore corpus_bleu4(std::span<const BleuStats> segments) {
    BleuStats sum;
    for (const auto& s : segments) sum += s;
    return bleu_from_stats(sum);
}

// ---------------------------------------------------------------------------
// ROUGE-L

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

RougeLScore rouge_l(const TokenSequence& candidate, const TokenSequence& reference, double beta) {
    if (!(beta > 0.0)) throw PreconditionError("rouge_l beta must be positive");
    RougeLScore s;
    s.candidate_length = candidate.size();
    s.reference_length = reference.size();
    if (candidate.empty() || reference.empty()) return s;
    s.lcs = lcs_length(candidate.tokens, reference.tokens);
    if (s.lcs == 0) return s;
    const double l = static_cast<double>(s.lcs);
    s.recall = l / static_cast<double>(s.reference_length);
    s.precision = l / static_cast<double>(s.candidate_length);
    const double b2 = beta * beta;
    s.f = (1.0 + b2) * l /
          (static_cast<double>(s.candidate_length) + b2 * static_cast<double>(s.reference_length));
    return s;
}

// ---------------------------------------------------------------------------
// WER

WerResult wer(const TokenSequence& reference, const TokenSequence& hypothesis) {
    if (reference.empty()) throw PreconditionError("wer needs a non-empty reference");
    const std::size_t n = reference.size(), m = hypothesis.size();
    // dist[i][j]: edits turning reference[0..i) into hypothesis[0..j)
    std::vector<std::size_t> dist((n + 1) * (m + 1));
    auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return dist[i * (m + 1) + j]; };
    for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
    for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t diag = at(i - 1, j - 1) + (reference.tokens[i - 1] == hypothesis.tokens[j - 1] ? 0 : 1);
            at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
        }
    }

    WerResult r;
    r.reference_length = n;
    // Backtrace preferring match/substitution, then deletion, then insertion.
    std::size_t i = n, j = m;
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0) {
            const bool same = reference.tokens[i - 1] == hypothesis.tokens[j - 1];
            if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
                if (!same) ++r.substitutions;
                --i;
                --j;
                continue;
            }
        }
        if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
            ++r.deletions;
            --i;
        } else {
            ++r.insertions;
            --j;
        }
    }
    r.wer = static_cast<double>(r.errors()) / static_cast<double>(n);
    return r;
}

}  // namespace nuteval::lexical
