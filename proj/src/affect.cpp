#include "nuteval/affect.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "nuteval/error.hpp"
#include "nuteval/hash.hpp"
#include "nuteval/io.hpp"
#include "nuteval/lexical.hpp"

namespace nuteval::affect {

// ---------------------------------------------------------------------------
// Lemmatizer

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool has_vowel(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) { return is_vowel(c) || c == 'y'; });
}

// consonant-vowel-consonant ending, last letter not w/x/y ("hop", "mak")
bool cvc(std::string_view s) {
    if (s.size() < 3) return false;
    const char a = s[s.size() - 3], b = s[s.size() - 2], c = s[s.size() - 1];
    auto consonant = [](char x) { return std::isalpha(static_cast<unsigned char>(x)) && !is_vowel(x); };
    return consonant(a) && is_vowel(b) && consonant(c) && c != 'w' && c != 'x' && c != 'y';
}

bool doubled_consonant(std::string_view s) {
    if (s.size() < 2) return false;
    const char a = s[s.size() - 2], b = s[s.size() - 1];
    return a == b && !is_vowel(a) && a != 'l' && a != 's' && a != 'z';
}

// Words whose trailing -s is not an inflection.
bool plural_exception(std::string_view s) {
    static constexpr std::string_view words[] = {"news",    "series", "species", "physics", "politics",
                                                 "always",  "perhaps", "towards", "lens",   "chaos",
                                                 "various", "serious", "nervous", "famous",  "anxious"};
    return std::find(std::begin(words), std::end(words), s) != std::end(words);
}

}  // namespace

std::vector<std::string> RuleLemmatizer::lemmas(std::string_view token) const {
    std::vector<std::string> out;
    auto add = [&](std::string candidate) {
        if (!candidate.empty() && candidate != token &&
            std::find(out.begin(), out.end(), candidate) == out.end()) {
            out.push_back(std::move(candidate));
        }
    };
    const std::string_view t = token;
    if (t.size() <= 3) return out;

    auto verb_stem = [&](std::string_view stem) {
        if (!has_vowel(stem)) return;
        if (doubled_consonant(stem)) add(std::string(stem.substr(0, stem.size() - 1)));
        if (cvc(stem)) {
            add(std::string(stem) + "e");
            add(std::string(stem));
        } else {
            add(std::string(stem));
            add(std::string(stem) + "e");
        }
    };

    if (ends_with(t, "ies") && t.size() > 4) {
        add(std::string(t.substr(0, t.size() - 3)) + "y");
    } else if (ends_with(t, "sses")) {
        add(std::string(t.substr(0, t.size() - 2)));
    } else if (ends_with(t, "es") && (ends_with(t, "ches") || ends_with(t, "shes") || ends_with(t, "xes") ||
                                      ends_with(t, "zes") || ends_with(t, "ses"))) {
        add(std::string(t.substr(0, t.size() - 2)));
        add(std::string(t.substr(0, t.size() - 1)));
    } else if (ends_with(t, "s") && !ends_with(t, "ss") && !ends_with(t, "us") && !ends_with(t, "is") &&
               !ends_with(t, "'s") && !plural_exception(t)) {
        add(std::string(t.substr(0, t.size() - 1)));
    }

    if (ends_with(t, "'s")) add(std::string(t.substr(0, t.size() - 2)));

    if (ends_with(t, "ing") && t.size() >= 5) verb_stem(t.substr(0, t.size() - 3));

    if (ends_with(t, "ied") && t.size() > 4) {
        add(std::string(t.substr(0, t.size() - 3)) + "y");
    } else if (ends_with(t, "ed") && t.size() >= 4) {
        verb_stem(t.substr(0, t.size() - 2));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lexicon

VadLexicon::VadLexicon(std::unordered_map<std::string, Vad> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw ValidationError("VAD lexicon is empty");
    bool first = true;
    for (const auto& [term, v] : entries_) {
        for (std::size_t k = 0; k < kDimensions; ++k) {
            if (!std::isfinite(v[k])) throw ValidationError("non-finite score for term '" + term + "'");
            min_[k] = first ? v[k] : std::min(min_[k], v[k]);
            max_[k] = first ? v[k] : std::max(max_[k], v[k]);
        }
        first = false;
    }
    for (std::size_t k = 0; k < kDimensions; ++k) {
        if (!(min_[k] < max_[k])) {
            throw ValidationError("VAD lexicon dimension " + std::to_string(k) + " has no spread (min == max)");
        }
    }

    std::vector<const std::pair<const std::string, Vad>*> sorted;
    sorted.reserve(entries_.size());
    for (const auto& e : entries_) sorted.push_back(&e);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->first < b->first; });
    std::uint64_t h = fnv1a64("vad");
    for (const auto* e : sorted) {
        h = fnv1a64(e->first, h);
        for (double x : e->second) h = fnv1a64(io::format_double(x), fnv1a64("\t", h));
        h = fnv1a64("\n", h);
    }
    id_ = to_hex(h);
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool parse_number(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    const char delim = line.find('\t') != std::string_view::npos ? '\t' : ',';
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    for (;;) {
        const auto end = line.find(delim, pos);
        fields.push_back(trim(line.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos)));
        if (end == std::string_view::npos) break;
        pos = end + 1;
    }
    return fields;
}

}  // namespace

VadLexicon VadLexicon::parse(std::string_view text) {
    std::unordered_map<std::string, Vad> entries;
    bool first_row = true;
    io::for_each_line(text, [&](std::size_t line, std::string_view raw) {
        const bool header_allowed = first_row;
        first_row = false;
        const auto fields = split_fields(raw);
        if (fields.size() < 4) {
            throw ValidationError("VAD lexicon line " + std::to_string(line) + ": expected term and 3 scores, got " +
                                  std::to_string(fields.size()) + " column(s)");
        }
        Vad v{};
        bool numeric = true;
        for (std::size_t k = 0; k < kDimensions; ++k) numeric = numeric && parse_number(fields[k + 1], v[k]);
        if (!numeric) {
            if (header_allowed) return;
            throw ValidationError("VAD lexicon line " + std::to_string(line) + ": scores are not numeric");
        }
        std::string term(fields[0]);
        for (auto& c : term) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (term.empty()) throw ValidationError("VAD lexicon line " + std::to_string(line) + ": empty term");
        if (!entries.emplace(term, v).second) {
            throw ValidationError("VAD lexicon line " + std::to_string(line) + ": duplicate term '" + term + "'");
        }
    });
    return VadLexicon(std::move(entries));
}

VadLexicon VadLexicon::load(const std::filesystem::path& path) { return parse(io::read_file(path)); }

const Vad* VadLexicon::raw(std::string_view term) const {
    const auto it = entries_.find(std::string(term));
    return it == entries_.end() ? nullptr : &it->second;
}

std::optional<Vad> VadLexicon::normalized(std::string_view term) const {
    const auto* v = raw(term);
    if (!v) return std::nullopt;
    Vad out{};
    for (std::size_t k = 0; k < kDimensions; ++k) out[k] = ((*v)[k] - min_[k]) / (max_[k] - min_[k]);
    return out;
}

// ---------------------------------------------------------------------------
// Profiles and scores

AffectProfile affect_profile(std::string_view text, const VadLexicon& lexicon, const Lemmatizer& lemmatizer) {
    AffectProfile p;
    p.lexicon_id = lexicon.id();
    const auto tokens = lexical::tokenize(text);
    p.token_count = tokens.size();
    Vad sum{};
    for (const auto& token : tokens.tokens) {
        std::optional<Vad> hit;
        for (const auto& lemma : lemmatizer.lemmas(token)) {
            if ((hit = lexicon.normalized(lemma))) break;
        }
        if (!hit) hit = lexicon.normalized(token);
        if (!hit) continue;
        ++p.matched_count;
        for (std::size_t k = 0; k < kDimensions; ++k) sum[k] += (*hit)[k];
    }
    if (p.matched_count > 0) {
        Vad means{};
        for (std::size_t k = 0; k < kDimensions; ++k) means[k] = sum[k] / static_cast<double>(p.matched_count);
        p.means = means;
    }
    p.coverage = p.token_count == 0 ? 0.0 : static_cast<double>(p.matched_count) / static_cast<double>(p.token_count);
    return p;
}

namespace {

void require_same_lexicon(const AffectProfile& a, const AffectProfile& b) {
    if (a.lexicon_id != b.lexicon_id) {
        throw PreconditionError("affect profiles built from different lexicons (" + a.lexicon_id + " vs " +
                                b.lexicon_id + ")");
    }
}

double mean_or_zero(const AffectProfile& p, std::size_t k) { return p.means ? (*p.means)[k] : 0.0; }

}  // namespace

double emotion_consistency(const AffectProfile& reference, const AffectProfile& candidate, double beta) {
    require_same_lexicon(reference, candidate);
    double diff = 0.0;
    for (std::size_t k = 0; k < kDimensions; ++k) {
        diff += std::abs(mean_or_zero(reference, k) - mean_or_zero(candidate, k));
    }
    return 1.0 - diff / 4.0 - beta * std::abs(reference.coverage - candidate.coverage);
}

double dimension_consistency(const AffectProfile& reference, const AffectProfile& candidate, Dimension k,
                             double beta) {
    require_same_lexicon(reference, candidate);
    return 1.0 - std::abs(mean_or_zero(reference, k) - mean_or_zero(candidate, k)) -
           beta * std::abs(reference.coverage - candidate.coverage);
}

ValenceArousal valence_arousal_scores(std::string_view reference_text, std::string_view candidate_text,
                                      const VadLexicon& lexicon, double beta, const Lemmatizer& lemmatizer) {
    const auto ref = affect_profile(reference_text, lexicon, lemmatizer);
    const auto cand = affect_profile(candidate_text, lexicon, lemmatizer);
    return {dimension_consistency(ref, cand, Valence, beta), dimension_consistency(ref, cand, Arousal, beta)};
}

}  // namespace nuteval::affect
