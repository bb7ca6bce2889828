#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "nuteval/error.hpp"

namespace nuteval {

enum class Continent { NorthAmerica, SouthAmerica, Europe, Asia, Africa, Oceania, Unknown };

std::string_view to_string(Continent c);
// Accepts the enum names, spaced forms ("North America") and "Australia".
std::optional<Continent> parse_continent(std::string_view text);

// One interlocutor question paired with the subject's response.
struct ConversationTurn {
    std::string turn_id;
    std::string dialogue_id;
    std::string subject_id;
    Continent subject_continent = Continent::Unknown;
    std::string question_text;
    std::string response_text;
    std::optional<std::string> video_ref;
    std::optional<double> duration_s;
    nlohmann::json extra = nlohmann::json::object();  // unknown fields, kept verbatim

    bool scorable() const noexcept { return !response_text.empty(); }
};

// Immutable collection of turns with unique ids.
class Corpus {
public:
    Corpus() = default;
    // Throws ValidationError on a duplicate turn_id or a negative duration.
    Corpus(std::string name, std::vector<ConversationTurn> turns);

    const std::string& name() const noexcept { return name_; }
    const std::vector<ConversationTurn>& turns() const noexcept { return turns_; }
    const std::set<std::string>& subjects() const noexcept { return subjects_; }
    std::size_t size() const noexcept { return turns_.size(); }

    const ConversationTurn* find(std::string_view turn_id) const;
    bool contains(std::string_view turn_id) const { return find(turn_id) != nullptr; }

    // Stable content hash over all turns (ids and texts).
    std::string content_hash() const;

private:
    std::string name_;
    std::vector<ConversationTurn> turns_;
    std::set<std::string> subjects_;
    std::unordered_map<std::string, std::size_t> index_;
};

enum class CorpusFormat {
    JsonLines,  // one JSON object per line
    JsonArray,  // a single JSON array of objects
};

struct CorpusLoadOptions {
    CorpusFormat format = CorpusFormat::JsonLines;
    // Malformed records throw instead of being skipped with a diagnostic.
    bool strict = false;
};

struct CorpusLoadResult {
    Corpus corpus;
    Diagnostics diagnostics;
};

// Throws IoError when unreadable, ValidationError on duplicate turn ids (and on
// any malformed record when strict).
CorpusLoadResult load_corpus(const std::filesystem::path& path, const CorpusLoadOptions& options = {});
CorpusLoadResult parse_corpus(std::string_view text, std::string name, const CorpusLoadOptions& options = {});

nlohmann::json turn_to_json(const ConversationTurn& turn);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Evaluation-protocol splits

enum class Protocol { SubjectDependent, SubjectIndependent, CrossScenario, Scalability };

std::string_view to_string(Protocol p);
std::optional<Protocol> parse_protocol(std::string_view text);

// train:test target, e.g. 4:1.
struct Ratio {
    std::uint32_t train = 4;
    std::uint32_t test = 1;

    double value() const noexcept { return static_cast<double>(train) / static_cast<double>(test); }
    double test_fraction() const noexcept {
        return static_cast<double>(test) / static_cast<double>(train + test);
    }
    friend bool operator==(const Ratio&, const Ratio&) = default;
};

std::string to_string(const Ratio& r);
// "4:1"; throws PreconditionError on malformed input or a zero side.
Ratio parse_ratio(std::string_view text);

struct SplitManifest {
    Protocol protocol = Protocol::SubjectDependent;
    std::vector<std::string> train_ids;  // corpus order
    std::vector<std::string> test_ids;
    std::uint64_t seed = 0;
    Ratio ratio;
    // Subject-independent only: whether every continent with >= 2 subjects
    // landed on both sides.
    std::optional<bool> continent_balanced;
    Diagnostics diagnostics;
};

struct SplitOptions {
    Ratio ratio;
    // Subject-dependent: a subject with a single scorable turn is an error
    // instead of a train-only warning.
    bool strict = false;
};

// Random turn-level partition in which every test subject also has a train turn.
SplitManifest make_subject_dependent_split(const Corpus& corpus, std::uint64_t seed,
                                           const SplitOptions& options = {});

// Subject-level partition with disjoint subject sets and per-continent balance.
SplitManifest make_subject_independent_split(const Corpus& corpus, std::uint64_t seed,
                                             const SplitOptions& options = {});

// Dispatches on protocol. CrossScenario and Scalability reuse the
// subject-dependent partition on whichever corpus the caller loaded.
SplitManifest make_split(Protocol protocol, const Corpus& corpus, std::uint64_t seed,
                         const SplitOptions& options = {});

struct ValidationCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;

    bool passed() const noexcept;
    const ValidationCheck* find(std::string_view name) const;
};

// Relative tolerance applied to the train:test ratio check.
inline constexpr double kRatioTolerance = 0.10;

ValidationReport validate_split(const SplitManifest& manifest, const Corpus& corpus);

nlohmann::json split_to_json(const SplitManifest& manifest);
SplitManifest split_from_json(const nlohmann::json& doc);
void save_split(const SplitManifest& manifest, const std::filesystem::path& path);
SplitManifest load_split(const std::filesystem::path& path);

}  // namespace nuteval
