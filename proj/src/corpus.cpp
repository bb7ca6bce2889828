#include "nuteval/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

#include "nuteval/hash.hpp"
#include "nuteval/io.hpp"
#include "nuteval/random.hpp"

namespace nuteval {

using nlohmann::json;

namespace {

std::string normalize_key(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    return out;
}

}  // namespace

std::string_view to_string(Continent c) {
    switch (c) {
        case Continent::NorthAmerica: return "NorthAmerica";
        case Continent::SouthAmerica: return "SouthAmerica";
        case Continent::Europe: return "Europe";
        case Continent::Asia: return "Asia";
        case Continent::Africa: return "Africa";
        case Continent::Oceania: return "Oceania";
        case Continent::Unknown: return "Unknown";
    }
    return "Unknown";
}

std::optional<Continent> parse_continent(std::string_view text) {
    const auto key = normalize_key(text);
    if (key == "northamerica") return Continent::NorthAmerica;
    if (key == "southamerica") return Continent::SouthAmerica;
    if (key == "europe") return Continent::Europe;
    if (key == "asia") return Continent::Asia;
    if (key == "africa") return Continent::Africa;
    if (key == "oceania" || key == "australia") return Continent::Oceania;
    if (key == "unknown" || key.empty()) return Continent::Unknown;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Corpus

Corpus::Corpus(std::string name, std::vector<ConversationTurn> turns)
    : name_(std::move(name)), turns_(std::move(turns)) {
    index_.reserve(turns_.size());
    for (std::size_t i = 0; i < turns_.size(); ++i) {
        const auto& t = turns_[i];
        if (!index_.emplace(t.turn_id, i).second) {
            throw ValidationError("duplicate turn_id '" + t.turn_id + "'");
        }
        if (t.duration_s && !(*t.duration_s >= 0.0)) {
            throw ValidationError("turn '" + t.turn_id + "': duration_s must be >= 0");
        }
        subjects_.insert(t.subject_id);
    }
}

const ConversationTurn* Corpus::find(std::string_view turn_id) const {
    const auto it = index_.find(std::string(turn_id));
    return it == index_.end() ? nullptr : &turns_[it->second];
}

std::string Corpus::content_hash() const {
    std::uint64_t h = fnv1a64("corpus");
    for (const auto& t : turns_) {
        for (std::string_view field : {std::string_view(t.turn_id), std::string_view(t.subject_id),
                                       std::string_view(t.question_text),
                                       std::string_view(t.response_text)}) {
            h = fnv1a64(field, h);
            h = fnv1a64("\x1f", h);
        }
    }
    return to_hex(h);
}

// ---------------------------------------------------------------------------
// Loading

namespace {

const char* const kRequiredFields[] = {"turn_id", "dialogue_id", "subject_id", "question_text",
                                       "response_text"};

// Returns an error message, or empty on success.
std::string parse_turn(const json& obj, ConversationTurn& turn, Diagnostics& warnings,
                       std::optional<std::size_t> line) {
    if (!obj.is_object()) return "record is not an object";
    for (const char* field : kRequiredFields) {
        const auto it = obj.find(field);
        if (it == obj.end()) return std::string("missing required field '") + field + "'";
        if (!it->is_string()) return std::string("field '") + field + "' must be a string";
    }
    turn.turn_id = obj["turn_id"].get<std::string>();
    turn.dialogue_id = obj["dialogue_id"].get<std::string>();
    turn.subject_id = obj["subject_id"].get<std::string>();
    turn.question_text = obj["question_text"].get<std::string>();
    turn.response_text = obj["response_text"].get<std::string>();
    if (turn.turn_id.empty()) return "turn_id is empty";

    if (const auto it = obj.find("subject_continent"); it != obj.end() && !it->is_null()) {
        if (!it->is_string()) return "field 'subject_continent' must be a string";
        const auto c = parse_continent(it->get<std::string>());
        if (!c) {
            warnings.push_back({Severity::Warning,
                                "turn '" + turn.turn_id + "': unknown continent '" +
                                    it->get<std::string>() + "', using Unknown",
                                line});
        }
        turn.subject_continent = c.value_or(Continent::Unknown);
    }
    if (const auto it = obj.find("video_ref"); it != obj.end() && !it->is_null()) {
        if (!it->is_string()) return "field 'video_ref' must be a string";
        turn.video_ref = it->get<std::string>();
    }
    if (const auto it = obj.find("duration_s"); it != obj.end() && !it->is_null()) {
        if (!it->is_number()) return "field 'duration_s' must be a number";
        const double d = it->get<double>();
        if (!(d >= 0.0) || !std::isfinite(d)) return "field 'duration_s' must be a finite value >= 0";
        turn.duration_s = d;
    }
    for (const auto& [key, value] : obj.items()) {
        static const char* const known[] = {"turn_id",       "dialogue_id",   "subject_id",
                                            "question_text", "response_text", "subject_continent",
                                            "video_ref",     "duration_s"};
        if (std::find_if(std::begin(known), std::end(known),
                         [&](const char* k) { return key == k; }) == std::end(known)) {
            turn.extra[key] = value;
        }
    }
    return {};
}

}  // namespace

CorpusLoadResult parse_corpus(std::string_view text, std::string name, const CorpusLoadOptions& options) {
    std::vector<ConversationTurn> turns;
    Diagnostics diags;
    std::unordered_map<std::string, std::optional<std::size_t>> seen;

    auto accept = [&](const json& obj, std::optional<std::size_t> line) {
        ConversationTurn turn;
        const auto err = parse_turn(obj, turn, diags, line);
        if (!err.empty()) {
            const auto where = line ? "line " + std::to_string(*line) + ": " : std::string();
            if (options.strict) throw ValidationError(where + err);
            diags.push_back({Severity::Error, err + " (record skipped)", line});
            return;
        }
        if (const auto it = seen.find(turn.turn_id); it != seen.end()) {
            std::string msg = "duplicate turn_id '" + turn.turn_id + "'";
            if (line) msg += " at line " + std::to_string(*line);
            if (it->second) msg += " (first seen at line " + std::to_string(*it->second) + ")";
            throw ValidationError(msg);
        }
        seen.emplace(turn.turn_id, line);
        turns.push_back(std::move(turn));
    };

    if (options.format == CorpusFormat::JsonLines) {
        io::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
            json obj;
            try {
                obj = json::parse(line);
            } catch (const json::parse_error& e) {
                if (options.strict) {
                    throw ValidationError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
                }
                diags.push_back({Severity::Error, "invalid JSON (record skipped)", line_no});
                return;
            }
            accept(obj, line_no);
        });
    } else {
        bool blank = std::all_of(text.begin(), text.end(),
                                 [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
        if (!blank) {
            json doc;
            try {
                doc = json::parse(text);
            } catch (const json::parse_error& e) {
                throw ValidationError(std::string("invalid JSON document: ") + e.what());
            }
            if (!doc.is_array()) throw ValidationError("corpus document must be a JSON array");
            for (const auto& obj : doc) accept(obj, std::nullopt);
        }
    }

    if (turns.empty()) diags.push_back({Severity::Warning, "corpus contains no turns", std::nullopt});
    return {Corpus(std::move(name), std::move(turns)), std::move(diags)};
}

CorpusLoadResult load_corpus(const std::filesystem::path& path, const CorpusLoadOptions& options) {
    const auto text = io::read_file(path);
    return parse_corpus(text, path.stem().string(), options);
}

json turn_to_json(const ConversationTurn& t) {
    json obj = t.extra.is_object() ? t.extra : json::object();
    obj["turn_id"] = t.turn_id;
    obj["dialogue_id"] = t.dialogue_id;
    obj["subject_id"] = t.subject_id;
    obj["subject_continent"] = std::string(to_string(t.subject_continent));
    obj["question_text"] = t.question_text;
    obj["response_text"] = t.response_text;
    if (t.video_ref) obj["video_ref"] = *t.video_ref;
    if (t.duration_s) obj["duration_s"] = *t.duration_s;
    return obj;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::string out;
    for (const auto& t : corpus.turns()) {
        out += turn_to_json(t).dump();
        out += '\n';
    }
    io::write_file(path, out);
}

// ---------------------------------------------------------------------------
// Protocol / ratio

std::string_view to_string(Protocol p) {
    switch (p) {
        case Protocol::SubjectDependent: return "subject-dependent";
        case Protocol::SubjectIndependent: return "subject-independent";
        case Protocol::CrossScenario: return "cross-scenario";
        case Protocol::Scalability: return "scalability";
    }
    return "subject-dependent";
}

std::optional<Protocol> parse_protocol(std::string_view text) {
    const auto key = normalize_key(text);
    if (key == "subjectdependent") return Protocol::SubjectDependent;
    if (key == "subjectindependent") return Protocol::SubjectIndependent;
    if (key == "crossscenario") return Protocol::CrossScenario;
    if (key == "scalability") return Protocol::Scalability;
    return std::nullopt;
}

std::string to_string(const Ratio& r) { return std::to_string(r.train) + ":" + std::to_string(r.test); }

Ratio parse_ratio(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw PreconditionError("ratio must look like '4:1'");
    auto parse_part = [&](std::string_view part) {
        std::uint32_t v = 0;
        const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (ec != std::errc() || ptr != part.data() + part.size() || v == 0) {
            throw PreconditionError("invalid ratio '" + std::string(text) + "'");
        }
        return v;
    };
    return Ratio{parse_part(text.substr(0, colon)), parse_part(text.substr(colon + 1))};
}

// ---------------------------------------------------------------------------
// Splits

namespace {

struct SubjectTurns {
    std::string subject_id;
    Continent continent = Continent::Unknown;
    std::vector<std::size_t> turns;  // indices into corpus.turns()
};

// Scorable turns grouped by subject, subjects ordered by id.
std::vector<SubjectTurns> group_by_subject(const Corpus& corpus, Diagnostics& diags) {
    std::map<std::string, SubjectTurns> groups;
    std::size_t unscorable = 0;
    const auto& turns = corpus.turns();
    for (std::size_t i = 0; i < turns.size(); ++i) {
        if (!turns[i].scorable()) {
            ++unscorable;
            continue;
        }
        auto& g = groups[turns[i].subject_id];
        if (g.turns.empty()) {
            g.subject_id = turns[i].subject_id;
            g.continent = turns[i].subject_continent;
        }
        g.turns.push_back(i);
    }
    if (unscorable > 0) {
        diags.push_back({Severity::Warning,
                         std::to_string(unscorable) + " turn(s) with empty response_text left out of the split",
                         std::nullopt});
    }
    std::vector<SubjectTurns> out;
    out.reserve(groups.size());
    for (auto& [id, g] : groups) out.push_back(std::move(g));
    return out;
}

void emit_ids(const Corpus& corpus, const std::vector<int>& side, SplitManifest& m) {
    const auto& turns = corpus.turns();
    for (std::size_t i = 0; i < turns.size(); ++i) {
        if (side[i] == 0) m.train_ids.push_back(turns[i].turn_id);
        if (side[i] == 1) m.test_ids.push_back(turns[i].turn_id);
    }
}

}  // namespace

SplitManifest make_subject_dependent_split(const Corpus& corpus, std::uint64_t seed,
                                           const SplitOptions& options) {
    SplitManifest m;
    m.protocol = Protocol::SubjectDependent;
    m.seed = seed;
    m.ratio = options.ratio;

    const auto groups = group_by_subject(corpus, m.diagnostics);
    const Rng root = Rng(seed).split("subject-dependent");

    // -1 = not part of the split, 0 = train, 1 = test.
    std::vector<int> side(corpus.size(), -1);
    std::vector<std::size_t> pool;
    std::size_t scorable = 0;
    for (const auto& g : groups) {
        scorable += g.turns.size();
        if (g.turns.size() == 1) {
            if (options.strict) {
                throw ValidationError("subject '" + g.subject_id +
                                      "' has a single turn and cannot appear in both train and test");
            }
            m.diagnostics.push_back({Severity::Warning,
                                     "subject '" + g.subject_id + "' has a single turn; assigned to train",
                                     std::nullopt});
            side[g.turns.front()] = 0;
            continue;
        }
        auto order = g.turns;
        root.split(g.subject_id).shuffle(order);
        side[order.front()] = 0;  // anchor keeps the subject present in train
        pool.insert(pool.end(), order.begin() + 1, order.end());
    }
    if (scorable == 0) throw PreconditionError("corpus has no scorable turns");

    auto target = static_cast<std::size_t>(std::llround(static_cast<double>(scorable) * options.ratio.test_fraction()));
    if (target > pool.size()) {
        m.diagnostics.push_back({Severity::Warning,
                                 "only " + std::to_string(pool.size()) + " turn(s) eligible for test; wanted " +
                                     std::to_string(target),
                                 std::nullopt});
        target = pool.size();
    }
    std::sort(pool.begin(), pool.end());
    auto pool_rng = root.split("pool");
    pool_rng.shuffle(pool);
    for (std::size_t i = 0; i < pool.size(); ++i) side[pool[i]] = i < target ? 1 : 0;

    emit_ids(corpus, side, m);
    return m;
}

namespace {

struct SubjectState {
    const SubjectTurns* group = nullptr;
    long long turns = 0;
    int side = -1;  // 0 train, 1 test
};

class IndependentPartitioner {
public:
    IndependentPartitioner(std::vector<SubjectState> subjects, double target_test)
        : subjects_(std::move(subjects)), target_(target_test) {
        for (std::size_t i = 0; i < subjects_.size(); ++i) {
            by_continent_[subjects_[i].group->continent].push_back(i);
        }
    }

    std::map<Continent, std::vector<std::size_t>>& continents() { return by_continent_; }
    std::vector<SubjectState>& subjects() { return subjects_; }

    void assign(std::size_t i, int side) {
        auto& s = subjects_[i];
        if (s.side == 1) test_turns_ -= s.turns;
        s.side = side;
        if (side == 1) test_turns_ += s.turns;
    }

    double gap(long long test_turns) const { return std::abs(static_cast<double>(test_turns) - target_); }
    long long test_turns() const { return test_turns_; }

    // Constraints preserved by the improvement pass: both sides non-empty and
    // every balanced continent keeps a subject on each side.
    bool feasible() const {
        std::size_t n_test = 0;
        for (const auto& s : subjects_) n_test += s.side == 1;
        if (n_test == 0 || n_test == subjects_.size()) return false;
        for (const auto& [c, members] : by_continent_) {
            if (c == Continent::Unknown || members.size() < 2) continue;
            bool train = false, test = false;
            for (auto i : members) (subjects_[i].side == 1 ? test : train) = true;
            if (!train || !test) return false;
        }
        return true;
    }

    // Single moves and pairwise swaps that strictly shrink the distance to the
    // target test-turn count, best first, until no move helps.
    void improve() {
        const std::size_t n = subjects_.size();
        for (;;) {
            const double current = gap(test_turns_);
            double best = current - 1e-9;
            std::size_t best_a = n, best_b = n;
            for (std::size_t a = 0; a < n; ++a) {
                const long long delta = subjects_[a].side == 1 ? -subjects_[a].turns : subjects_[a].turns;
                if (gap(test_turns_ + delta) < best && try_flip(a, n)) {
                    best = gap(test_turns_ + delta);
                    best_a = a;
                    best_b = n;
                }
            }
            for (std::size_t a = 0; a < n; ++a) {
                if (subjects_[a].side != 0) continue;
                for (std::size_t b = 0; b < n; ++b) {
                    if (subjects_[b].side != 1) continue;
                    const long long after = test_turns_ + subjects_[a].turns - subjects_[b].turns;
                    if (gap(after) < best && try_flip(a, b)) {
                        best = gap(after);
                        best_a = a;
                        best_b = b;
                    }
                }
            }
            if (best_a == n) return;
            flip(best_a);
            if (best_b != n) flip(best_b);
        }
    }

private:
    void flip(std::size_t i) { assign(i, 1 - subjects_[i].side); }

    bool try_flip(std::size_t a, std::size_t b) {
        flip(a);
        if (b < subjects_.size()) flip(b);
        const bool ok = feasible();
        if (b < subjects_.size()) flip(b);
        flip(a);
        return ok;
    }

    std::vector<SubjectState> subjects_;
    std::map<Continent, std::vector<std::size_t>> by_continent_;
    double target_;
    long long test_turns_ = 0;
};

}  // namespace

SplitManifest make_subject_independent_split(const Corpus& corpus, std::uint64_t seed,
                                             const SplitOptions& options) {
    SplitManifest m;
    m.protocol = Protocol::SubjectIndependent;
    m.seed = seed;
    m.ratio = options.ratio;

    const auto groups = group_by_subject(corpus, m.diagnostics);
    if (groups.size() < 2) {
        throw PreconditionError("subject-independent split needs at least 2 subjects with scorable turns");
    }
    const Rng root = Rng(seed).split("subject-independent");

    long long total = 0;
    std::vector<SubjectState> states;
    for (const auto& g : groups) {
        states.push_back({&g, static_cast<long long>(g.turns.size()), 0});
        total += static_cast<long long>(g.turns.size());
    }
    IndependentPartitioner part(std::move(states), static_cast<double>(total) * options.ratio.test_fraction());
    auto& subjects = part.subjects();

    // Within a continent: largest turn count first, seeded order among equals.
    std::vector<std::vector<std::size_t>> queues;
    for (auto& [continent, members] : part.continents()) {
        auto order = members;
        root.split(to_string(continent)).shuffle(order);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return subjects[a].turns > subjects[b].turns; });
        members = order;
        queues.push_back(order);
    }
    for (auto& s : subjects) s.side = -1;

    // Every continent with >= 2 subjects starts with its largest subject in
    // train and its smallest in test.
    for (const auto& [continent, members] : part.continents()) {
        if (continent == Continent::Unknown || members.size() < 2) continue;
        part.assign(members.front(), 0);
        part.assign(members.back(), 1);
    }

    // Round-robin over continents in seeded order; each takes its next
    // largest unassigned subject and sends it to test when that moves the
    // test-turn count toward the target.
    auto rr_rng = root.split("round-robin");
    rr_rng.shuffle(queues);
    std::vector<std::size_t> cursor(queues.size(), 0);
    for (bool progressed = true; progressed;) {
        progressed = false;
        for (std::size_t q = 0; q < queues.size(); ++q) {
            auto& cur = cursor[q];
            while (cur < queues[q].size() && subjects[queues[q][cur]].side != -1) ++cur;
            if (cur == queues[q].size()) continue;
            const auto i = queues[q][cur++];
            const long long with = part.test_turns() + subjects[i].turns;
            part.assign(i, part.gap(with) < part.gap(part.test_turns()) ? 1 : 0);
            progressed = true;
        }
    }

    // Both sides need at least one subject.
    auto smallest_on = [&](int side) {
        std::size_t best = subjects.size();
        for (std::size_t i = 0; i < subjects.size(); ++i) {
            if (subjects[i].side == side && (best == subjects.size() || subjects[i].turns < subjects[best].turns)) {
                best = i;
            }
        }
        return best;
    };
    if (part.test_turns() == 0) part.assign(smallest_on(0), 1);
    if (part.test_turns() == total) part.assign(smallest_on(1), 0);

    part.improve();

    bool balanced = true;
    for (const auto& [continent, members] : part.continents()) {
        if (continent == Continent::Unknown || members.size() < 2) continue;
        bool train = false, test = false;
        for (auto i : members) (subjects[i].side == 1 ? test : train) = true;
        if (!train || !test) {
            balanced = false;
            m.diagnostics.push_back({Severity::Warning,
                                     "continent " + std::string(to_string(continent)) +
                                         " is not represented on both sides",
                                     std::nullopt});
        }
    }
    m.continent_balanced = balanced;

    std::vector<int> side(corpus.size(), -1);
    for (const auto& s : subjects) {
        for (auto t : s.group->turns) side[t] = s.side;
    }
    emit_ids(corpus, side, m);
    return m;
}

SplitManifest make_split(Protocol protocol, const Corpus& corpus, std::uint64_t seed,
                         const SplitOptions& options) {
    if (protocol == Protocol::SubjectIndependent) return make_subject_independent_split(corpus, seed, options);
    auto m = make_subject_dependent_split(corpus, seed, options);
    m.protocol = protocol;
    return m;
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::passed() const noexcept {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(std::string_view name) const {
    for (const auto& c : checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

ValidationReport validate_split(const SplitManifest& m, const Corpus& corpus) {
    ValidationReport report;
    auto add = [&](std::string name, bool ok, std::string detail) {
        report.checks.push_back({std::move(name), ok, std::move(detail)});
    };

    // known ids, no duplicates within a side
    {
        std::size_t unknown = 0, dupes = 0;
        std::string first_unknown;
        for (const auto* ids : {&m.train_ids, &m.test_ids}) {
            std::set<std::string_view> seen;
            for (const auto& id : *ids) {
                if (!seen.insert(id).second) ++dupes;
                if (!corpus.contains(id)) {
                    if (unknown++ == 0) first_unknown = id;
                }
            }
        }
        std::string detail = std::to_string(unknown) + " unknown id(s), " + std::to_string(dupes) + " duplicate(s)";
        if (unknown > 0) detail += "; first unknown '" + first_unknown + "'";
        add("known_ids", unknown == 0 && dupes == 0, detail);
    }

    const std::set<std::string_view> train(m.train_ids.begin(), m.train_ids.end());
    const std::set<std::string_view> test(m.test_ids.begin(), m.test_ids.end());

    {
        std::size_t shared = 0;
        for (auto id : test) shared += train.count(id);
        add("disjoint", shared == 0, std::to_string(shared) + " turn id(s) on both sides");
    }

    {
        std::size_t missing = 0, unscorable = 0;
        for (const auto& t : corpus.turns()) {
            const bool listed = train.count(t.turn_id) || test.count(t.turn_id);
            if (t.scorable() && !listed) ++missing;
            if (!t.scorable() && listed) ++unscorable;
        }
        add("coverage", missing == 0 && unscorable == 0,
            std::to_string(missing) + " scorable turn(s) unassigned, " + std::to_string(unscorable) +
                " unscorable turn(s) assigned");
    }

    add("nonempty", !m.train_ids.empty() && !m.test_ids.empty(),
        std::to_string(m.train_ids.size()) + " train / " + std::to_string(m.test_ids.size()) + " test");

    {
        const double target = m.ratio.value();
        bool ok = false;
        std::string detail;
        if (m.test_ids.empty()) {
            detail = "no test turns";
        } else {
            const double actual = static_cast<double>(m.train_ids.size()) / static_cast<double>(m.test_ids.size());
            ok = std::abs(actual / target - 1.0) <= kRatioTolerance + 1e-12;
            detail = "train/test = " + io::format_double(actual) + ", target " + to_string(m.ratio) + " (+/-" +
                     std::to_string(static_cast<int>(kRatioTolerance * 100)) + "%)";
        }
        add("ratio", ok, detail);
    }

    auto subjects_of = [&](const std::vector<std::string>& ids) {
        std::set<std::string> out;
        for (const auto& id : ids) {
            if (const auto* t = corpus.find(id)) out.insert(t->subject_id);
        }
        return out;
    };

    if (m.protocol == Protocol::SubjectDependent) {
        const auto train_subjects = subjects_of(m.train_ids);
        std::size_t orphans = 0;
        std::string first;
        for (const auto& s : subjects_of(m.test_ids)) {
            if (!train_subjects.count(s) && orphans++ == 0) first = s;
        }
        add("test_subjects_in_train", orphans == 0,
            std::to_string(orphans) + " test subject(s) without a train turn" +
                (orphans ? "; first '" + first + "'" : std::string()));
    }

    if (m.protocol == Protocol::SubjectIndependent) {
        const auto train_subjects = subjects_of(m.train_ids);
        const auto test_subjects = subjects_of(m.test_ids);
        std::size_t shared = 0;
        std::string first;
        for (const auto& s : test_subjects) {
            if (train_subjects.count(s) && shared++ == 0) first = s;
        }
        add("subject_disjoint", shared == 0,
            std::to_string(shared) + " subject(s) on both sides" + (shared ? "; first '" + first + "'" : std::string()));

        // continent -> subject sets
        std::map<Continent, std::set<std::string>> all, on_train, on_test;
        for (const auto& t : corpus.turns()) {
            if (t.scorable()) all[t.subject_continent].insert(t.subject_id);
        }
        for (const auto& id : m.train_ids) {
            if (const auto* t = corpus.find(id)) on_train[t->subject_continent].insert(t->subject_id);
        }
        for (const auto& id : m.test_ids) {
            if (const auto* t = corpus.find(id)) on_test[t->subject_continent].insert(t->subject_id);
        }
        std::string missing;
        for (const auto& [c, members] : all) {
            if (c == Continent::Unknown || members.size() < 2) continue;
            if (on_train[c].empty() || on_test[c].empty()) {
                if (!missing.empty()) missing += ", ";
                missing += to_string(c);
            }
        }
        add("continent_balance", missing.empty(),
            missing.empty() ? "every continent with >= 2 subjects on both sides" : "unbalanced: " + missing);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Manifest serialization

json split_to_json(const SplitManifest& m) {
    json doc;
    doc["protocol"] = std::string(to_string(m.protocol));
    doc["seed"] = m.seed;
    doc["ratio"] = to_string(m.ratio);
    doc["train_ids"] = m.train_ids;
    doc["test_ids"] = m.test_ids;
    if (m.continent_balanced) doc["continent_balanced"] = *m.continent_balanced;
    if (!m.diagnostics.empty()) {
        json notes = json::array();
        for (const auto& d : m.diagnostics) notes.push_back(to_string(d));
        doc["notes"] = notes;
    }
    return doc;
}

SplitManifest split_from_json(const json& doc) {
    try {
        SplitManifest m;
        const auto protocol = parse_protocol(doc.at("protocol").get<std::string>());
        if (!protocol) throw ValidationError("unknown protocol '" + doc.at("protocol").get<std::string>() + "'");
        m.protocol = *protocol;
        m.seed = doc.value("seed", std::uint64_t{0});
        m.ratio = parse_ratio(doc.value("ratio", std::string("4:1")));
        m.train_ids = doc.at("train_ids").get<std::vector<std::string>>();
        m.test_ids = doc.at("test_ids").get<std::vector<std::string>>();
        if (const auto it = doc.find("continent_balanced"); it != doc.end() && it->is_boolean()) {
            m.continent_balanced = it->get<bool>();
        }
        return m;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed split manifest: ") + e.what());
    } catch (const PreconditionError& e) {
        throw ValidationError(std::string("malformed split manifest: ") + e.what());
    }
}

void save_split(const SplitManifest& m, const std::filesystem::path& path) {
    io::write_file(path, split_to_json(m).dump(2) + "\n");
}

SplitManifest load_split(const std::filesystem::path& path) { return split_from_json(io::read_json(path)); }

}  // namespace nuteval
