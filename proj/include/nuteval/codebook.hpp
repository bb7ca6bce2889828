#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nuteval/clustering.hpp"
#include "nuteval/corpus.hpp"
#include "nuteval/error.hpp"
#include "nuteval/llm.hpp"
#include "nuteval/semantic.hpp"

namespace nuteval::codebook {

// System prompts for the three LLM stages.
namespace prompts {
extern const std::string_view kBasicFactors;
extern const std::string_view kCodebook;
extern const std::string_view kPrimingVector;
}  // namespace prompts

// A concrete factor named by the LLM for one response, with verbatim quotes.
struct BasicFactor {
    std::string label;
    std::vector<std::string> evidence;
    std::string source_turn_id;
    bool evidence_verified = false;  // every quote found in the source response
};

struct PrimingFactor {
    std::string name;
    std::string explanation;
    std::string polarity_schema;  // meaning of the +1 and -1 poles
};

struct CodebookProvenance {
    std::string corpus_hash;
    std::uint64_t seed = 0;
    std::size_t k = 0;
    double tau = 0.0;
    double silhouette = 0.0;
    std::string llm_version;
};

struct PrimingCodebook {
    std::vector<PrimingFactor> factors;
    CodebookProvenance provenance;

    std::size_t k() const noexcept { return factors.size(); }
    // Content hash of the ordered factor list.
    std::string id() const;
};

// Entries in [-1, 1]; one per codebook factor.
struct PrimingVector {
    std::vector<double> values;
    std::string codebook_id;
};

struct ResponseText {
    std::string turn_id;
    std::string text;
};

// N responses covering as many subjects as possible: one per subject first
// (subjects in seeded order), then uniformly from the rest.
std::vector<ResponseText> sample_responses(const Corpus& corpus, std::span<const std::string> eligible_turn_ids,
                                           std::size_t n, std::uint64_t seed, Diagnostics& diagnostics);

struct ExtractionOptions {
    std::size_t max_concurrency = 1;
};

struct ExtractionResult {
    std::vector<BasicFactor> factors;  // response order, then reply order
    std::size_t skipped_responses = 0;
    Diagnostics diagnostics;
};

// Parses a basic-factor reply ({"factor": ["quote", ...], ...}); duplicate
// keys are kept. Returns false when the reply is not such an object.
bool parse_basic_factor_reply(std::string_view reply, std::vector<std::pair<std::string, std::vector<std::string>>>& out);

// One prompt per response. A malformed reply is retried once and then the
// response is skipped; a client error is retried once and then rethrown.
// Throws LlmError when nothing parses at all.
ExtractionResult extract_basic_factors(std::span<const ResponseText> responses, llm::LlmClient& client,
                                       const ExtractionOptions& options = {});

// Sentence embeddings of the factor labels, one row per factor.
PointSet embed_factor_labels(std::span<const BasicFactor> factors, const semantic::EmbeddingProvider& embedder);

struct FactorClustering {
    KMeansResult kmeans;
    std::vector<std::vector<std::size_t>> members;  // factor indices per cluster
};

// Throws PreconditionError when k < 2 or there are fewer factors than k.
FactorClustering cluster_factors(std::span<const BasicFactor> factors, const semantic::EmbeddingProvider& embedder,
                                 std::size_t k, std::uint64_t seed, std::size_t n_init = 4);

DimensionSelection select_codebook_dimension(std::span<const BasicFactor> factors,
                                             const semantic::EmbeddingProvider& embedder,
                                             std::span<const std::size_t> ks, std::span<const double> taus,
                                             std::uint64_t seed, std::size_t n_init = 4);

// Factor labels grouped per cluster, the input of induce_codebook.
std::vector<std::vector<std::string>> cluster_labels(std::span<const BasicFactor> factors,
                                                     const FactorClustering& clustering);

// User message sent with the codebook prompt for one cluster.
std::string codebook_user_text(std::span<const std::string> cluster, std::span<const std::string> history,
                               std::string_view rejected_name = {});

struct InductionResult {
    PrimingCodebook codebook;
    Diagnostics diagnostics;
};

// One prompt per cluster, in order, carrying every factor name seen so far.
// A name already in use triggers one re-prompt, then a " (n)" suffix.
// Throws LlmError when a reply stays unparseable after one retry.
InductionResult induce_codebook(std::span<const std::vector<std::string>> clusters, llm::LlmClient& client,
                                std::vector<std::string> history = {});

std::string vector_user_text(const PrimingCodebook& codebook, std::string_view response_text);

struct VectorAssignment {
    PrimingVector vector;
    Diagnostics diagnostics;
};

// Entries outside [-1, 1] are clamped with a diagnostic. A wrong length or an
// unparseable reply is retried once, then throws LlmError.
VectorAssignment assign_priming_vector(std::string_view response_text, const PrimingCodebook& codebook,
                                       llm::LlmClient& client);

nlohmann::json codebook_to_json(const PrimingCodebook& codebook);
PrimingCodebook codebook_from_json(const nlohmann::json& doc);
void save_codebook(const PrimingCodebook& codebook, const std::filesystem::path& path);
PrimingCodebook load_codebook(const std::filesystem::path& path);

// Sidecar of per-turn vectors: {turn_id, codebook_id, values} per line.
struct PrimingVectorRecord {
    std::string turn_id;
    PrimingVector vector;
};
void save_priming_vectors(const std::filesystem::path& path, std::span<const PrimingVectorRecord> records);
std::vector<PrimingVectorRecord> load_priming_vectors(const std::filesystem::path& path);

struct PipelineOptions {
    std::size_t sample_size = 200;
    std::vector<std::size_t> ks{10, 15, 20};
    std::vector<double> taus{0.0, 0.05, 0.10};
    std::uint64_t seed = 0;
    std::size_t n_init = 4;
    std::size_t max_concurrency = 1;
};

struct PipelineResult {
    std::vector<ResponseText> sample;
    ExtractionResult extraction;
    DimensionSelection selection;
    FactorClustering clustering;
    InductionResult induction;
    Diagnostics diagnostics;
};

// sample -> extract -> embed -> sweep (k, tau) -> cluster at k* -> induce.
PipelineResult run_codebook_pipeline(const Corpus& corpus, std::span<const std::string> eligible_turn_ids,
                                     llm::LlmClient& client, const semantic::EmbeddingProvider& embedder,
                                     const PipelineOptions& options);

}  // namespace nuteval::codebook
