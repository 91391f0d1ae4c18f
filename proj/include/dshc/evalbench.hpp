#pragma once

#include "dshc/binary_index.hpp"
#include "dshc/bm25.hpp"
#include "dshc/corpus.hpp"
#include "dshc/flat_index.hpp"
#include "dshc/search_result.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dshc {

// ---------------------------------------------------------------- metrics

/// 1 if truth_id is among the first k hits.
int coverage_at_k(const SearchResult& results, std::uint64_t truth_id, std::size_t k);

/// Mean of coverage_at_k over queries; results[i] pairs with truth[i].
double mean_coverage(std::span<const SearchResult> results, std::span<const std::uint64_t> truth, std::size_t k);

/// Text and/or embedding of one side of a scored pair.
struct ScoreItem {
    std::string_view text;
    std::span<const float> embedding;
};

/// Relevance of a candidate to a context, in [0, 1]. Implementations must be
/// deterministic.
class Scorer {
  public:
    virtual ~Scorer() = default;
    virtual double score(const ScoreItem& context, const ScoreItem& candidate) const = 0;
};

/// (1 + cos) / 2 between the two embeddings.
class CosineScorer final : public Scorer {
  public:
    double score(const ScoreItem& context, const ScoreItem& candidate) const override;
};

class ConstantScorer final : public Scorer {
  public:
    explicit ConstantScorer(double value) : value_(value) {}
    double score(const ScoreItem&, const ScoreItem&) const override { return value_; }

  private:
    double value_;
};

/// Candidate lookup by id for scoring.
struct CandidatePool {
    std::span<const Utterance> texts;  // optional; indexed by id
    const MatrixXfR* embeddings = nullptr;  // optional; row = id

    ScoreItem item(std::uint64_t id) const;
};

/// Mean scorer value over the first k hits; nullopt when there are none.
std::optional<double> correlation_at_k(const SearchResult& results, const ScoreItem& context, const Scorer& scorer,
                                       std::size_t k, const CandidatePool& pool);

// ---------------------------------------------------------------- storage

enum class IndexKind { Binary, Flat, Inverted };

struct StorageReport {
    IndexKind kind = IndexKind::Binary;
    std::uint64_t code_bytes = 0;
    std::uint64_t file_bytes = 0;
};

/// Reads the header of an index file and reports its code payload and
/// on-disk size.
StorageReport measure_storage(const std::filesystem::path& path);

// ---------------------------------------------------------------- latency

struct BenchConfig {
    std::size_t bsz = 16;
    std::vector<std::size_t> ks = {20, 100};
    std::size_t repetitions = 20;
    std::size_t warmup = 3;
    std::uint64_t seed = 0;
};

/// Every query in the forms the three backends consume.
struct QuerySet {
    std::vector<std::string> texts;
    MatrixXfR vectors;
    std::vector<PackedCode> codes;
    std::size_t count = 0;
};

class SearchBackend {
  public:
    virtual ~SearchBackend() = default;
    virtual std::string name() const = 0;
    /// Results for queries [begin, end).
    virtual std::vector<SearchResult> search(const QuerySet& queries, std::size_t begin, std::size_t end,
                                             std::size_t k) const = 0;
    virtual std::uint64_t code_bytes() const = 0;
};

std::unique_ptr<SearchBackend> make_bm25_backend(std::string name, const InvertedIndex& index);
std::unique_ptr<SearchBackend> make_dense_backend(std::string name, const FlatIndex& index, Metric metric = Metric::Dot);
std::unique_ptr<SearchBackend> make_hash_backend(std::string name, const BinaryIndex& index);

struct LatencyStats {
    double median_ms = 0.0;
    double p95_ms = 0.0;
    double mean_ms = 0.0;
    std::size_t samples = 0;
};

struct LatencyRun {
    std::vector<SearchResult> results;  // one per query
    LatencyStats stats;
};

/// Splits queries into batches of bsz, runs `warmup` batches untimed, then
/// times every batch once (collecting results) and keeps cycling through
/// the batches until at least `repetitions` samples exist. Only index search
/// is timed; query encoding happens before.
LatencyRun measure_latency(const SearchBackend& backend, const QuerySet& queries, std::size_t k,
                           const BenchConfig& config);

// ------------------------------------------------------------- synthetic

struct SyntheticConfig {
    std::size_t n_clusters = 50;
    std::size_t per_cluster = 200;
    std::size_t d = 768;
    /// Expected norm of the query/context perturbation.
    double noise = 0.1;
    /// Expected norm of a candidate's offset from its cluster center.
    double spread = 1.0;
    std::uint64_t seed = 0;
};

struct SyntheticBenchmark {
    EmbeddingStore candidates;
    EmbeddingStore queries;         // query i is a perturbation of candidates[truth[i]]
    EmbeddingStore train_contexts;  // row j is a perturbation of candidates[j]
    std::vector<std::uint32_t> truth;
    std::vector<std::uint32_t> cluster;  // per candidate
};

/// Unit-norm Gaussian cluster centers, candidates = normalize(center +
/// offset), queries = normalize(candidate + perturbation). Queries map
/// bijectively onto candidates in a seeded order.
SyntheticBenchmark build_synthetic_benchmark(const SyntheticConfig& config);

/// Topic-structured synthetic dialogue pairs for text-based pipelines.
std::vector<std::pair<std::string, std::string>> make_synthetic_dialogues(std::size_t pairs, std::size_t topics,
                                                                          std::uint64_t seed);

void write_corpus_tsv(std::span<const std::pair<std::string, std::string>> pairs, const std::filesystem::path& path);

// ---------------------------------------------------------------- reports

struct BackendReport {
    std::string method;
    std::map<std::size_t, double> coverage;
    std::map<std::size_t, std::optional<double>> correlation;
    std::uint64_t code_bytes = 0;
    std::uint64_t file_bytes = 0;
    std::map<std::size_t, LatencyStats> latency;
};

struct EvalInputs {
    const QuerySet* queries = nullptr;
    std::span<const std::uint64_t> truth;
    const Scorer* scorer = nullptr;        // optional
    std::span<const Utterance> query_texts;  // optional, for text scorers
    CandidatePool pool;
};

/// Runs measure_latency for every K and derives coverage and correlation
/// from the returned results.
BackendReport evaluate_backend(const SearchBackend& backend, const EvalInputs& inputs, const BenchConfig& config,
                               std::optional<std::filesystem::path> index_file = std::nullopt);

/// Main comparison table.
std::string format_report(std::span<const BackendReport> reports);
/// Method, code_bytes, file_bytes, overhead_bytes, ratio to the largest code payload.
std::string format_storage_breakdown(std::span<const BackendReport> reports);
/// Method, K, median, p95, mean, samples.
std::string format_latency_detail(std::span<const BackendReport> reports);

void emit_report(std::span<const BackendReport> reports, const std::filesystem::path& out_dir);

std::string reports_to_json(std::span<const BackendReport> reports);
std::vector<BackendReport> reports_from_json(const std::string& json);

}  // namespace dshc
