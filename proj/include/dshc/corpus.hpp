#pragma once

#include "dshc/common.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dshc {

struct Utterance {
    std::uint32_t id = 0;
    std::string text;
};

/// Paired dialogue data plus the deduplicated candidate pool.
///
/// contexts[i] and responses[i] form the i-th pair. database holds every
/// distinct response text once; truth[i] is the database id of responses[i].
struct Corpus {
    std::vector<Utterance> contexts;
    std::vector<Utterance> responses;
    std::vector<Utterance> database;
    std::vector<std::uint32_t> truth;
};

/// Parses "context<TAB>response" lines. Blank lines are skipped; every
/// other line must have exactly two non-empty fields.
Corpus load_corpus(const std::filesystem::path& path);

/// Row i of vectors belongs to utterance id i.
struct EmbeddingStore {
    MatrixXfR vectors;

    std::size_t n() const noexcept { return static_cast<std::size_t>(vectors.rows()); }
    std::size_t d() const noexcept { return static_cast<std::size_t>(vectors.cols()); }

    /// Bytes of the f32 payload (n * d * 4).
    std::uint64_t payload_bytes() const noexcept { return static_cast<std::uint64_t>(n()) * d() * sizeof(float); }
};

inline constexpr std::size_t kDefaultEmbeddingDim = 768;
inline constexpr std::string_view kEmbeddingMagic = "DSHCEMB1";

/// DSHCEMB1 | u32 n | u32 d | n*d f32, little-endian, row-major.
void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path);
EmbeddingStore load_embeddings(const std::filesystem::path& path);

/// Deterministic unit-norm stand-in for a trained sentence encoder.
///
/// Each character n-gram (n = 1..3, over UTF-8 code points) is hashed and
/// mapped to a seed-derived pseudo-random direction; the directions are
/// summed and normalized. The empty string maps to e_0.
VectorXf synth_embed(std::string_view text, std::size_t d, std::uint64_t seed);

/// Embeds every utterance in order, row i <- utterances[i].
EmbeddingStore synth_embed_all(std::span<const Utterance> utterances, std::size_t d, std::uint64_t seed);

struct PairExample {
    std::uint32_t ctx_id = 0;
    std::uint32_t can_id = 0;
    std::uint8_t label = 0;

    friend bool operator==(const PairExample&, const PairExample&) = default;
};

/// One positive per (context, response) pair followed by `negatives`
/// uniformly drawn database ids different from the positive.
std::vector<PairExample> make_pairs(const Corpus& corpus, std::size_t negatives, std::uint64_t seed);

/// Lower-level form: positives[i] is the database id paired with context i.
std::vector<PairExample> make_pairs(std::span<const std::uint32_t> positives, std::size_t database_size,
                                    std::size_t negatives, std::uint64_t seed);

/// "ctx_id<TAB>can_id<TAB>S" lines.
void save_pairs(std::span<const PairExample> pairs, const std::filesystem::path& path);
std::vector<PairExample> load_pairs(const std::filesystem::path& path);

}  // namespace dshc
