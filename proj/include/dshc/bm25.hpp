#pragma once

#include "dshc/corpus.hpp"
#include "dshc/search_result.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dshc {

/// CJK code points become single-character tokens; runs of other word
/// characters become lowercased word tokens; everything else separates.
std::vector<std::string> bm25_tokenize(std::string_view text);

struct Posting {
    std::uint32_t doc = 0;
    std::uint32_t tf = 0;

    friend bool operator==(const Posting&, const Posting&) = default;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Term -> postings sorted by doc id, plus document lengths for BM25.
class InvertedIndex {
  public:
    /// Documents must carry ids 0..n-1 (any order).
    static InvertedIndex build(std::span<const Utterance> docs, Bm25Params params = {});

    std::size_t doc_count() const noexcept { return doc_len_.size(); }
    double avgdl() const noexcept { return avgdl_; }
    const Bm25Params& params() const noexcept { return params_; }
    std::span<const std::uint32_t> doc_lengths() const noexcept { return doc_len_; }
    const std::map<std::string, std::vector<Posting>, std::less<>>& terms() const noexcept { return postings_; }

    /// Empty span for unknown terms.
    std::span<const Posting> postings(std::string_view term) const;
    std::size_t df(std::string_view term) const { return postings(term).size(); }

    /// ln((N - df + 0.5) / (df + 0.5) + 1).
    double idf(std::size_t df) const noexcept;

    /// Posting payload: 8 bytes per posting plus 4 bytes per document length.
    std::uint64_t code_bytes() const noexcept;

    friend void save_inverted_index(const InvertedIndex&, const std::filesystem::path&);
    friend InvertedIndex load_inverted_index(const std::filesystem::path&);

  private:
    std::map<std::string, std::vector<Posting>, std::less<>> postings_;
    std::vector<std::uint32_t> doc_len_;
    double avgdl_ = 0.0;
    Bm25Params params_;
};

/// Scores every document sharing at least one distinct query term:
/// sum over terms of idf * tf (k1 + 1) / (tf + k1 (1 - b + b |D| / avgdl)).
/// Documents without overlap are never returned; ties go to the lower id.
SearchResult bm25_search_topk(const InvertedIndex& index, std::string_view query, std::size_t k);

inline constexpr std::string_view kInvertedIndexMagic = "DSHCBM25";
inline constexpr std::uint32_t kInvertedIndexVersion = 1;

/// DSHCBM25 | u32 version | f64 k1 | f64 b | u32 N | N u32 doc lengths |
/// u32 term count | per term in byte order: u32 length, bytes, u32 postings,
/// postings as (u32 doc, u32 tf). All little-endian.
void save_inverted_index(const InvertedIndex& index, const std::filesystem::path& path);
InvertedIndex load_inverted_index(const std::filesystem::path& path);

}  // namespace dshc
