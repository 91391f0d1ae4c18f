#pragma once

#include "dshc/common.hpp"
#include "dshc/search_result.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace dshc {

/// A {-1,+1}^h code packed LSB-first: bit j of byte j/8 is set iff
/// component j is +1. Padding bits past h are zero.
struct PackedCode {
    std::uint32_t h = 0;
    std::vector<std::uint8_t> bytes;

    friend bool operator==(const PackedCode&, const PackedCode&) = default;
};

inline constexpr std::size_t code_bytes_per_row(std::size_t h) noexcept { return (h + 7) / 8; }

PackedCode pack(const SignCode& code);
SignCode unpack(const PackedCode& packed);

/// popcount(a XOR b), which equals (h - unpack(a) . unpack(b)) / 2.
std::uint32_t hamming_distance(const PackedCode& a, const PackedCode& b);

/// Packed codes stored as padded 64-bit words for a linear popcount scan.
class BinaryIndex {
  public:
    BinaryIndex() = default;
    explicit BinaryIndex(std::uint32_t h);

    /// ids default to 0..n-1 when empty.
    static BinaryIndex build(std::span<const PackedCode> codes, std::span<const std::uint64_t> ids = {});
    static BinaryIndex build(std::span<const SignCode> codes, std::span<const std::uint64_t> ids = {});

    void add(const PackedCode& code, std::uint64_t id);

    std::uint32_t h() const noexcept { return h_; }
    std::size_t size() const noexcept { return ids_.size(); }
    std::size_t words_per_code() const noexcept { return words_; }
    std::span<const std::uint64_t> ids() const noexcept { return ids_; }
    std::span<const std::uint64_t> words(std::size_t row) const noexcept {
        return std::span(words_data_).subspan(row * words_, words_);
    }
    PackedCode code(std::size_t row) const;

    /// n * ceil(h / 8).
    std::uint64_t code_bytes() const noexcept { return binary_code_bytes(size(), h_); }

  private:
    std::uint32_t h_ = 0;
    std::size_t words_ = 0;
    std::vector<std::uint64_t> words_data_;
    std::vector<std::uint64_t> ids_;
};

/// Query words in the same padded layout as the index rows.
std::vector<std::uint64_t> to_words(const PackedCode& code);

/// K smallest Hamming distances by full linear scan; ties by ascending id.
SearchResult binary_search_topk(const BinaryIndex& index, const PackedCode& query, std::size_t k);

/// Independent queries, one result per query, in order.
std::vector<SearchResult> binary_search_batch(const BinaryIndex& index, std::span<const PackedCode> queries,
                                              std::size_t k);

inline constexpr std::string_view kBinaryIndexMagic = "DSHCIDX1";

/// DSHCIDX1 | u32 n | u32 h | n * ceil(h/8) code bytes | n u64 ids.
void save_binary_index(const BinaryIndex& index, const std::filesystem::path& path);
BinaryIndex load_binary_index(const std::filesystem::path& path);

}  // namespace dshc
