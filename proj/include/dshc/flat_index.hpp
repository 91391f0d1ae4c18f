#pragma once

#include "dshc/common.hpp"
#include "dshc/corpus.hpp"
#include "dshc/search_result.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace dshc {

enum class Metric { Dot, Cosine };

/// Row-major n x d float matrix scanned exhaustively.
class FlatIndex {
  public:
    FlatIndex() = default;
    explicit FlatIndex(MatrixXfR matrix, std::vector<std::uint64_t> ids = {});
    static FlatIndex from_store(const EmbeddingStore& store) { return FlatIndex(store.vectors); }

    std::size_t size() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(matrix_.cols()); }
    const MatrixXfR& matrix() const noexcept { return matrix_; }
    std::span<const std::uint64_t> ids() const noexcept { return ids_; }
    float row_norm(std::size_t row) const noexcept { return norms_[row]; }

    /// n * d * 4.
    std::uint64_t code_bytes() const noexcept { return dense_code_bytes(size(), dim()); }

  private:
    MatrixXfR matrix_;
    std::vector<std::uint64_t> ids_;
    std::vector<float> norms_;
};

/// K largest matching degrees by linear scan; ties by ascending id.
/// Metric::Dot uses the raw inner product.
SearchResult dense_search_topk(const FlatIndex& index, std::span<const float> query, std::size_t k,
                               Metric metric = Metric::Dot);

/// Scans each index row once against all queries (rows of `queries`).
/// Every per-query result equals dense_search_topk on that query.
std::vector<SearchResult> dense_search_batch(const FlatIndex& index, const MatrixXfR& queries, std::size_t k,
                                             Metric metric = Metric::Dot);

inline constexpr std::string_view kFlatIndexMagic = "DSHCFLT1";

/// DSHCFLT1 | u32 n | u32 d | n*d f32 | n u64 ids.
void save_flat_index(const FlatIndex& index, const std::filesystem::path& path);
FlatIndex load_flat_index(const std::filesystem::path& path);

}  // namespace dshc
