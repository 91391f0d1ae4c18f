#include "dshc/flat_index.hpp"

#include "dshc/binary_index.hpp"

#include <fstream>
#include <numeric>

namespace dshc {

namespace {

float dot(const float* a, const float* b, Eigen::Index d) {
    return Eigen::Map<const VectorXf>(a, d).dot(Eigen::Map<const VectorXf>(b, d));
}

template <typename Visit>
void scan(const FlatIndex& index, const float* const* queries, std::size_t nq, std::span<const float> qnorms,
          Metric metric, Visit&& visit) {
    const auto& m = index.matrix();
    const auto d = m.cols();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const float* row = m.data() + i * d;
        for (std::size_t q = 0; q < nq; ++q) {
            float s = dot(row, queries[q], d);
            if (metric == Metric::Cosine) {
                const float denom = index.row_norm(static_cast<std::size_t>(i)) * qnorms[q];
                s = denom > 0.0F ? s / denom : 0.0F;
            }
            visit(q, static_cast<std::size_t>(i), s);
        }
    }
}

}  // namespace

FlatIndex::FlatIndex(MatrixXfR matrix, std::vector<std::uint64_t> ids) : matrix_(std::move(matrix)), ids_(std::move(ids)) {
    if (ids_.empty()) {
        ids_.resize(static_cast<std::size_t>(matrix_.rows()));
        std::iota(ids_.begin(), ids_.end(), std::uint64_t{0});
    }
    if (ids_.size() != static_cast<std::size_t>(matrix_.rows())) throw ArgumentError("FlatIndex: ids/rows mismatch");
    if (!matrix_.allFinite()) throw ArgumentError("FlatIndex: non-finite entry");
    norms_.resize(ids_.size());
    for (Eigen::Index i = 0; i < matrix_.rows(); ++i) norms_[static_cast<std::size_t>(i)] = matrix_.row(i).norm();
}

std::vector<SearchResult> dense_search_batch(const FlatIndex& index, const MatrixXfR& queries, std::size_t k,
                                             Metric metric) {
    if (k == 0) throw ArgumentError("dense_search: K must be >= 1");
    if (queries.rows() > 0 && static_cast<std::size_t>(queries.cols()) != index.dim()) {
        throw ArgumentError("dense_search: query dimension " + std::to_string(queries.cols()) +
                            " does not match index d=" + std::to_string(index.dim()));
    }
    const auto nq = static_cast<std::size_t>(queries.rows());
    std::vector<const float*> ptrs(nq);
    std::vector<float> qnorms(nq);
    for (std::size_t q = 0; q < nq; ++q) {
        ptrs[q] = queries.data() + static_cast<Eigen::Index>(q) * queries.cols();
        qnorms[q] = queries.row(static_cast<Eigen::Index>(q)).norm();
    }
    std::vector<TopK<Rank::LargestFirst>> tops(nq, TopK<Rank::LargestFirst>(std::min(k, index.size())));
    const auto ids = index.ids();
    // Queries go in blocks small enough to stay cached while the rows stream by.
    constexpr std::size_t kBlock = 32;
    for (std::size_t begin = 0; begin < nq; begin += kBlock) {
        const std::size_t count = std::min(kBlock, nq - begin);
        scan(index, ptrs.data() + begin, count, std::span(qnorms).subspan(begin, count), metric,
             [&](std::size_t q, std::size_t row, float s) {
                 auto& top = tops[begin + q];
                 if (!top.full() || s >= top.threshold()) top.push(ids[row], s);
             });
    }
    std::vector<SearchResult> out;
    out.reserve(nq);
    for (auto& t : tops) out.push_back(std::move(t).take());
    return out;
}

SearchResult dense_search_topk(const FlatIndex& index, std::span<const float> query, std::size_t k, Metric metric) {
    if (query.size() != index.dim()) {
        throw ArgumentError("dense_search: query dimension " + std::to_string(query.size()) +
                            " does not match index d=" + std::to_string(index.dim()));
    }
    MatrixXfR q = Eigen::Map<const MatrixXfR>(query.data(), 1, static_cast<Eigen::Index>(query.size()));
    return std::move(dense_search_batch(index, q, k, metric).front());
}

void save_flat_index(const FlatIndex& index, const std::filesystem::path& path) {
    if (index.size() > std::numeric_limits<std::uint32_t>::max() || index.dim() > std::numeric_limits<std::uint32_t>::max()) {
        throw ArgumentError("index too large for DSHCFLT1");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatError::Kind::Io, "cannot write " + path.string());
    io::write_magic(out, kFlatIndexMagic);
    io::write_u32(out, static_cast<std::uint32_t>(index.size()));
    io::write_u32(out, static_cast<std::uint32_t>(index.dim()));
    io::write_f32_array(out, index.matrix().data(), index.size() * index.dim());
    for (auto id : index.ids()) io::write_u64(out, id);
    if (!out) throw FormatError(FormatError::Kind::Io, "write failed: " + path.string());
}

FlatIndex load_flat_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string());
    io::expect_magic(in, kFlatIndexMagic, path);
    const std::uint64_t n = io::read_u32(in, path);
    const std::uint64_t d = io::read_u32(in, path);
    const auto bytes = io::checked_payload(n, d, sizeof(float), path);
    const auto id_bytes = io::checked_payload(n, 1, sizeof(std::uint64_t), path);
    if (io::remaining(in) < bytes + id_bytes) {
        throw FormatError(FormatError::Kind::Truncated, path.string() + ": truncated payload");
    }
    MatrixXfR m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    io::read_f32_array(in, m.data(), n * d, path);
    std::vector<std::uint64_t> ids(n);
    for (auto& id : ids) id = io::read_u64(in, path);
    if (!m.allFinite()) throw FormatError(FormatError::Kind::Malformed, path.string() + ": non-finite entry");
    return FlatIndex(std::move(m), std::move(ids));
}

}  // namespace dshc
