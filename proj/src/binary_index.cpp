#include "dshc/binary_index.hpp"

#include <bit>
#include <fstream>

namespace dshc {

namespace {

std::size_t words_for(std::size_t h) noexcept { return (h + 63) / 64; }

void check_code(const PackedCode& c) {
    if (c.h == 0) throw ArgumentError("packed code has h = 0");
    if (c.bytes.size() != code_bytes_per_row(c.h)) throw ArgumentError("packed code byte length does not match h");
}

void load_words(const std::uint8_t* bytes, std::size_t nbytes, std::uint64_t* words, std::size_t nwords) {
    for (std::size_t w = 0; w < nwords; ++w) {
        std::uint64_t v = 0;
        for (std::size_t b = 0; b < 8; ++b) {
            const std::size_t at = w * 8 + b;
            if (at < nbytes) v |= static_cast<std::uint64_t>(bytes[at]) << (8 * b);
        }
        words[w] = v;
    }
}

template <std::size_t Words>
void scan_fixed(const BinaryIndex& index, const std::uint64_t* q, TopK<Rank::SmallestFirst>& top) {
    const auto ids = index.ids();
    const std::uint64_t* row = index.words(0).data();
    for (std::size_t i = 0; i < ids.size(); ++i, row += Words) {
        unsigned dist = 0;
        for (std::size_t w = 0; w < Words; ++w) dist += static_cast<unsigned>(std::popcount(row[w] ^ q[w]));
        if (!top.full() || dist <= top.threshold()) top.push(ids[i], dist);
    }
}

void scan_generic(const BinaryIndex& index, const std::uint64_t* q, TopK<Rank::SmallestFirst>& top) {
    const auto ids = index.ids();
    const std::size_t words = index.words_per_code();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::uint64_t* row = index.words(i).data();
        unsigned dist = 0;
        for (std::size_t w = 0; w < words; ++w) dist += static_cast<unsigned>(std::popcount(row[w] ^ q[w]));
        if (!top.full() || dist <= top.threshold()) top.push(ids[i], dist);
    }
}

}  // namespace

PackedCode pack(const SignCode& code) {
    if (code.size() == 0) throw ArgumentError("pack: empty code");
    PackedCode out;
    out.h = static_cast<std::uint32_t>(code.size());
    out.bytes.assign(code_bytes_per_row(out.h), 0);
    for (Eigen::Index j = 0; j < code.size(); ++j) {
        if (code[j] != 1 && code[j] != -1) throw ArgumentError("pack: code components must be +1 or -1");
        if (code[j] == 1) out.bytes[static_cast<std::size_t>(j) / 8] |= static_cast<std::uint8_t>(1U << (j % 8));
    }
    return out;
}

SignCode unpack(const PackedCode& packed) {
    check_code(packed);
    SignCode out(packed.h);
    for (std::uint32_t j = 0; j < packed.h; ++j) out[j] = (packed.bytes[j / 8] >> (j % 8)) & 1U ? 1 : -1;
    return out;
}

std::uint32_t hamming_distance(const PackedCode& a, const PackedCode& b) {
    check_code(a);
    check_code(b);
    if (a.h != b.h) {
        throw ArgumentError("hamming_distance: code lengths differ (" + std::to_string(a.h) + " vs " +
                            std::to_string(b.h) + ")");
    }
    std::uint32_t dist = 0;
    std::size_t i = 0;
    for (; i + 8 <= a.bytes.size(); i += 8) {
        std::uint64_t x = 0;
        std::uint64_t y = 0;
        std::memcpy(&x, a.bytes.data() + i, 8);
        std::memcpy(&y, b.bytes.data() + i, 8);
        dist += static_cast<std::uint32_t>(std::popcount(x ^ y));
    }
    for (; i < a.bytes.size(); ++i) dist += static_cast<std::uint32_t>(std::popcount(static_cast<unsigned>(a.bytes[i] ^ b.bytes[i])));
    return dist;
}

std::vector<std::uint64_t> to_words(const PackedCode& code) {
    check_code(code);
    std::vector<std::uint64_t> words(words_for(code.h));
    load_words(code.bytes.data(), code.bytes.size(), words.data(), words.size());
    return words;
}

BinaryIndex::BinaryIndex(std::uint32_t h) : h_(h), words_(words_for(h)) {
    if (h == 0) throw ArgumentError("BinaryIndex: h must be positive");
}

void BinaryIndex::add(const PackedCode& code, std::uint64_t id) {
    check_code(code);
    if (code.h != h_) {
        throw ArgumentError("BinaryIndex::add: code has h=" + std::to_string(code.h) + ", index has h=" +
                            std::to_string(h_));
    }
    const auto at = words_data_.size();
    words_data_.resize(at + words_);
    load_words(code.bytes.data(), code.bytes.size(), words_data_.data() + at, words_);
    ids_.push_back(id);
}

BinaryIndex BinaryIndex::build(std::span<const PackedCode> codes, std::span<const std::uint64_t> ids) {
    if (codes.empty()) throw ArgumentError("BinaryIndex::build: no codes");
    if (!ids.empty() && ids.size() != codes.size()) throw ArgumentError("BinaryIndex::build: ids/codes size mismatch");
    BinaryIndex index(codes.front().h);
    index.words_data_.reserve(codes.size() * index.words_);
    index.ids_.reserve(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) index.add(codes[i], ids.empty() ? i : ids[i]);
    return index;
}

BinaryIndex BinaryIndex::build(std::span<const SignCode> codes, std::span<const std::uint64_t> ids) {
    std::vector<PackedCode> packed;
    packed.reserve(codes.size());
    for (const auto& c : codes) packed.push_back(pack(c));
    return build(packed, ids);
}

PackedCode BinaryIndex::code(std::size_t row) const {
    PackedCode out;
    out.h = h_;
    out.bytes.resize(code_bytes_per_row(h_));
    const auto w = words(row);
    for (std::size_t b = 0; b < out.bytes.size(); ++b) {
        out.bytes[b] = static_cast<std::uint8_t>(w[b / 8] >> (8 * (b % 8)));
    }
    return out;
}

SearchResult binary_search_topk(const BinaryIndex& index, const PackedCode& query, std::size_t k) {
    if (k == 0) throw ArgumentError("binary_search_topk: K must be >= 1");
    if (query.h != index.h()) {
        throw ArgumentError("binary_search_topk: query h=" + std::to_string(query.h) + " but index h=" +
                            std::to_string(index.h()));
    }
    const auto q = to_words(query);
    TopK<Rank::SmallestFirst> top(std::min(k, index.size()));
    if (index.size() == 0) return std::move(top).take();
    switch (index.words_per_code()) {
        case 1: scan_fixed<1>(index, q.data(), top); break;
        case 2: scan_fixed<2>(index, q.data(), top); break;
        case 4: scan_fixed<4>(index, q.data(), top); break;
        case 8: scan_fixed<8>(index, q.data(), top); break;
        default: scan_generic(index, q.data(), top); break;
    }
    return std::move(top).take();
}

std::vector<SearchResult> binary_search_batch(const BinaryIndex& index, std::span<const PackedCode> queries,
                                              std::size_t k) {
    std::vector<SearchResult> out;
    out.reserve(queries.size());
    for (const auto& q : queries) out.push_back(binary_search_topk(index, q, k));
    return out;
}

void save_binary_index(const BinaryIndex& index, const std::filesystem::path& path) {
    if (index.size() > std::numeric_limits<std::uint32_t>::max()) throw ArgumentError("index too large for DSHCIDX1");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatError::Kind::Io, "cannot write " + path.string());
    io::write_magic(out, kBinaryIndexMagic);
    io::write_u32(out, static_cast<std::uint32_t>(index.size()));
    io::write_u32(out, index.h());
    for (std::size_t i = 0; i < index.size(); ++i) {
        const auto c = index.code(i);
        io::write_bytes(out, c.bytes.data(), c.bytes.size());
    }
    for (auto id : index.ids()) io::write_u64(out, id);
    if (!out) throw FormatError(FormatError::Kind::Io, "write failed: " + path.string());
}

BinaryIndex load_binary_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string());
    io::expect_magic(in, kBinaryIndexMagic, path);
    const std::uint64_t n = io::read_u32(in, path);
    const std::uint32_t h = io::read_u32(in, path);
    if (h == 0) throw FormatError(FormatError::Kind::Malformed, path.string() + ": h = 0");
    const auto row = code_bytes_per_row(h);
    const auto code_bytes = io::checked_payload(n, row, 1, path);
    const auto id_bytes = io::checked_payload(n, 1, sizeof(std::uint64_t), path);
    if (io::remaining(in) < code_bytes + id_bytes) {
        throw FormatError(FormatError::Kind::Truncated, path.string() + ": truncated payload");
    }
    std::vector<std::uint8_t> raw(code_bytes);
    io::read_bytes(in, raw.data(), raw.size(), path);
    BinaryIndex index(h);
    PackedCode c;
    c.h = h;
    std::vector<std::uint64_t> ids(n);
    for (auto& id : ids) id = io::read_u64(in, path);
    for (std::uint64_t i = 0; i < n; ++i) {
        c.bytes.assign(raw.begin() + static_cast<std::ptrdiff_t>(i * row),
                       raw.begin() + static_cast<std::ptrdiff_t>((i + 1) * row));
        if (h % 8 != 0 && (c.bytes.back() >> (h % 8)) != 0) {
            throw FormatError(FormatError::Kind::Malformed, path.string() + ": padding bits set in row " + std::to_string(i));
        }
        index.add(c, ids[i]);
    }
    return index;
}

}  // namespace dshc
