#include "dshc/corpus.hpp"

#include "dshc/text.hpp"

#include <charconv>
#include <fstream>
#include <unordered_map>

namespace dshc {

namespace {

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) throw FormatError(FormatError::Kind::Io, "cannot write " + path.string());
    return out;
}

[[noreturn]] void line_error(const std::filesystem::path& path, std::size_t line, const std::string& msg) {
    throw FormatError(FormatError::Kind::Malformed, path.string() + ": line " + std::to_string(line) + ": " + msg);
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path) {
    auto in = open_in(path);
    Corpus corpus;
    std::unordered_map<std::string, std::uint32_t> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;

        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
            line_error(path, line_no, "expected 2 fields");
        }
        const auto ctx = text::trim(std::string_view(line).substr(0, tab));
        const auto rsp = text::trim(std::string_view(line).substr(tab + 1));
        if (ctx.empty() || rsp.empty()) line_error(path, line_no, "empty field");

        const auto id = static_cast<std::uint32_t>(corpus.contexts.size());
        corpus.contexts.push_back({id, std::string(ctx)});
        corpus.responses.push_back({id, std::string(rsp)});

        auto [it, inserted] = seen.try_emplace(std::string(rsp), static_cast<std::uint32_t>(corpus.database.size()));
        if (inserted) corpus.database.push_back({it->second, std::string(rsp)});
        corpus.truth.push_back(it->second);
    }
    if (corpus.contexts.empty()) {
        throw FormatError(FormatError::Kind::Malformed, path.string() + ": empty corpus");
    }
    return corpus;
}

void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path) {
    if (store.n() > std::numeric_limits<std::uint32_t>::max() || store.d() > std::numeric_limits<std::uint32_t>::max()) {
        throw ArgumentError("embedding store too large for DSHCEMB1 header");
    }
    auto out = open_out(path, std::ios::binary);
    io::write_magic(out, kEmbeddingMagic);
    io::write_u32(out, static_cast<std::uint32_t>(store.n()));
    io::write_u32(out, static_cast<std::uint32_t>(store.d()));
    io::write_f32_array(out, store.vectors.data(), store.n() * store.d());
    if (!out) throw FormatError(FormatError::Kind::Io, "write failed: " + path.string());
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
    auto in = open_in(path, std::ios::binary);
    io::expect_magic(in, kEmbeddingMagic, path);
    const std::uint64_t n = io::read_u32(in, path);
    const std::uint64_t d = io::read_u32(in, path);
    const auto bytes = io::checked_payload(n, d, sizeof(float), path);
    if (io::remaining(in) < bytes) {
        throw FormatError(FormatError::Kind::Truncated,
                          path.string() + ": truncated payload (header n=" + std::to_string(n) +
                              ", d=" + std::to_string(d) + ")");
    }
    EmbeddingStore store;
    store.vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    io::read_f32_array(in, store.vectors.data(), n * d, path);
    if (!store.vectors.allFinite()) {
        throw FormatError(FormatError::Kind::Malformed, path.string() + ": non-finite embedding value");
    }
    return store;
}

VectorXf synth_embed(std::string_view utterance, std::size_t d, std::uint64_t seed) {
    if (d == 0) throw ArgumentError("synth_embed: dimension must be positive");
    VectorXf acc = VectorXf::Zero(static_cast<Eigen::Index>(d));
    const auto cps = text::decode_utf8(utterance);
    if (cps.empty()) {
        acc[0] = 1.0F;
        return acc;
    }
    // Rademacher projection of the hashed n-gram counts; sums stay integral in f32.
    for (std::size_t n = 1; n <= 3; ++n) {
        for (std::size_t i = 0; i + n <= cps.size(); ++i) {
            const auto begin = cps[i].offset;
            const auto end = cps[i + n - 1].offset + cps[i + n - 1].length;
            const auto gram = utterance.substr(begin, end - begin);
            Rng rng(mix_seed(seed, fnv1a(gram) ^ n));
            std::uint64_t bits = 0;
            for (std::size_t j = 0; j < d; ++j) {
                if (j % 64 == 0) bits = rng.next();
                acc[static_cast<Eigen::Index>(j)] += (bits & 1U) ? 1.0F : -1.0F;
                bits >>= 1;
            }
        }
    }
    const double norm = acc.cast<double>().norm();
    if (norm == 0.0) {
        VectorXf e0 = VectorXf::Zero(static_cast<Eigen::Index>(d));
        e0[0] = 1.0F;
        return e0;
    }
    return (acc.cast<double>() / norm).cast<float>();
}

EmbeddingStore synth_embed_all(std::span<const Utterance> utterances, std::size_t d, std::uint64_t seed) {
    EmbeddingStore store;
    store.vectors.resize(static_cast<Eigen::Index>(utterances.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < utterances.size(); ++i) {
        store.vectors.row(static_cast<Eigen::Index>(i)) = synth_embed(utterances[i].text, d, seed).transpose();
    }
    return store;
}

std::vector<PairExample> make_pairs(std::span<const std::uint32_t> positives, std::size_t database_size,
                                    std::size_t negatives, std::uint64_t seed) {
    if (database_size < 2) throw ArgumentError("make_pairs: need at least 2 database entries");
    if (negatives < 1) throw ArgumentError("make_pairs: negatives_per_positive must be >= 1");
    if (negatives >= database_size) {
        throw ArgumentError("make_pairs: negatives_per_positive (" + std::to_string(negatives) +
                            ") must be smaller than the database size (" + std::to_string(database_size) + ")");
    }
    Rng rng(seed);
    std::vector<PairExample> pairs;
    pairs.reserve(positives.size() * (1 + negatives));
    for (std::size_t i = 0; i < positives.size(); ++i) {
        const auto pos = positives[i];
        if (pos >= database_size) throw ArgumentError("make_pairs: positive id out of range");
        const auto ctx = static_cast<std::uint32_t>(i);
        pairs.push_back({ctx, pos, 1});
        for (std::size_t k = 0; k < negatives; ++k) {
            // Draw from the database with the positive removed.
            auto r = static_cast<std::uint32_t>(rng.below(database_size - 1));
            if (r >= pos) ++r;
            pairs.push_back({ctx, r, 0});
        }
    }
    return pairs;
}

std::vector<PairExample> make_pairs(const Corpus& corpus, std::size_t negatives, std::uint64_t seed) {
    return make_pairs(corpus.truth, corpus.database.size(), negatives, seed);
}

void save_pairs(std::span<const PairExample> pairs, const std::filesystem::path& path) {
    auto out = open_out(path);
    for (const auto& p : pairs) out << p.ctx_id << '\t' << p.can_id << '\t' << int(p.label) << '\n';
    if (!out) throw FormatError(FormatError::Kind::Io, "write failed: " + path.string());
}

std::vector<PairExample> load_pairs(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::vector<PairExample> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::uint64_t fields[3] = {};
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (int f = 0; f < 3; ++f) {
            auto [next, ec] = std::from_chars(p, end, fields[f]);
            if (ec != std::errc{}) line_error(path, line_no, "expected 3 integer fields");
            p = next;
            if (f < 2) {
                if (p == end || *p != '\t') line_error(path, line_no, "expected 3 fields");
                ++p;
            }
        }
        if (p != end) line_error(path, line_no, "expected 3 fields");
        if (fields[2] > 1) line_error(path, line_no, "label must be 0 or 1");
        if (fields[0] > std::numeric_limits<std::uint32_t>::max() || fields[1] > std::numeric_limits<std::uint32_t>::max()) {
            line_error(path, line_no, "id out of range");
        }
        pairs.push_back({static_cast<std::uint32_t>(fields[0]), static_cast<std::uint32_t>(fields[1]),
                         static_cast<std::uint8_t>(fields[2])});
    }
    return pairs;
}

}  // namespace dshc
