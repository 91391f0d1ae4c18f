#include "dshc/bm25.hpp"

#include "dshc/text.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace dshc {

std::vector<std::string> bm25_tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) tokens.push_back(std::move(word));
        word.clear();
    };
    for (const auto& cp : text::decode_utf8(s)) {
        if (text::is_cjk(cp.value)) {
            flush();
            tokens.emplace_back(s.substr(cp.offset, cp.length));
        } else if (text::is_word_char(cp.value)) {
            if (cp.value < 0x80) {
                const char c = static_cast<char>(cp.value);
                word.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
            } else {
                word.append(s.substr(cp.offset, cp.length));
            }
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

InvertedIndex InvertedIndex::build(std::span<const Utterance> docs, Bm25Params params) {
    if (docs.empty()) throw ArgumentError("bm25_build: empty corpus");
    InvertedIndex index;
    index.params_ = params;
    index.doc_len_.assign(docs.size(), 0);
    std::vector<bool> seen(docs.size(), false);
    std::map<std::string, std::uint32_t, std::less<>> tf;
    std::uint64_t total = 0;
    for (const auto& doc : docs) {
        if (doc.id >= docs.size() || seen[doc.id]) throw ArgumentError("bm25_build: document ids must be 0..n-1");
        seen[doc.id] = true;
        tf.clear();
        const auto tokens = bm25_tokenize(doc.text);
        for (const auto& t : tokens) ++tf[t];
        for (const auto& [term, count] : tf) index.postings_[term].push_back({doc.id, count});
        index.doc_len_[doc.id] = static_cast<std::uint32_t>(tokens.size());
        total += tokens.size();
    }
    for (auto& [term, list] : index.postings_) {
        std::sort(list.begin(), list.end(), [](const Posting& a, const Posting& b) { return a.doc < b.doc; });
    }
    index.avgdl_ = static_cast<double>(total) / static_cast<double>(docs.size());
    return index;
}

std::span<const Posting> InvertedIndex::postings(std::string_view term) const {
    const auto it = postings_.find(term);
    if (it == postings_.end()) return {};
    return it->second;
}

double InvertedIndex::idf(std::size_t df) const noexcept {
    const auto n = static_cast<double>(doc_count());
    const auto f = static_cast<double>(df);
    return std::log((n - f + 0.5) / (f + 0.5) + 1.0);
}

std::uint64_t InvertedIndex::code_bytes() const noexcept {
    std::uint64_t postings = 0;
    for (const auto& [term, list] : postings_) postings += list.size();
    return postings * 8 + doc_len_.size() * 4;
}

SearchResult bm25_search_topk(const InvertedIndex& index, std::string_view query, std::size_t k) {
    if (k == 0) throw ArgumentError("bm25_search_topk: K must be >= 1");
    const auto tokens = bm25_tokenize(query);
    const std::set<std::string, std::less<>> terms(tokens.begin(), tokens.end());

    const auto& p = index.params();
    // avgdl is zero only if every document is empty, in which case no term matches.
    const double avgdl = index.avgdl() > 0.0 ? index.avgdl() : 1.0;
    std::vector<double> score(index.doc_count(), 0.0);
    std::vector<std::uint32_t> touched;
    for (const auto& term : terms) {
        const auto list = index.postings(term);
        if (list.empty()) continue;
        const double idf = index.idf(list.size());
        for (const auto& post : list) {
            const double tf = post.tf;
            const double len = index.doc_lengths()[post.doc];
            const double norm = p.k1 * (1.0 - p.b + p.b * len / avgdl);
            if (score[post.doc] == 0.0) touched.push_back(post.doc);
            score[post.doc] += idf * tf * (p.k1 + 1.0) / (tf + norm);
        }
    }
    TopK<Rank::LargestFirst> top(k);
    for (auto doc : touched) top.push(doc, score[doc]);
    return std::move(top).take();
}

void save_inverted_index(const InvertedIndex& index, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatError::Kind::Io, "cannot write " + path.string());
    io::write_magic(out, kInvertedIndexMagic);
    io::write_u32(out, kInvertedIndexVersion);
    io::write_f64(out, index.params_.k1);
    io::write_f64(out, index.params_.b);
    io::write_u32(out, static_cast<std::uint32_t>(index.doc_len_.size()));
    for (auto len : index.doc_len_) io::write_u32(out, len);
    io::write_u32(out, static_cast<std::uint32_t>(index.postings_.size()));
    for (const auto& [term, list] : index.postings_) {
        io::write_u32(out, static_cast<std::uint32_t>(term.size()));
        io::write_bytes(out, term.data(), term.size());
        io::write_u32(out, static_cast<std::uint32_t>(list.size()));
        for (const auto& post : list) {
            io::write_u32(out, post.doc);
            io::write_u32(out, post.tf);
        }
    }
    if (!out) throw FormatError(FormatError::Kind::Io, "write failed: " + path.string());
}

InvertedIndex load_inverted_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string());
    io::expect_magic(in, kInvertedIndexMagic, path);
    const auto version = io::read_u32(in, path);
    if (version != kInvertedIndexVersion) {
        throw FormatError(FormatError::Kind::Malformed, path.string() + ": unsupported version " + std::to_string(version));
    }
    InvertedIndex index;
    index.params_.k1 = io::read_f64(in, path);
    index.params_.b = io::read_f64(in, path);
    const std::uint64_t n = io::read_u32(in, path);
    if (io::remaining(in) < io::checked_payload(n, 1, 4, path)) {
        throw FormatError(FormatError::Kind::Truncated, path.string() + ": truncated payload");
    }
    index.doc_len_.resize(n);
    std::uint64_t total = 0;
    for (auto& len : index.doc_len_) total += (len = io::read_u32(in, path));
    index.avgdl_ = n == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(n);
    const auto terms = io::read_u32(in, path);
    for (std::uint32_t t = 0; t < terms; ++t) {
        const auto len = io::read_u32(in, path);
        if (io::remaining(in) < len) throw FormatError(FormatError::Kind::Truncated, path.string() + ": truncated payload");
        std::string term(len, '\0');
        io::read_bytes(in, term.data(), len, path);
        const std::uint64_t count = io::read_u32(in, path);
        if (io::remaining(in) < io::checked_payload(count, 1, 8, path)) {
            throw FormatError(FormatError::Kind::Truncated, path.string() + ": truncated payload");
        }
        std::vector<Posting> list(count);
        for (auto& post : list) {
            post.doc = io::read_u32(in, path);
            post.tf = io::read_u32(in, path);
            if (post.doc >= n) throw FormatError(FormatError::Kind::Malformed, path.string() + ": posting doc out of range");
        }
        index.postings_.emplace(std::move(term), std::move(list));
    }
    return index;
}

}  // namespace dshc
