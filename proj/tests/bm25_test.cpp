#include "doctest.h"
#include "oracles.hpp"

#include "dshc/bm25.hpp"

using namespace dshc;

namespace {

std::vector<Utterance> docs_of(const std::vector<std::string>& texts) {
    std::vector<Utterance> out;
    for (std::size_t i = 0; i < texts.size(); ++i) out.push_back({static_cast<std::uint32_t>(i), texts[i]});
    return out;
}

const std::vector<std::string> kToy = {"cat sat on mat", "dog dog cat", "bird flew"};

}  // namespace

TEST_CASE("tokenizer examples") {
    using V = std::vector<std::string>;
    CHECK(bm25_tokenize("Hello World") == V{"hello", "world"});
    CHECK(bm25_tokenize("你好world") == V{"你", "好", "world"});
    CHECK(bm25_tokenize("!!!").empty());
    CHECK(bm25_tokenize("").empty());
    CHECK(bm25_tokenize("it's 2 AM, ok?") == V{"it", "s", "2", "am", "ok"});
    CHECK(bm25_tokenize("カタカナ한국") == V{"カ", "タ", "カ", "ナ", "한", "국"});
    CHECK(bm25_tokenize("naïve café") == V{"naïve", "café"});
    CHECK(bm25_tokenize("今天。天气😀好") == V{"今", "天", "天", "气", "好"});
}

TEST_CASE("bm25 build statistics") {
    const auto one = InvertedIndex::build(docs_of({"a b c d"}));
    CHECK(one.avgdl() == 4.0);
    CHECK(one.doc_count() == 1);
    CHECK(one.postings("zzz").empty());

    const auto idx = InvertedIndex::build(docs_of(kToy));
    CHECK(idx.doc_count() == 3);
    CHECK(idx.avgdl() == 3.0);
    CHECK(idx.df("cat") == 2);
    CHECK(idx.df("dog") == 1);
    CHECK(idx.df("mat") == 1);
    CHECK(idx.postings("dog")[0] == Posting{1, 2});
    CHECK(idx.postings("cat")[0] == Posting{0, 1});
    CHECK(idx.postings("cat")[1] == Posting{1, 1});
    CHECK(idx.terms().size() == 7);
    CHECK(idx.code_bytes() == 8 * 8 + 3 * 4);  // 8 postings, 3 doc lengths
    CHECK_THROWS_AS(InvertedIndex::build({}), ArgumentError);
}

TEST_CASE("bm25 scores match hand computation") {
    const auto idx = InvertedIndex::build(docs_of(kToy));
    // idf(cat) = ln(1.5 / 2.5 + 1); |D1| = avgdl, so its summand is idf itself;
    // |D0| = 4 gives norm 1.2 * (0.25 + 1) = 1.5 and factor 2.2 / 2.5.
    const auto r = bm25_search_topk(idx, "cat", 10);
    REQUIRE(r.size() == 2);
    CHECK(r[0].id == 1);
    CHECK(std::abs(r[0].score - 0.47000362924573563) < 1e-6);
    CHECK(r[1].id == 0);
    CHECK(std::abs(r[1].score - 0.4136031937362474) < 1e-6);

    // dog: df = 1, tf = 2 in D1.
    const auto r2 = bm25_search_topk(idx, "Dog cat cat", 10);
    REQUIRE(r2.size() == 2);
    CHECK(r2[0].id == 1);
    CHECK(std::abs(r2[0].score - 1.8186438521368593) < 1e-6);
}

TEST_CASE("bm25 zero overlap and empty queries return nothing") {
    const auto idx = InvertedIndex::build(docs_of(kToy));
    CHECK(bm25_search_topk(idx, "zebra", 10).empty());
    CHECK(bm25_search_topk(idx, "", 10).empty());
    CHECK(bm25_search_topk(idx, "?!", 10).empty());
    CHECK_THROWS_AS(bm25_search_topk(idx, "cat", 0), ArgumentError);
}

TEST_CASE("bm25 monotone in tf and decreasing idf") {
    const auto idx = InvertedIndex::build(docs_of({"x y", "x x", "y z", "w w"}));
    const auto r = bm25_search_topk(idx, "x", 10);
    REQUIRE(r.size() == 2);
    CHECK(r[0].id == 1);
    CHECK(r[0].score > r[1].score);
    CHECK(idx.idf(1) > idx.idf(2));
    CHECK(idx.idf(4) > 0.0);
}

TEST_CASE("bm25 matches the brute-force oracle") {
    Rng rng(5);
    const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f", "g", "h", "好", "天"};
    std::vector<std::string> texts;
    std::vector<std::vector<std::string>> tokens;
    for (int i = 0; i < 400; ++i) {
        std::string t;
        const auto len = 1 + rng.below(6);
        for (std::uint64_t j = 0; j < len; ++j) t += vocab[rng.below(vocab.size())] + " ";
        texts.push_back(t);
        tokens.push_back(bm25_tokenize(t));
    }
    const auto idx = InvertedIndex::build(docs_of(texts));
    for (int qi = 0; qi < 50; ++qi) {
        std::string q = vocab[rng.below(vocab.size())] + " " + vocab[rng.below(vocab.size())];
        for (std::size_t k : {1U, 20U, 100U}) CHECK(bm25_search_topk(idx, q, k) == oracle::bm25_oracle(tokens, bm25_tokenize(q), k));
    }
}

TEST_CASE("inverted index file roundtrip") {
    oracle::TempDir dir("bm25");
    const auto idx = InvertedIndex::build(docs_of({"cat sat", "你好 cat", "dog"}), {1.5, 0.5});
    save_inverted_index(idx, dir / "b.bin");
    const auto back = load_inverted_index(dir / "b.bin");
    CHECK(back.terms() == idx.terms());
    CHECK(back.avgdl() == idx.avgdl());
    CHECK(back.params().k1 == 1.5);
    CHECK(back.params().b == 0.5);
    CHECK(bm25_search_topk(back, "cat 好", 5) == bm25_search_topk(idx, "cat 好", 5));
    std::filesystem::resize_file(dir / "b.bin", std::filesystem::file_size(dir / "b.bin") - 3);
    CHECK_THROWS_AS(load_inverted_index(dir / "b.bin"), FormatError);
}
