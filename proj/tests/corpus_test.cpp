#include "doctest.h"
#include "oracles.hpp"

#include "dshc/corpus.hpp"

#include <fstream>
#include <map>

using namespace dshc;

namespace {

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream(p, std::ios::binary) << content;
}

std::string error_of(const std::filesystem::path& p) {
    try {
        load_corpus(p);
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

std::string random_text(Rng& rng, std::size_t len) {
    static constexpr std::string_view alphabet = "abcdefghijklmnopqrstuvwxyz ";
    std::string s;
    for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[rng.below(alphabet.size())]);
    return s;
}

}  // namespace

TEST_CASE("load_corpus deduplicates responses") {
    oracle::TempDir dir("corpus-dedup");
    write_file(dir / "c.tsv", "hi\thello\nhi\thello\n");
    const auto c = load_corpus(dir / "c.tsv");
    CHECK(c.contexts.size() == 2);
    CHECK(c.database.size() == 1);
    CHECK(c.truth == std::vector<std::uint32_t>{0, 0});
}

TEST_CASE("load_corpus counts and ids") {
    oracle::TempDir dir("corpus-count");
    write_file(dir / "c.tsv", "a\tx\n\nb\ty\nc\tx\nd\tz\n");
    const auto c = load_corpus(dir / "c.tsv");
    REQUIRE(c.contexts.size() == 4);
    CHECK(c.database.size() == 3);
    CHECK(c.truth == std::vector<std::uint32_t>{0, 1, 0, 2});
    for (std::uint32_t i = 0; i < 4; ++i) CHECK(c.contexts[i].id == i);
    CHECK(c.database[2].text == "z");

    write_file(dir / "d.tsv", "p\tq\nr\ts\nt\tu\n");
    const auto d = load_corpus(dir / "d.tsv");
    CHECK(d.contexts.size() == 3);
    CHECK(d.database.size() == 3);
}

TEST_CASE("load_corpus errors name the line") {
    oracle::TempDir dir("corpus-err");
    write_file(dir / "one.tsv", "only one column\n");
    CHECK(error_of(dir / "one.tsv").find("line 1: expected 2 fields") != std::string::npos);
    write_file(dir / "three.tsv", "a\tb\nc\td\te\n");
    CHECK(error_of(dir / "three.tsv").find("line 2: expected 2 fields") != std::string::npos);
    write_file(dir / "emptyfield.tsv", "a\t\n");
    CHECK(error_of(dir / "emptyfield.tsv").find("line 1") != std::string::npos);
    write_file(dir / "empty.tsv", "");
    CHECK(error_of(dir / "empty.tsv").find("empty") != std::string::npos);
    CHECK(!error_of(dir / "missing.tsv").empty());
}

TEST_CASE("embedding store roundtrip is bit-exact") {
    oracle::TempDir dir("emb");
    EmbeddingStore s;
    s.vectors.resize(2, 3);
    s.vectors << 1.5f, -0.0f, 3.25e-20f, std::numeric_limits<float>::denorm_min(), 7.0f, -1e30f;
    save_embeddings(s, dir / "e.emb");
    CHECK(std::filesystem::file_size(dir / "e.emb") == 8 + 8 + 2 * 3 * 4);
    const auto back = load_embeddings(dir / "e.emb");
    REQUIRE(back.n() == 2);
    REQUIRE(back.d() == 3);
    CHECK(std::memcmp(back.vectors.data(), s.vectors.data(), 6 * sizeof(float)) == 0);
}

TEST_CASE("embedding loader reports distinct errors") {
    oracle::TempDir dir("emb-err");
    auto kind_of = [](const std::filesystem::path& p) {
        try {
            load_embeddings(p);
        } catch (const FormatError& e) {
            return e.kind();
        }
        return FormatError::Kind::Io;  // unreachable in these cases
    };

    // Header says 5 rows, payload holds 4.
    {
        std::ofstream out(dir / "trunc.emb", std::ios::binary);
        io::write_magic(out, kEmbeddingMagic);
        io::write_u32(out, 5);
        io::write_u32(out, 2);
        for (int i = 0; i < 8; ++i) io::write_f32(out, 0.5f);
    }
    CHECK(kind_of(dir / "trunc.emb") == FormatError::Kind::Truncated);
    try {
        load_embeddings(dir / "trunc.emb");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }

    write_file(dir / "magic.emb", "NOTMAGIC\x01\0\0\0\x01\0\0\0\0\0\0\0");
    CHECK(kind_of(dir / "magic.emb") == FormatError::Kind::BadMagic);

    {
        std::ofstream out(dir / "ovf.emb", std::ios::binary);
        io::write_magic(out, kEmbeddingMagic);
        io::write_u32(out, 0xFFFFFFFFU);
        io::write_u32(out, 0xFFFFFFFFU);
    }
    const auto k = kind_of(dir / "ovf.emb");
    CHECK((k == FormatError::Kind::Overflow || k == FormatError::Kind::Truncated));
    CHECK_THROWS_AS(load_embeddings(dir / "absent.emb"), FormatError);
}

TEST_CASE("checked_payload detects overflow") {
    CHECK(io::checked_payload(109105, 768, 4, "x") == 335170560ULL);
    CHECK_THROWS_AS(io::checked_payload(~0ULL, 3, 4, "x"), FormatError);
}

TEST_CASE("embedding payload bytes for the e-commerce database") {
    EmbeddingStore s;
    s.vectors.resize(109105, 1);
    CHECK(s.payload_bytes() * 768 == 335170560ULL);
    CHECK(dense_code_bytes(109105, 768) == 335170560ULL);
}

TEST_CASE("synth_embed is deterministic and unit norm") {
    const auto a = synth_embed("hello there", 768, 1);
    const auto b = synth_embed("hello there", 768, 1);
    CHECK((a.array() == b.array()).all());
    CHECK(!(a.array() == synth_embed("hello there", 768, 2).array()).all());
    CHECK(std::abs(a.norm() - 1.0f) < 1e-6f);
    const auto e = synth_embed("", 16, 3);
    CHECK(e[0] == 1.0f);
    CHECK(e.tail(15).isZero(0.0f));
    CHECK(std::abs(synth_embed("你好，世界", 64, 0).norm() - 1.0f) < 1e-6f);
    CHECK(synth_embed("x", 1, 0).size() == 1);
}

TEST_CASE("synth_embed separates distinct random texts") {
    Rng rng(0x5EED);
    double worst = -1.0;
    double sum = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto a = random_text(rng, 20);
        const auto b = random_text(rng, 20);
        if (a == b) continue;
        const double c = synth_embed(a, 768, 7).dot(synth_embed(b, 768, 7));
        worst = std::max(worst, c);
        sum += c;
    }
    MESSAGE("max cosine " << worst << ", mean " << sum / 1000.0);
    CHECK(worst < 0.5);
}

TEST_CASE("make_pairs counts, labels and exclusion") {
    const std::vector<std::uint32_t> two = {0, 1};
    const auto p = make_pairs(two, 2, 1, 9);
    REQUIRE(p.size() == 4);
    CHECK(p[0] == PairExample{0, 0, 1});
    CHECK(p[1] == PairExample{0, 1, 0});
    CHECK(p[2] == PairExample{1, 1, 1});
    CHECK(p[3] == PairExample{1, 0, 0});

    std::vector<std::uint32_t> pos(50);
    for (std::uint32_t i = 0; i < 50; ++i) pos[i] = (i * 3) % 20;
    const auto q = make_pairs(pos, 20, 3, 4);
    CHECK(q.size() == 200);
    std::map<int, int> labels;
    std::map<std::uint32_t, int> neg_hits;
    for (std::size_t i = 0; i < q.size(); ++i) {
        ++labels[q[i].label];
        CHECK(q[i].ctx_id == i / 4);
        if (i % 4 == 0) {
            CHECK(q[i].label == 1);
            CHECK(q[i].can_id == pos[i / 4]);
        } else {
            CHECK(q[i].label == 0);
            CHECK(q[i].can_id != pos[i / 4]);
            CHECK(q[i].can_id < 20);
            ++neg_hits[q[i].can_id];
        }
    }
    CHECK(labels[1] == 50);
    CHECK(labels[0] == 150);
    CHECK(neg_hits.size() == 20);  // every id is reachable
    CHECK(make_pairs(pos, 20, 3, 4) == q);
    CHECK(make_pairs(pos, 20, 3, 5) != q);

    CHECK_THROWS_AS(make_pairs(pos, 20, 20, 4), ArgumentError);
    CHECK_THROWS_AS(make_pairs(std::vector<std::uint32_t>{0}, 1, 0, 4), ArgumentError);
}

TEST_CASE("make_pairs on a corpus and pairs file roundtrip") {
    oracle::TempDir dir("pairs");
    write_file(dir / "c.tsv", "a\tx\nb\ty\nc\tx\n");
    const auto c = load_corpus(dir / "c.tsv");
    const auto p = make_pairs(c, 1, 3);
    REQUIRE(p.size() == 6);
    CHECK(p[4] == PairExample{2, 0, 1});
    CHECK(p[5] == PairExample{2, 1, 0});
    save_pairs(p, dir / "p.tsv");
    CHECK(load_pairs(dir / "p.tsv") == p);
}
