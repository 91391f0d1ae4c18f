#include "doctest.h"
#include "oracles.hpp"

#include "dshc/binary_index.hpp"

using namespace dshc;

TEST_CASE("pack uses LSB-first bit order") {
    SignCode alt(8);
    alt << 1, -1, 1, -1, 1, -1, 1, -1;
    const auto p = pack(alt);
    REQUIRE(p.bytes.size() == 1);
    CHECK(p.bytes[0] == 0x55);
    CHECK(pack(SignCode::Ones(8)).bytes[0] == 0xFF);
    CHECK(pack(SignCode::Constant(8, -1)).bytes[0] == 0x00);

    SignCode nine = SignCode::Constant(9, -1);
    nine[8] = 1;
    const auto q = pack(nine);
    REQUIRE(q.bytes.size() == 2);
    CHECK(q.bytes[0] == 0x00);
    CHECK(q.bytes[1] == 0x01);

    SignCode bad = SignCode::Ones(4);
    bad[2] = 0;
    CHECK_THROWS_AS(pack(bad), ArgumentError);
}

TEST_CASE("pack and unpack roundtrip") {
    Rng rng(1);
    for (std::size_t h : {1U, 7U, 16U, 64U, 100U, 128U}) {
        for (int i = 0; i < 1000; ++i) {
            const auto c = oracle::random_code(rng, h);
            const auto p = pack(c);
            CHECK(p.h == h);
            CHECK(p.bytes.size() == (h + 7) / 8);
            CHECK(unpack(p) == c);
        }
    }
}

TEST_CASE("hamming distance equals the dot-product identity for all h=8 pairs") {
    int mismatches = 0;
    for (unsigned a = 0; a < 256; ++a) {
        for (unsigned b = 0; b < 256; ++b) {
            const PackedCode pa{8, {static_cast<std::uint8_t>(a)}};
            const PackedCode pb{8, {static_cast<std::uint8_t>(b)}};
            if (static_cast<int>(hamming_distance(pa, pb)) != oracle::hamming_from_dot(unpack(pa), unpack(pb))) ++mismatches;
        }
    }
    CHECK(mismatches == 0);
}

TEST_CASE("hamming distance basics and metric properties") {
    Rng rng(2);
    const auto a = pack(oracle::random_code(rng, 8));
    PackedCode comp = a;
    comp.bytes[0] = static_cast<std::uint8_t>(~comp.bytes[0]);
    CHECK(hamming_distance(a, a) == 0);
    CHECK(hamming_distance(a, comp) == 8);
    for (int i = 0; i < 500; ++i) {
        const auto x = pack(oracle::random_code(rng, 100));
        const auto y = pack(oracle::random_code(rng, 100));
        const auto z = pack(oracle::random_code(rng, 100));
        CHECK(hamming_distance(x, y) == hamming_distance(y, x));
        CHECK(hamming_distance(x, z) <= hamming_distance(x, y) + hamming_distance(y, z));
        CHECK((hamming_distance(x, y) == 0) == (x.bytes == y.bytes));
    }
    CHECK_THROWS_AS(hamming_distance(pack(SignCode::Ones(8)), pack(SignCode::Ones(16))), ArgumentError);
}

TEST_CASE("binary search ordering and tie rule") {
    // Distances (0, 3, 1) from the query.
    SignCode q = SignCode::Ones(8);
    SignCode c1 = q;
    c1.head(3).setConstant(-1);
    SignCode c2 = q;
    c2[5] = -1;
    const std::vector<SignCode> db = {q, c1, c2};
    const auto index = BinaryIndex::build(std::span<const SignCode>(db));
    const auto r = binary_search_topk(index, pack(q), 2);
    REQUIRE(r.size() == 2);
    CHECK(r[0] == Hit{0, 0});
    CHECK(r[1] == Hit{2, 1});

    const std::vector<SignCode> tied = {c1, c2, c2, q};
    const auto t = binary_search_topk(BinaryIndex::build(std::span<const SignCode>(tied)), pack(q), 3);
    CHECK(t == SearchResult{{3, 0}, {1, 1}, {2, 1}});
    CHECK(binary_search_topk(index, pack(q), 10).size() == 3);
    CHECK_THROWS_AS(binary_search_topk(index, pack(SignCode::Ones(16)), 1), ArgumentError);
    CHECK_THROWS_AS(binary_search_topk(index, pack(q), 0), ArgumentError);
}

TEST_CASE("binary search matches the full-sort oracle") {
    Rng rng(3);
    for (std::size_t h : {16U, 64U, 100U, 128U, 256U, 512U}) {
        std::vector<SignCode> db;
        for (int i = 0; i < 2000; ++i) db.push_back(oracle::random_code(rng, h));
        std::vector<std::uint64_t> ids(db.size());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
        const auto index = BinaryIndex::build(std::span<const SignCode>(db), ids);
        for (int qi = 0; qi < 10; ++qi) {
            const auto q = oracle::random_code(rng, h);
            for (std::size_t k : {1U, 20U, 100U}) CHECK(binary_search_topk(index, pack(q), k) == oracle::hamming_oracle(db, q, k));
        }
    }
}

TEST_CASE("binary index file roundtrip and errors") {
    oracle::TempDir dir("bidx");
    Rng rng(4);
    std::vector<SignCode> db;
    for (int i = 0; i < 37; ++i) db.push_back(oracle::random_code(rng, 13));
    std::vector<std::uint64_t> ids;
    for (int i = 0; i < 37; ++i) ids.push_back(1000 + 7 * i);
    const auto index = BinaryIndex::build(std::span<const SignCode>(db), ids);
    CHECK(index.code_bytes() == 37 * 2);
    save_binary_index(index, dir / "i.bin");
    CHECK(std::filesystem::file_size(dir / "i.bin") == 8 + 8 + 37 * 2 + 37 * 8);
    const auto back = load_binary_index(dir / "i.bin");
    REQUIRE(back.size() == 37);
    CHECK(back.h() == 13);
    for (std::size_t i = 0; i < 37; ++i) {
        CHECK(back.code(i).bytes == index.code(i).bytes);
        CHECK(back.ids()[i] == ids[i]);
    }

    std::filesystem::resize_file(dir / "i.bin", std::filesystem::file_size(dir / "i.bin") - 1);
    CHECK_THROWS_AS(load_binary_index(dir / "i.bin"), FormatError);
    {
        std::ofstream out(dir / "pad.bin", std::ios::binary);
        io::write_magic(out, kBinaryIndexMagic);
        io::write_u32(out, 1);
        io::write_u32(out, 4);
        const std::uint8_t byte = 0xF0;
        io::write_bytes(out, &byte, 1);
        io::write_u64(out, 0);
    }
    CHECK_THROWS_AS(load_binary_index(dir / "pad.bin"), FormatError);
}

TEST_CASE("binary code bytes") {
    CHECK(binary_code_bytes(109105, 128) == 1745680ULL);
    CHECK(binary_code_bytes(109105, 512) == 6982720ULL);
    CHECK(binary_code_bytes(109105, 16) == 218210ULL);
    CHECK(binary_code_bytes(109105, 32) == 436420ULL);
    CHECK(binary_code_bytes(442280, 128) == 7076480ULL);
    CHECK(binary_code_bytes(10, 13) == 20ULL);
    CHECK(dense_code_bytes(1, 768) / binary_code_bytes(1, 128) == 192);
}
