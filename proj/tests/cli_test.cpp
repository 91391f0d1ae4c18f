#include "doctest.h"
#include "oracles.hpp"

#include "dshc/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace dshc;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Runs the installed binary through the shell, capturing both streams.
Outcome invoke(const oracle::TempDir& dir, const std::string& args) {
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    const std::string cmd = std::string(DSHC_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.out = slurp(out);
    o.err = slurp(err);
    return o;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("parse train-hash") {
    const auto r = cli::parse_args({"train-hash", "--dim", "128", "--ctx-emb", "a", "--can-emb", "b", "--pairs", "p",
                                    "--out", "m"});
    REQUIRE(r.command.has_value());
    const auto& t = std::get<cli::TrainHash>(*r.command);
    CHECK(t.dim == 128);
    CHECK(t.epochs == 5);
    CHECK(t.batch == 64);
    CHECK(t.out == "m");
}

TEST_CASE("parse help and usage errors") {
    const auto help = cli::parse_args({"--help"});
    CHECK(!help.command);
    CHECK(help.exit_code == cli::kExitOk);
    CHECK(help.output.find("train-hash") != std::string::npos);

    const auto bad = cli::parse_args({"frobnicate"});
    CHECK(!bad.command);
    CHECK(bad.exit_code == cli::kExitUsage);

    const auto none = cli::parse_args({});
    CHECK(none.exit_code == cli::kExitUsage);

    const auto missing = cli::parse_args({"train-hash", "--dim", "128"});
    CHECK(missing.exit_code == cli::kExitUsage);
    CHECK(missing.output.find("--ctx-emb") != std::string::npos);

    const auto backend = cli::parse_args({"build-index", "--backend", "faiss", "--out", "x"});
    CHECK(backend.exit_code == cli::kExitUsage);
}

TEST_CASE("binary exit codes") {
    oracle::TempDir dir("cli-codes");
    CHECK(invoke(dir, "--help").code == 0);
    CHECK(invoke(dir, "frobnicate").code == 2);
    const auto missing = invoke(dir, "build-index --backend dense --emb " + (dir / "nope.emb").string() + " --out " +
                                         (dir / "x.idx").string());
    CHECK(missing.code == 1);
    CHECK(missing.err.find((dir / "nope.emb").string()) != std::string::npos);
    const auto no_flag = invoke(dir, "build-index --backend hash --out " + (dir / "x.idx").string());
    CHECK(no_flag.code == 2);
}

TEST_CASE("smoke pipeline") {
    oracle::TempDir dir("cli-smoke");
    const std::string d = dir.path.string();
    REQUIRE(invoke(dir, "embed-synthetic --out-dir " + d + " --pairs 1000 --dim 64 --seed 3").code == 0);
    for (const char* f : {"corpus.tsv", "ctx.emb", "can.emb", "pairs.tsv"}) CHECK(std::filesystem::exists(dir / f));

    REQUIRE(invoke(dir, "train-hash --ctx-emb " + d + "/ctx.emb --can-emb " + d + "/can.emb --pairs " + d +
                            "/pairs.tsv --out " + d + "/model.bin --dim 32 --epochs 2 --trace " + d + "/trace.csv")
                .code == 0);
    CHECK(std::filesystem::exists(dir / "trace.csv"));

    REQUIRE(invoke(dir, "build-index --backend bm25 --corpus " + d + "/corpus.tsv --out " + d + "/bm25.idx").code == 0);
    REQUIRE(invoke(dir, "build-index --backend dense --emb " + d + "/can.emb --out " + d + "/dense.idx").code == 0);
    REQUIRE(invoke(dir, "build-index --backend hash --emb " + d + "/can.emb --model " + d + "/model.bin --out " + d +
                            "/hash.idx")
                .code == 0);

    const auto s = invoke(dir, "search --backend hash --index " + d + "/hash.idx --model " + d + "/model.bin --query-emb " +
                                   d + "/ctx.emb --row 0 --k 20");
    REQUIRE(s.code == 0);
    CHECK(line_count(s.out) == 20);
    std::istringstream lines(s.out);
    std::string line;
    std::size_t rank = 1;
    while (std::getline(lines, line)) {
        CHECK(line.rfind(std::to_string(rank++) + "\t", 0) == 0);
        CHECK(std::count(line.begin(), line.end(), '\t') == 2);
    }
    const auto dense = invoke(dir, "search --backend dense --index " + d + "/dense.idx --query-emb " + d +
                                       "/ctx.emb --row 1 --k 5");
    CHECK(dense.code == 0);
    CHECK(line_count(dense.out) == 5);
    const auto bm = invoke(dir, "search --backend bm25 --index " + d + "/bm25.idx --query zzzzqqqq --k 5");
    CHECK(bm.code == 0);
    CHECK(bm.out.empty());

    REQUIRE(invoke(dir, "bench --corpus " + d + "/corpus.tsv --ctx-emb " + d + "/ctx.emb --can-emb " + d +
                            "/can.emb --bm25-index " + d + "/bm25.idx --dense-index " + d + "/dense.idx --hash-index " +
                            d + "/hash.idx --model " + d + "/model.bin --out " + d + "/bench.json")
                .code == 0);
    const auto rep = invoke(dir, "report --input " + d + "/bench.json --out-dir " + d + "/report");
    REQUIRE(rep.code == 0);
    const auto csv = slurp(dir / "report/report.csv");
    CHECK(line_count(csv) == 4);  // header + 3 backends
    CHECK(csv.find("\nBM25,") != std::string::npos);
    CHECK(csv.find("\nDense,") != std::string::npos);
    CHECK(csv.find("\nDSHC-32,") != std::string::npos);
}
