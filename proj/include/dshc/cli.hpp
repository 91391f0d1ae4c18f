#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dshc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct EmbedSynthetic {
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> corpus;  // generate one when absent
    std::size_t pairs = 1000;
    std::size_t topics = 20;
    std::size_t dim = 768;
    std::size_t negatives = 1;
    std::uint64_t seed = 0;
};

struct TrainHash {
    std::filesystem::path ctx_emb;
    std::filesystem::path can_emb;
    std::filesystem::path pairs;
    std::filesystem::path out;
    std::optional<std::filesystem::path> trace;
    std::size_t dim = 128;  // hash code length h
    std::size_t epochs = 5;
    std::size_t batch = 64;
    double lr = 1e-3;
    double gamma_min = 1e-4;
    double gamma_max = 1e-1;
    std::uint64_t seed = 0;
};

struct BuildIndex {
    std::string backend;  // bm25 | dense | hash
    std::filesystem::path out;
    std::optional<std::filesystem::path> corpus;
    std::optional<std::filesystem::path> emb;
    std::optional<std::filesystem::path> model;
    double k1 = 1.2;
    double b = 0.75;
};

struct Search {
    std::string backend;
    std::filesystem::path index;
    std::size_t k = 20;
    std::optional<std::string> query;
    std::optional<std::filesystem::path> query_emb;
    std::size_t row = 0;
    std::optional<std::filesystem::path> model;
    std::string metric = "dot";
};

struct Bench {
    std::filesystem::path corpus;
    std::filesystem::path ctx_emb;
    std::filesystem::path can_emb;
    std::optional<std::filesystem::path> bm25_index;
    std::optional<std::filesystem::path> dense_index;
    std::optional<std::filesystem::path> hash_index;
    std::optional<std::filesystem::path> model;
    std::filesystem::path out;
    std::size_t bsz = 16;
    std::size_t repetitions = 20;
    std::size_t warmup = 3;
    std::size_t max_queries = 0;  // 0 = all contexts
};

struct Report {
    std::filesystem::path input;
    std::filesystem::path out_dir;
};

using Command = std::variant<EmbedSynthetic, TrainHash, BuildIndex, Search, Bench, Report>;

struct ParseResult {
    std::optional<Command> command;
    int exit_code = kExitOk;  // meaningful when command is empty
    std::string output;       // help or usage error text
};

/// args excludes the program name.
ParseResult parse_args(const std::vector<std::string>& args);

/// Executes a validated command. Data goes to `out`, diagnostics to `err`.
int run(const Command& command, std::ostream& out, std::ostream& err);

/// parse_args + run with the process streams.
int main(int argc, char** argv);

}  // namespace dshc::cli
