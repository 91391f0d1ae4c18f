#include "dshc/cli.hpp"

#include "dshc/binary_index.hpp"
#include "dshc/bm25.hpp"
#include "dshc/corpus.hpp"
#include "dshc/evalbench.hpp"
#include "dshc/flat_index.hpp"
#include "dshc/training.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace dshc::cli {

namespace {

struct Bindings {
    EmbedSynthetic embed;
    TrainHash train;
    BuildIndex build;
    Search search;
    Bench bench;
    Report report;
};

void configure(CLI::App& app, Bindings& b) {
    app.set_help_all_flag("--help-all", "Show help for every subcommand");
    app.set_config("--config", "", "TOML config file; command-line flags take precedence");
    app.require_subcommand(1, 1);

    auto* embed = app.add_subcommand("embed-synthetic", "Write a corpus, its synthetic embeddings and training pairs");
    embed->add_option("--out-dir", b.embed.out_dir, "Output directory")->required();
    embed->add_option_function<std::string>("--corpus", [&](const std::string& v) { b.embed.corpus = v; },
                                            "Existing context<TAB>response corpus (otherwise one is generated)");
    embed->add_option("--pairs", b.embed.pairs, "Generated dialogue pairs")->capture_default_str()->check(CLI::PositiveNumber);
    embed->add_option("--topics", b.embed.topics, "Generated topics")->capture_default_str()->check(CLI::PositiveNumber);
    embed->add_option("--dim", b.embed.dim, "Embedding dimension d")->capture_default_str()->check(CLI::PositiveNumber);
    embed->add_option("--negatives", b.embed.negatives, "Negatives per positive pair")->capture_default_str()->check(CLI::PositiveNumber);
    embed->add_option("--seed", b.embed.seed, "Random seed")->capture_default_str();

    auto* train = app.add_subcommand("train-hash", "Train the hashing autoencoders");
    train->add_option("--ctx-emb", b.train.ctx_emb, "Context embeddings (DSHCEMB1)")->required();
    train->add_option("--can-emb", b.train.can_emb, "Candidate embeddings (DSHCEMB1)")->required();
    train->add_option("--pairs", b.train.pairs, "Pair file ctx_id<TAB>can_id<TAB>S")->required();
    train->add_option("--out", b.train.out, "Model output (DSHCMDL1)")->required();
    train->add_option("--dim", b.train.dim, "Hash code length h (e.g. 16,32,48,64,128,256,512,1024)")
        ->capture_default_str()->check(CLI::PositiveNumber);
    train->add_option("--epochs", b.train.epochs)->capture_default_str();
    train->add_option("--batch", b.train.batch)->capture_default_str()->check(CLI::PositiveNumber);
    train->add_option("--lr", b.train.lr)->capture_default_str()->check(CLI::NonNegativeNumber);
    train->add_option("--gamma-min", b.train.gamma_min)->capture_default_str();
    train->add_option("--gamma-max", b.train.gamma_max)->capture_default_str();
    train->add_option("--seed", b.train.seed)->capture_default_str();
    train->add_option_function<std::string>("--trace", [&](const std::string& v) { b.train.trace = v; },
                                            "Per-minibatch loss CSV");

    auto* build = app.add_subcommand("build-index", "Build a bm25, dense or hash index");
    build->add_option("--backend", b.build.backend)->required()->check(CLI::IsMember({"bm25", "dense", "hash"}));
    build->add_option("--out", b.build.out, "Index output file")->required();
    build->add_option_function<std::string>("--corpus", [&](const std::string& v) { b.build.corpus = v; },
                                            "Corpus TSV (bm25)");
    build->add_option_function<std::string>("--emb", [&](const std::string& v) { b.build.emb = v; },
                                            "Candidate embeddings (dense, hash)");
    build->add_option_function<std::string>("--model", [&](const std::string& v) { b.build.model = v; },
                                            "Hash model (hash)");
    build->add_option("--k1", b.build.k1)->capture_default_str();
    build->add_option("--b", b.build.b)->capture_default_str();

    auto* search = app.add_subcommand("search", "Top-K search; prints rank<TAB>id<TAB>score");
    search->add_option("--backend", b.search.backend)->required()->check(CLI::IsMember({"bm25", "dense", "hash"}));
    search->add_option("--index", b.search.index)->required();
    search->add_option("--k", b.search.k)->capture_default_str()->check(CLI::PositiveNumber);
    search->add_option_function<std::string>("--query", [&](const std::string& v) { b.search.query = v; },
                                             "Query text (bm25)");
    search->add_option_function<std::string>("--query-emb", [&](const std::string& v) { b.search.query_emb = v; },
                                             "Query embeddings (dense, hash)");
    search->add_option("--row", b.search.row, "Row of --query-emb to search with")->capture_default_str();
    search->add_option_function<std::string>("--model", [&](const std::string& v) { b.search.model = v; },
                                             "Hash model (hash)");
    search->add_option("--metric", b.search.metric)->capture_default_str()->check(CLI::IsMember({"dot", "cosine"}));

    auto* bench = app.add_subcommand("bench", "Evaluate coverage, correlation, storage and latency");
    bench->add_option("--corpus", b.bench.corpus)->required();
    bench->add_option("--ctx-emb", b.bench.ctx_emb)->required();
    bench->add_option("--can-emb", b.bench.can_emb)->required();
    bench->add_option_function<std::string>("--bm25-index", [&](const std::string& v) { b.bench.bm25_index = v; });
    bench->add_option_function<std::string>("--dense-index", [&](const std::string& v) { b.bench.dense_index = v; });
    bench->add_option_function<std::string>("--hash-index", [&](const std::string& v) { b.bench.hash_index = v; });
    bench->add_option_function<std::string>("--model", [&](const std::string& v) { b.bench.model = v; });
    bench->add_option("--out", b.bench.out, "Results JSON")->required();
    bench->add_option("--bsz", b.bench.bsz)->capture_default_str()->check(CLI::PositiveNumber);
    bench->add_option("--reps", b.bench.repetitions)->capture_default_str();
    bench->add_option("--warmup", b.bench.warmup)->capture_default_str();
    bench->add_option("--max-queries", b.bench.max_queries, "0 = all contexts")->capture_default_str();

    auto* report = app.add_subcommand("report", "Write report.csv, storage.csv and latency.csv from bench results");
    report->add_option("--input", b.report.input)->required();
    report->add_option("--out-dir", b.report.out_dir)->required();
}

void require_file(const std::filesystem::path& p) {
    if (!std::filesystem::is_regular_file(p)) throw std::runtime_error("input file not found: " + p.string());
}

template <typename T>
const T& need(const std::optional<T>& v, const char* flag, const std::string& backend) {
    if (!v) throw CLI::RequiredError(std::string(flag) + " (required for --backend " + backend + ")");
    return *v;
}

int run_embed(const EmbedSynthetic& c, std::ostream& out, std::ostream& err) {
    if (c.corpus) require_file(*c.corpus);
    std::filesystem::create_directories(c.out_dir);
    const auto corpus_path = c.out_dir / "corpus.tsv";
    if (c.corpus) {
        if (!std::filesystem::exists(corpus_path) || !std::filesystem::equivalent(*c.corpus, corpus_path)) {
            std::filesystem::copy_file(*c.corpus, corpus_path, std::filesystem::copy_options::overwrite_existing);
        }
    } else {
        write_corpus_tsv(make_synthetic_dialogues(c.pairs, c.topics, c.seed), corpus_path);
    }
    const auto corpus = load_corpus(corpus_path);
    const auto embed_seed = mix_seed(c.seed, 0xE3B);
    save_embeddings(synth_embed_all(corpus.contexts, c.dim, embed_seed), c.out_dir / "ctx.emb");
    save_embeddings(synth_embed_all(corpus.database, c.dim, embed_seed), c.out_dir / "can.emb");
    save_pairs(make_pairs(corpus, c.negatives, mix_seed(c.seed, 0x9A1)), c.out_dir / "pairs.tsv");
    err << "embed-synthetic: " << corpus.contexts.size() << " contexts, " << corpus.database.size()
        << " candidates, d=" << c.dim << " -> " << c.out_dir.string() << '\n';
    out << (c.out_dir / "corpus.tsv").string() << '\n'
        << (c.out_dir / "ctx.emb").string() << '\n'
        << (c.out_dir / "can.emb").string() << '\n'
        << (c.out_dir / "pairs.tsv").string() << '\n';
    return kExitOk;
}

int run_train(const TrainHash& c, std::ostream&, std::ostream& err) {
    require_file(c.ctx_emb);
    require_file(c.can_emb);
    require_file(c.pairs);
    const auto ctx = load_embeddings(c.ctx_emb);
    const auto can = load_embeddings(c.can_emb);
    const auto pairs = load_pairs(c.pairs);
    if (ctx.d() != can.d()) throw std::runtime_error("context and candidate embeddings differ in dimension");

    TrainConfig cfg;
    cfg.epochs = c.epochs;
    cfg.batch_size = c.batch;
    cfg.learning_rate = c.lr;
    cfg.gamma_min = c.gamma_min;
    cfg.gamma_max = c.gamma_max;
    cfg.seed = c.seed;
    auto model = HashModel<float>::xavier(static_cast<Eigen::Index>(ctx.d()), static_cast<Eigen::Index>(c.dim),
                                          mix_seed(c.seed, 0x1417));
    const auto trace = train(model, ctx, can, pairs, cfg, [&](std::size_t epoch, double mean) {
        err << "epoch " << epoch + 1 << "/" << cfg.epochs << " mean loss " << mean << '\n';
    });
    save_model(model, c.out);
    if (c.trace) {
        std::ofstream t(*c.trace, std::ios::trunc);
        if (!t) throw std::runtime_error("cannot write " + c.trace->string());
        t << "epoch,step,gamma,preserved,hash,quantization,total\n";
        t.precision(10);
        for (std::size_t i = 0; i < trace.steps.size(); ++i) {
            const auto& s = trace.steps[i];
            t << i / trace.steps_per_epoch << ',' << i % trace.steps_per_epoch << ',' << s.gamma << ','
              << s.preserved << ',' << s.hash << ',' << s.quantization << ',' << s.total << '\n';
        }
    }
    return kExitOk;
}

int run_build(const BuildIndex& c, std::ostream&, std::ostream& err) {
    if (c.backend == "bm25") {
        const auto& corpus_path = need(c.corpus, "--corpus", c.backend);
        require_file(corpus_path);
        const auto corpus = load_corpus(corpus_path);
        const auto index = InvertedIndex::build(corpus.database, {c.k1, c.b});
        save_inverted_index(index, c.out);
        err << "bm25 index: " << index.doc_count() << " docs, " << index.terms().size() << " terms\n";
    } else if (c.backend == "dense") {
        const auto& emb = need(c.emb, "--emb", c.backend);
        require_file(emb);
        const auto index = FlatIndex::from_store(load_embeddings(emb));
        save_flat_index(index, c.out);
        err << "dense index: n=" << index.size() << " d=" << index.dim() << '\n';
    } else {
        const auto& emb = need(c.emb, "--emb", c.backend);
        const auto& model_path = need(c.model, "--model", c.backend);
        require_file(emb);
        require_file(model_path);
        const auto model = load_model(model_path);
        const auto codes = export_codes(model, Side::Candidate, load_embeddings(emb));
        if (codes.empty()) throw std::runtime_error("no embeddings to index in " + emb.string());
        const auto index = BinaryIndex::build(std::span<const SignCode>(codes));
        save_binary_index(index, c.out);
        err << "hash index: n=" << index.size() << " h=" << index.h() << '\n';
    }
    return kExitOk;
}

VectorXf query_row(const std::filesystem::path& path, std::size_t row) {
    require_file(path);
    const auto store = load_embeddings(path);
    if (row >= store.n()) {
        throw std::runtime_error("--row " + std::to_string(row) + " out of range for " + path.string() + " (n=" +
                                 std::to_string(store.n()) + ")");
    }
    return store.vectors.row(static_cast<Eigen::Index>(row)).transpose();
}

int run_search(const Search& c, std::ostream& out, std::ostream&) {
    require_file(c.index);
    SearchResult result;
    if (c.backend == "bm25") {
        const auto& q = need(c.query, "--query", c.backend);
        result = bm25_search_topk(load_inverted_index(c.index), q, c.k);
    } else if (c.backend == "dense") {
        const auto q = query_row(need(c.query_emb, "--query-emb", c.backend), c.row);
        result = dense_search_topk(load_flat_index(c.index), std::span<const float>(q.data(), q.size()), c.k,
                                   c.metric == "cosine" ? Metric::Cosine : Metric::Dot);
    } else {
        const auto q = query_row(need(c.query_emb, "--query-emb", c.backend), c.row);
        const auto& model_path = need(c.model, "--model", c.backend);
        require_file(model_path);
        const auto model = load_model(model_path);
        const SignCode code = sign_quantize(encode(model, Side::Context, q)).cast<std::int8_t>();
        result = binary_search_topk(load_binary_index(c.index), pack(code), c.k);
    }
    std::ostringstream os;
    os.precision(9);
    for (std::size_t i = 0; i < result.size(); ++i) {
        os << i + 1 << '\t' << result[i].id << '\t' << result[i].score << '\n';
    }
    out << os.str();
    return kExitOk;
}

int run_bench(const Bench& c, std::ostream& out, std::ostream& err) {
    require_file(c.corpus);
    require_file(c.ctx_emb);
    require_file(c.can_emb);
    for (const auto* p : {&c.bm25_index, &c.dense_index, &c.hash_index, &c.model}) {
        if (*p) require_file(**p);
    }
    if (!c.bm25_index && !c.dense_index && !c.hash_index) {
        throw CLI::RequiredError("at least one of --bm25-index, --dense-index, --hash-index");
    }
    if (c.hash_index && !c.model) throw CLI::RequiredError("--model (required with --hash-index)");

    const auto corpus = load_corpus(c.corpus);
    const auto ctx = load_embeddings(c.ctx_emb);
    const auto can = load_embeddings(c.can_emb);
    if (ctx.n() != corpus.contexts.size()) throw std::runtime_error("context embeddings do not match corpus size");
    if (can.n() != corpus.database.size()) throw std::runtime_error("candidate embeddings do not match database size");

    const std::size_t nq = c.max_queries == 0 ? corpus.contexts.size() : std::min(c.max_queries, corpus.contexts.size());
    QuerySet queries;
    queries.count = nq;
    queries.vectors = ctx.vectors.topRows(static_cast<Eigen::Index>(nq));
    for (std::size_t i = 0; i < nq; ++i) queries.texts.push_back(corpus.contexts[i].text);
    std::vector<std::uint64_t> truth(corpus.truth.begin(), corpus.truth.begin() + static_cast<std::ptrdiff_t>(nq));

    BenchConfig cfg;
    cfg.bsz = c.bsz;
    cfg.repetitions = c.repetitions;
    cfg.warmup = c.warmup;

    CosineScorer scorer;
    EvalInputs in;
    in.queries = &queries;
    in.truth = truth;
    in.scorer = &scorer;
    in.query_texts = std::span(corpus.contexts).first(nq);
    in.pool.texts = corpus.database;
    in.pool.embeddings = &can.vectors;

    std::vector<BackendReport> reports;
    if (c.bm25_index) {
        const auto index = load_inverted_index(*c.bm25_index);
        reports.push_back(evaluate_backend(*make_bm25_backend("BM25", index), in, cfg, *c.bm25_index));
    }
    if (c.dense_index) {
        const auto index = load_flat_index(*c.dense_index);
        reports.push_back(evaluate_backend(*make_dense_backend("Dense", index), in, cfg, *c.dense_index));
    }
    if (c.hash_index) {
        const auto model = load_model(*c.model);
        const auto index = load_binary_index(*c.hash_index);
        EmbeddingStore qstore;
        qstore.vectors = queries.vectors;
        for (const auto& code : export_codes(model, Side::Context, qstore)) queries.codes.push_back(pack(code));
        const auto name = "DSHC-" + std::to_string(index.h());
        reports.push_back(evaluate_backend(*make_hash_backend(name, index), in, cfg, *c.hash_index));
    }
    std::ofstream f(c.out, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + c.out.string());
    f << reports_to_json(reports) << '\n';
    for (const auto& r : reports) err << "bench: " << r.method << " done\n";
    out << c.out.string() << '\n';
    return kExitOk;
}

int run_report(const Report& c, std::ostream& out, std::ostream&) {
    require_file(c.input);
    std::ifstream in(c.input);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto reports = reports_from_json(ss.str());
    emit_report(reports, c.out_dir);
    out << format_report(reports);
    return kExitOk;
}

}  // namespace

ParseResult parse_args(const std::vector<std::string>& args) {
    CLI::App app{"Candidate recall for retrieval-based dialogue: BM25, dense and semantic-hash indices", "dshc"};
    Bindings b;
    configure(app, b);
    ParseResult result;
    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::CallForHelp&) {
        result.output = app.help();
        return result;
    } catch (const CLI::CallForAllHelp&) {
        result.output = app.help("", CLI::AppFormatMode::All);
        return result;
    } catch (const CLI::ParseError& e) {
        result.exit_code = kExitUsage;
        result.output = std::string("error: ") + e.what() + "\n\n" + app.help();
        return result;
    }
    const auto* sub = app.get_subcommands().front();
    const auto name = sub->get_name();
    if (name == "embed-synthetic") {
        result.command = b.embed;
    } else if (name == "train-hash") {
        result.command = b.train;
    } else if (name == "build-index") {
        result.command = b.build;
    } else if (name == "search") {
        result.command = b.search;
    } else if (name == "bench") {
        result.command = b.bench;
    } else {
        result.command = b.report;
    }
    return result;
}

int run(const Command& command, std::ostream& out, std::ostream& err) {
    try {
        return std::visit(
            [&](const auto& c) -> int {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, EmbedSynthetic>) return run_embed(c, out, err);
                else if constexpr (std::is_same_v<T, TrainHash>) return run_train(c, out, err);
                else if constexpr (std::is_same_v<T, BuildIndex>) return run_build(c, out, err);
                else if constexpr (std::is_same_v<T, Search>) return run_search(c, out, err);
                else if constexpr (std::is_same_v<T, Bench>) return run_bench(c, out, err);
                else return run_report(c, out, err);
            },
            command);
    } catch (const CLI::ParseError& e) {
        err << "error: missing required flag " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    auto parsed = parse_args(args);
    if (!parsed.command) {
        (parsed.exit_code == kExitOk ? std::cout : std::cerr) << parsed.output;
        return parsed.exit_code;
    }
    return run(*parsed.command, std::cout, std::cerr);
}

}  // namespace dshc::cli
