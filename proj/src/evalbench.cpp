#include "dshc/evalbench.hpp"

#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace dshc {

int coverage_at_k(const SearchResult& results, std::uint64_t truth_id, std::size_t k) {
    const auto n = std::min(k, results.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (results[i].id == truth_id) return 1;
    }
    return 0;
}

double mean_coverage(std::span<const SearchResult> results, std::span<const std::uint64_t> truth, std::size_t k) {
    if (results.size() != truth.size()) throw ArgumentError("mean_coverage: results/truth size mismatch");
    if (results.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < results.size(); ++i) hits += static_cast<std::size_t>(coverage_at_k(results[i], truth[i], k));
    return static_cast<double>(hits) / static_cast<double>(results.size());
}

double CosineScorer::score(const ScoreItem& context, const ScoreItem& candidate) const {
    if (context.embedding.size() != candidate.embedding.size() || context.embedding.empty()) {
        throw ArgumentError("CosineScorer: embeddings missing or of different length");
    }
    const auto n = static_cast<Eigen::Index>(context.embedding.size());
    const Eigen::Map<const VectorXf> a(context.embedding.data(), n);
    const Eigen::Map<const VectorXf> b(candidate.embedding.data(), n);
    const double na = a.cast<double>().norm();
    const double nb = b.cast<double>().norm();
    if (na == 0.0 || nb == 0.0) return 0.5;
    const double cos = a.cast<double>().dot(b.cast<double>()) / (na * nb);
    return std::clamp((1.0 + cos) / 2.0, 0.0, 1.0);
}

ScoreItem CandidatePool::item(std::uint64_t id) const {
    ScoreItem out;
    if (!texts.empty()) {
        if (id >= texts.size()) throw ArgumentError("CandidatePool: id out of range");
        out.text = texts[id].text;
    }
    if (embeddings != nullptr) {
        if (id >= static_cast<std::uint64_t>(embeddings->rows())) throw ArgumentError("CandidatePool: id out of range");
        out.embedding = std::span<const float>(embeddings->data() + static_cast<Eigen::Index>(id) * embeddings->cols(),
                                               static_cast<std::size_t>(embeddings->cols()));
    }
    return out;
}

std::optional<double> correlation_at_k(const SearchResult& results, const ScoreItem& context, const Scorer& scorer,
                                       std::size_t k, const CandidatePool& pool) {
    const auto n = std::min(k, results.size());
    if (n == 0) return std::nullopt;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += scorer.score(context, pool.item(results[i].id));
    return sum / static_cast<double>(n);
}

StorageReport measure_storage(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string());
    std::string magic(8, '\0');
    if (!in.read(magic.data(), 8)) throw FormatError(FormatError::Kind::BadMagic, path.string() + ": too short");
    StorageReport r;
    r.file_bytes = std::filesystem::file_size(path);
    if (magic == kBinaryIndexMagic) {
        r.kind = IndexKind::Binary;
        const auto n = io::read_u32(in, path);
        const auto h = io::read_u32(in, path);
        r.code_bytes = binary_code_bytes(n, h);
    } else if (magic == kFlatIndexMagic || magic == kEmbeddingMagic) {
        r.kind = IndexKind::Flat;
        const auto n = io::read_u32(in, path);
        const auto d = io::read_u32(in, path);
        r.code_bytes = dense_code_bytes(n, d);
    } else if (magic == kInvertedIndexMagic) {
        in.close();
        r.kind = IndexKind::Inverted;
        r.code_bytes = load_inverted_index(path).code_bytes();
    } else {
        throw FormatError(FormatError::Kind::BadMagic, path.string() + ": unrecognized index magic");
    }
    return r;
}

namespace {

class Bm25Backend final : public SearchBackend {
  public:
    Bm25Backend(std::string name, const InvertedIndex& index) : name_(std::move(name)), index_(index) {}
    std::string name() const override { return name_; }
    std::vector<SearchResult> search(const QuerySet& q, std::size_t begin, std::size_t end, std::size_t k) const override {
        if (q.texts.size() < end) throw ArgumentError("bm25 backend: query texts missing");
        std::vector<SearchResult> out;
        out.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) out.push_back(bm25_search_topk(index_, q.texts[i], k));
        return out;
    }
    std::uint64_t code_bytes() const override { return index_.code_bytes(); }

  private:
    std::string name_;
    const InvertedIndex& index_;
};

class DenseBackend final : public SearchBackend {
  public:
    DenseBackend(std::string name, const FlatIndex& index, Metric metric)
        : name_(std::move(name)), index_(index), metric_(metric) {}
    std::string name() const override { return name_; }
    std::vector<SearchResult> search(const QuerySet& q, std::size_t begin, std::size_t end, std::size_t k) const override {
        if (static_cast<std::size_t>(q.vectors.rows()) < end) throw ArgumentError("dense backend: query vectors missing");
        const MatrixXfR block = q.vectors.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
        return dense_search_batch(index_, block, k, metric_);
    }
    std::uint64_t code_bytes() const override { return index_.code_bytes(); }

  private:
    std::string name_;
    const FlatIndex& index_;
    Metric metric_;
};

class HashBackend final : public SearchBackend {
  public:
    HashBackend(std::string name, const BinaryIndex& index) : name_(std::move(name)), index_(index) {}
    std::string name() const override { return name_; }
    std::vector<SearchResult> search(const QuerySet& q, std::size_t begin, std::size_t end, std::size_t k) const override {
        if (q.codes.size() < end) throw ArgumentError("hash backend: query codes missing");
        return binary_search_batch(index_, std::span(q.codes).subspan(begin, end - begin), k);
    }
    std::uint64_t code_bytes() const override { return index_.code_bytes(); }

  private:
    std::string name_;
    const BinaryIndex& index_;
};

double percentile_nearest_rank(const std::vector<double>& sorted, double p) {
    const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted.size())));
    return sorted[std::max<std::size_t>(rank, 1) - 1];
}

}  // namespace

std::unique_ptr<SearchBackend> make_bm25_backend(std::string name, const InvertedIndex& index) {
    return std::make_unique<Bm25Backend>(std::move(name), index);
}
std::unique_ptr<SearchBackend> make_dense_backend(std::string name, const FlatIndex& index, Metric metric) {
    return std::make_unique<DenseBackend>(std::move(name), index, metric);
}
std::unique_ptr<SearchBackend> make_hash_backend(std::string name, const BinaryIndex& index) {
    return std::make_unique<HashBackend>(std::move(name), index);
}

LatencyRun measure_latency(const SearchBackend& backend, const QuerySet& queries, std::size_t k,
                           const BenchConfig& config) {
    if (config.bsz == 0) throw ArgumentError("measure_latency: bsz must be >= 1");
    const std::size_t batches = (queries.count + config.bsz - 1) / config.bsz;
    if (batches < config.warmup + 1) {
        throw ArgumentError("measure_latency: " + std::to_string(queries.count) + " queries give " +
                            std::to_string(batches) + " batches, need at least " + std::to_string(config.warmup + 1));
    }
    auto bounds = [&](std::size_t b) {
        return std::pair{b * config.bsz, std::min(queries.count, (b + 1) * config.bsz)};
    };
    for (std::size_t b = 0; b < config.warmup; ++b) {
        const auto [begin, end] = bounds(b);
        (void)backend.search(queries, begin, end, k);
    }

    using Clock = std::chrono::steady_clock;
    LatencyRun run;
    run.results.reserve(queries.count);
    std::vector<double> samples;
    const std::size_t total = std::max(batches, config.repetitions);
    samples.reserve(total);
    for (std::size_t s = 0; s < total; ++s) {
        const auto [begin, end] = bounds(s % batches);
        const auto t0 = Clock::now();
        auto res = backend.search(queries, begin, end, k);
        const auto t1 = Clock::now();
        samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        if (s < batches) {
            for (auto& r : res) run.results.push_back(std::move(r));
        }
    }
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    run.stats.samples = n;
    run.stats.median_ms = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    run.stats.p95_ms = percentile_nearest_rank(sorted, 0.95);
    run.stats.mean_ms = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
    return run;
}

namespace {

Vector<double> unit_gaussian(Rng& rng, std::size_t d) {
    Vector<double> v(static_cast<Eigen::Index>(d));
    for (auto& x : v) x = rng.normal();
    return v;
}

/// normalize(base + scale * g / sqrt(d)); scale is the expected offset norm.
Vector<double> perturb(const Vector<double>& base, double scale, Rng& rng) {
    if (scale == 0.0) return base;
    const auto d = static_cast<double>(base.size());
    Vector<double> v = base + (scale / std::sqrt(d)) * unit_gaussian(rng, static_cast<std::size_t>(base.size()));
    return v.normalized();
}

}  // namespace

SyntheticBenchmark build_synthetic_benchmark(const SyntheticConfig& cfg) {
    if (cfg.n_clusters < 2) throw ArgumentError("synthetic benchmark: need at least 2 clusters");
    if (cfg.per_cluster < 1 || cfg.d < 1) throw ArgumentError("synthetic benchmark: sizes must be positive");
    if (!(cfg.noise >= 0.0) || !(cfg.spread >= 0.0)) throw ArgumentError("synthetic benchmark: noise must be >= 0");

    const std::size_t n = cfg.n_clusters * cfg.per_cluster;
    const auto rows = static_cast<Eigen::Index>(n);
    const auto cols = static_cast<Eigen::Index>(cfg.d);
    SyntheticBenchmark bench;
    bench.candidates.vectors.resize(rows, cols);
    bench.queries.vectors.resize(rows, cols);
    bench.train_contexts.vectors.resize(rows, cols);
    bench.cluster.resize(n);

    Rng center_rng(mix_seed(cfg.seed, 1));
    Rng cand_rng(mix_seed(cfg.seed, 2));
    Rng ctx_rng(mix_seed(cfg.seed, 3));
    Rng query_rng(mix_seed(cfg.seed, 4));
    Rng perm_rng(mix_seed(cfg.seed, 5));

    std::vector<Vector<double>> cands;
    cands.reserve(n);
    for (std::size_t c = 0; c < cfg.n_clusters; ++c) {
        const Vector<double> center = unit_gaussian(center_rng, cfg.d).normalized();
        for (std::size_t j = 0; j < cfg.per_cluster; ++j) {
            const auto id = c * cfg.per_cluster + j;
            cands.push_back(cfg.spread == 0.0 ? center : perturb(center, cfg.spread, cand_rng));
            bench.cluster[id] = static_cast<std::uint32_t>(c);
            bench.candidates.vectors.row(static_cast<Eigen::Index>(id)) = cands.back().transpose().cast<float>();
        }
    }
    for (std::size_t id = 0; id < n; ++id) {
        bench.train_contexts.vectors.row(static_cast<Eigen::Index>(id)) =
            perturb(cands[id], cfg.noise, ctx_rng).transpose().cast<float>();
    }

    bench.truth.resize(n);
    std::iota(bench.truth.begin(), bench.truth.end(), 0U);
    for (std::size_t i = n; i > 1; --i) std::swap(bench.truth[i - 1], bench.truth[perm_rng.below(i)]);
    for (std::size_t q = 0; q < n; ++q) {
        const auto& base = cands[bench.truth[q]];
        if (cfg.noise == 0.0) {
            bench.queries.vectors.row(static_cast<Eigen::Index>(q)) =
                bench.candidates.vectors.row(static_cast<Eigen::Index>(bench.truth[q]));
        } else {
            bench.queries.vectors.row(static_cast<Eigen::Index>(q)) =
                perturb(base, cfg.noise, query_rng).transpose().cast<float>();
        }
    }
    return bench;
}

std::vector<std::pair<std::string, std::string>> make_synthetic_dialogues(std::size_t pairs, std::size_t topics,
                                                                          std::uint64_t seed) {
    if (topics == 0) throw ArgumentError("make_synthetic_dialogues: need at least one topic");
    static constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh", "ch"};
    static constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
    Rng rng(seed);
    auto word = [&] {
        std::string w;
        const auto syllables = 2 + rng.below(2);
        for (std::uint64_t s = 0; s < syllables; ++s) {
            w += kOnsets[rng.below(std::size(kOnsets))];
            w += kVowels[rng.below(std::size(kVowels))];
        }
        return w;
    };
    constexpr std::size_t kTopicWords = 24;
    constexpr std::size_t kCommonWords = 40;
    std::vector<std::vector<std::string>> vocab(topics);
    for (auto& v : vocab) {
        for (std::size_t i = 0; i < kTopicWords; ++i) v.push_back(word());
    }
    std::vector<std::string> common;
    for (std::size_t i = 0; i < kCommonWords; ++i) common.push_back(word());

    auto sentence = [&](std::size_t topic, std::size_t len) {
        std::string s;
        for (std::size_t i = 0; i < len; ++i) {
            if (!s.empty()) s += ' ';
            s += rng.uniform() < 0.6 ? vocab[topic][rng.below(kTopicWords)] : common[rng.below(kCommonWords)];
        }
        return s;
    };
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(pairs);
    for (std::size_t i = 0; i < pairs; ++i) {
        const auto topic = static_cast<std::size_t>(rng.below(topics));
        const auto ctx_len = 5 + static_cast<std::size_t>(rng.below(6));
        const auto rsp_len = 6 + static_cast<std::size_t>(rng.below(6));
        out.emplace_back(sentence(topic, ctx_len), sentence(topic, rsp_len));
    }
    return out;
}

void write_corpus_tsv(std::span<const std::pair<std::string, std::string>> pairs, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError(FormatError::Kind::Io, "cannot write " + path.string());
    for (const auto& [ctx, rsp] : pairs) out << ctx << '\t' << rsp << '\n';
    if (!out) throw FormatError(FormatError::Kind::Io, "write failed: " + path.string());
}

BackendReport evaluate_backend(const SearchBackend& backend, const EvalInputs& in, const BenchConfig& config,
                               std::optional<std::filesystem::path> index_file) {
    if (in.queries == nullptr) throw ArgumentError("evaluate_backend: no queries");
    if (in.truth.size() != in.queries->count) throw ArgumentError("evaluate_backend: truth/query count mismatch");
    BackendReport report;
    report.method = backend.name();
    report.code_bytes = backend.code_bytes();
    if (index_file) report.file_bytes = std::filesystem::file_size(*index_file);
    const MatrixXfR& qv = in.queries->vectors;
    for (const auto k : config.ks) {
        auto run = measure_latency(backend, *in.queries, k, config);
        report.latency[k] = run.stats;
        report.coverage[k] = mean_coverage(run.results, in.truth, k);
        if (in.scorer == nullptr) {
            report.correlation[k] = std::nullopt;
            continue;
        }
        double sum = 0.0;
        std::size_t counted = 0;
        for (std::size_t q = 0; q < run.results.size(); ++q) {
            ScoreItem ctx;
            if (!in.query_texts.empty()) ctx.text = in.query_texts[q].text;
            if (qv.rows() > 0) {
                ctx.embedding = std::span<const float>(qv.data() + static_cast<Eigen::Index>(q) * qv.cols(),
                                                       static_cast<std::size_t>(qv.cols()));
            }
            if (const auto c = correlation_at_k(run.results[q], ctx, *in.scorer, k, in.pool)) {
                sum += *c;
                ++counted;
            }
        }
        report.correlation[k] = counted == 0 ? std::nullopt : std::optional<double>(sum / static_cast<double>(counted));
    }
    return report;
}

namespace {

std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

template <typename Map>
std::string cell(const Map& m, std::size_t k) {
    const auto it = m.find(k);
    if (it == m.end()) return "NA";
    if constexpr (std::is_same_v<typename Map::mapped_type, std::optional<double>>) {
        return it->second ? fixed4(*it->second) : "NA";
    } else if constexpr (std::is_same_v<typename Map::mapped_type, LatencyStats>) {
        return fixed4(it->second.median_ms);
    } else {
        return fixed4(it->second);
    }
}

}  // namespace

std::string format_report(std::span<const BackendReport> reports) {
    std::ostringstream os;
    os << "Method,Top-20,Top-100,Correlation-20,Correlation-100,code_bytes,file_bytes,latency20,latency100\n";
    for (const auto& r : reports) {
        os << r.method << ',' << cell(r.coverage, 20) << ',' << cell(r.coverage, 100) << ','
           << cell(r.correlation, 20) << ',' << cell(r.correlation, 100) << ',' << r.code_bytes << ','
           << r.file_bytes << ',' << cell(r.latency, 20) << ',' << cell(r.latency, 100) << '\n';
    }
    return os.str();
}

std::string format_storage_breakdown(std::span<const BackendReport> reports) {
    std::uint64_t largest = 0;
    for (const auto& r : reports) largest = std::max(largest, r.code_bytes);
    std::ostringstream os;
    os << "Method,code_bytes,file_bytes,overhead_bytes,fraction_of_largest\n";
    for (const auto& r : reports) {
        const auto overhead = r.file_bytes > r.code_bytes ? r.file_bytes - r.code_bytes : 0;
        const double frac = largest == 0 ? 0.0 : static_cast<double>(r.code_bytes) / static_cast<double>(largest);
        os << r.method << ',' << r.code_bytes << ',' << r.file_bytes << ',' << overhead << ',' << fixed4(frac) << '\n';
    }
    return os.str();
}

std::string format_latency_detail(std::span<const BackendReport> reports) {
    std::ostringstream os;
    os << "Method,K,median_ms,p95_ms,mean_ms,samples\n";
    for (const auto& r : reports) {
        for (const auto& [k, s] : r.latency) {
            os << r.method << ',' << k << ',' << fixed4(s.median_ms) << ',' << fixed4(s.p95_ms) << ','
               << fixed4(s.mean_ms) << ',' << s.samples << '\n';
        }
    }
    return os.str();
}

void emit_report(std::span<const BackendReport> reports, const std::filesystem::path& out_dir) {
    if (reports.empty()) throw ArgumentError("emit_report: no backends evaluated");
    std::filesystem::create_directories(out_dir);
    auto write = [&](const char* name, const std::string& body) {
        std::ofstream out(out_dir / name, std::ios::trunc);
        if (!out) throw FormatError(FormatError::Kind::Io, "cannot write " + (out_dir / name).string());
        out << body;
    };
    write("report.csv", format_report(reports));
    write("storage.csv", format_storage_breakdown(reports));
    write("latency.csv", format_latency_detail(reports));
}

std::string reports_to_json(std::span<const BackendReport> reports) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) {
        nlohmann::json j;
        j["method"] = r.method;
        j["code_bytes"] = r.code_bytes;
        j["file_bytes"] = r.file_bytes;
        for (const auto& [k, v] : r.coverage) j["coverage"][std::to_string(k)] = v;
        for (const auto& [k, v] : r.correlation) {
            j["correlation"][std::to_string(k)] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
        }
        for (const auto& [k, s] : r.latency) {
            j["latency"][std::to_string(k)] = {
                {"median_ms", s.median_ms}, {"p95_ms", s.p95_ms}, {"mean_ms", s.mean_ms}, {"samples", s.samples}};
        }
        arr.push_back(std::move(j));
    }
    return arr.dump(2);
}

std::vector<BackendReport> reports_from_json(const std::string& text) {
    std::vector<BackendReport> out;
    const auto arr = nlohmann::json::parse(text);
    for (const auto& j : arr) {
        BackendReport r;
        r.method = j.at("method").get<std::string>();
        r.code_bytes = j.at("code_bytes").get<std::uint64_t>();
        r.file_bytes = j.at("file_bytes").get<std::uint64_t>();
        if (j.contains("coverage")) {
            for (const auto& [k, v] : j["coverage"].items()) r.coverage[std::stoul(k)] = v.get<double>();
        }
        if (j.contains("correlation")) {
            for (const auto& [k, v] : j["correlation"].items()) {
                r.correlation[std::stoul(k)] = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
            }
        }
        if (j.contains("latency")) {
            for (const auto& [k, v] : j["latency"].items()) {
                r.latency[std::stoul(k)] = {v.at("median_ms").get<double>(), v.at("p95_ms").get<double>(),
                                            v.at("mean_ms").get<double>(), v.at("samples").get<std::size_t>()};
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace dshc
