#pragma once

#include "dshc/corpus.hpp"
#include "dshc/hash_model.hpp"
#include "dshc/losses.hpp"

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace dshc {

/// Batch means of the three objective terms and their weighted sum.
struct LossBreakdown {
    double preserved = 0.0;
    double hash = 0.0;
    double quantization = 0.0;
    double gamma = 0.0;
    double total = 0.0;
};

/// Embeddings of a minibatch laid out as columns.
template <typename Scalar>
struct PairBatch {
    Matrix<Scalar> ctx;  // d x B
    Matrix<Scalar> can;  // d x B
    std::vector<int> labels;

    Eigen::Index size() const noexcept { return ctx.cols(); }
};

template <typename Scalar>
PairBatch<Scalar> gather_batch(const EmbeddingStore& ctx_store, const EmbeddingStore& can_store,
                               std::span<const PairExample> pairs) {
    if (pairs.empty()) throw ArgumentError("empty batch");
    const auto d = static_cast<Eigen::Index>(ctx_store.d());
    if (can_store.d() != ctx_store.d()) throw ArgumentError("context and candidate stores differ in dimension");
    PairBatch<Scalar> b;
    b.ctx.resize(d, static_cast<Eigen::Index>(pairs.size()));
    b.can.resize(d, static_cast<Eigen::Index>(pairs.size()));
    b.labels.reserve(pairs.size());
    for (std::size_t j = 0; j < pairs.size(); ++j) {
        const auto& p = pairs[j];
        if (p.ctx_id >= ctx_store.n() || p.can_id >= can_store.n()) throw ArgumentError("pair id out of range");
        check_label(p.label);
        const auto col = static_cast<Eigen::Index>(j);
        b.ctx.col(col) = ctx_store.vectors.row(p.ctx_id).transpose().template cast<Scalar>();
        b.can.col(col) = can_store.vectors.row(p.can_id).transpose().template cast<Scalar>();
        b.labels.push_back(p.label);
    }
    return b;
}

namespace detail {

template <typename Scalar>
void check_batch(const HashModel<Scalar>& model, const PairBatch<Scalar>& batch) {
    if (batch.size() == 0) throw ArgumentError("empty batch");
    if (batch.ctx.rows() != model.d || batch.can.rows() != model.d) {
        throw ArgumentError("batch dimension " + std::to_string(batch.ctx.rows()) + " does not match model d=" +
                            std::to_string(model.d));
    }
}

template <typename Scalar>
LossBreakdown reduce_losses(const HashModel<Scalar>& model, const PairBatch<Scalar>& batch,
                            const TowerActivations<Scalar>& ctx, const TowerActivations<Scalar>& can,
                            double gamma) {
    const auto n = static_cast<double>(batch.size());
    LossBreakdown l;
    l.gamma = gamma;
    for (Eigen::Index j = 0; j < batch.size(); ++j) {
        l.preserved += static_cast<double>(
            preserved_loss(batch.ctx.col(j), ctx.recon.col(j), batch.can.col(j), can.recon.col(j)));
        l.hash += static_cast<double>(
            hash_loss(ctx.code.col(j), can.code.col(j), batch.labels[static_cast<std::size_t>(j)], model.h));
        l.quantization += static_cast<double>(quantization_loss(ctx.code.col(j), can.code.col(j)));
    }
    l.preserved /= n;
    l.hash /= n;
    l.quantization /= n;
    l.total = l.preserved + l.hash + gamma * l.quantization;
    return l;
}

/// Backpropagates through one tower given dLoss/dE and dLoss/do.
template <typename Scalar>
void backward_tower(const Autoencoder<Scalar>& t, const Matrix<Scalar>& x, const TowerActivations<Scalar>& a,
                    const Matrix<Scalar>& d_recon, Matrix<Scalar> d_code, Autoencoder<Scalar>& g) {
    g.dec_w2.noalias() = d_recon * a.dec_hidden.transpose();
    g.dec_b2 = d_recon.rowwise().sum();
    Matrix<Scalar> dz = (t.dec_w2.transpose() * d_recon).cwiseProduct(
        (Scalar(1) - a.dec_hidden.array().square()).matrix());
    g.dec_w1.noalias() = dz * a.code.transpose();
    g.dec_b1 = dz.rowwise().sum();
    d_code.noalias() += t.dec_w1.transpose() * dz;

    Matrix<Scalar> dz2 = d_code.cwiseProduct((Scalar(1) - a.code.array().square()).matrix());
    g.enc_w2.noalias() = dz2 * a.hidden.transpose();
    g.enc_b2 = dz2.rowwise().sum();
    Matrix<Scalar> dz1 = (t.enc_w2.transpose() * dz2).cwiseProduct(
        (Scalar(1) - a.hidden.array().square()).matrix());
    g.enc_w1.noalias() = dz1 * x.transpose();
    g.enc_b1 = dz1.rowwise().sum();
}

}  // namespace detail

/// Mean over the batch of L_p + L_h + gamma * L_q.
template <typename Scalar>
LossBreakdown total_loss(const HashModel<Scalar>& model, const PairBatch<Scalar>& batch, double gamma) {
    detail::check_batch(model, batch);
    const auto ctx = forward(model.ctx, batch.ctx);
    const auto can = forward(model.can, batch.can);
    return detail::reduce_losses(model, batch, ctx, can, gamma);
}

/// Analytic gradient of total_loss with respect to every parameter, written
/// into `grad` (resized to the model's shape). The sign target of the
/// quantization term is held constant.
template <typename Scalar>
LossBreakdown gradients(const HashModel<Scalar>& model, const PairBatch<Scalar>& batch, double gamma,
                        HashModel<Scalar>& grad) {
    detail::check_batch(model, batch);
    if (grad.d != model.d || grad.h != model.h) grad = HashModel<Scalar>::zeros(model.d, model.h);

    const auto ctx = forward(model.ctx, batch.ctx);
    const auto can = forward(model.can, batch.can);
    const auto loss = detail::reduce_losses(model, batch, ctx, can, gamma);

    const Scalar inv_n = Scalar(1) / static_cast<Scalar>(batch.size());
    const Scalar g = static_cast<Scalar>(gamma);

    // Hash term: r_j = o_ctx_j . o_can_j - h S_j.
    Vector<Scalar> r = ctx.code.cwiseProduct(can.code).colwise().sum().transpose();
    for (Eigen::Index j = 0; j < batch.size(); ++j) {
        r[j] -= static_cast<Scalar>(model.h * batch.labels[static_cast<std::size_t>(j)]);
    }
    const auto two_r = (Scalar(2) * inv_n * r).transpose();

    Matrix<Scalar> d_code_ctx = can.code.array().rowwise() * two_r.array();
    d_code_ctx += (Scalar(2) * g * inv_n) * (ctx.code - sign_quantize(ctx.code));
    Matrix<Scalar> d_code_can = ctx.code.array().rowwise() * two_r.array();
    d_code_can += (Scalar(2) * g * inv_n) * (can.code - sign_quantize(can.code));

    const Matrix<Scalar> d_recon_ctx = (Scalar(2) * inv_n) * (ctx.recon - batch.ctx);
    const Matrix<Scalar> d_recon_can = (Scalar(2) * inv_n) * (can.recon - batch.can);

    detail::backward_tower(model.ctx, batch.ctx, ctx, d_recon_ctx, std::move(d_code_ctx), grad.ctx);
    detail::backward_tower(model.can, batch.can, can, d_recon_can, std::move(d_code_can), grad.can);
    return loss;
}

struct TrainConfig {
    double gamma_min = 1e-4;
    double gamma_max = 1e-1;
    std::size_t epochs = 5;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainTrace {
    std::vector<LossBreakdown> steps;  // one entry per minibatch
    std::vector<double> epoch_mean_total;

    /// Minibatches per epoch (T).
    std::size_t steps_per_epoch = 0;
};

class TrainingError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Called after each epoch with (epoch index, mean total loss).
using EpochCallback = std::function<void(std::size_t, double)>;

namespace detail {

template <typename Scalar>
struct Adam {
    HashModel<Scalar> m;
    HashModel<Scalar> v;
    std::uint64_t step = 0;

    explicit Adam(const HashModel<Scalar>& model)
        : m(HashModel<Scalar>::zeros(model.d, model.h)), v(HashModel<Scalar>::zeros(model.d, model.h)) {}

    void apply(HashModel<Scalar>& model, const HashModel<Scalar>& grad, const TrainConfig& cfg) {
        ++step;
        const Scalar b1 = static_cast<Scalar>(cfg.beta1);
        const Scalar b2 = static_cast<Scalar>(cfg.beta2);
        const Scalar c1 = static_cast<Scalar>(1.0 - std::pow(cfg.beta1, static_cast<double>(step)));
        const Scalar c2 = static_cast<Scalar>(1.0 - std::pow(cfg.beta2, static_cast<double>(step)));
        const Scalar lr = static_cast<Scalar>(cfg.learning_rate);
        const Scalar eps = static_cast<Scalar>(cfg.epsilon);
        zip_tensors(
            [&](auto& p, const auto& g, auto& m1, auto& m2) {
                m1 = b1 * m1 + (Scalar(1) - b1) * g;
                m2 = b2 * m2 + (Scalar(1) - b2) * g.cwiseAbs2();
                p.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
            },
            model, grad, m, v);
    }
};

}  // namespace detail

/// Minibatch Adam over the combined objective. Pairs are reshuffled each
/// epoch from a seed derived from (config.seed, epoch); gamma ramps over the
/// T minibatches of every epoch and restarts at gamma_min.
template <typename Scalar>
TrainTrace train(HashModel<Scalar>& model, const EmbeddingStore& ctx_store, const EmbeddingStore& can_store,
                 std::span<const PairExample> pairs, const TrainConfig& config,
                 const EpochCallback& on_epoch = {}) {
    config.validate();
    if (pairs.empty()) throw ArgumentError("train: no training pairs");
    if (static_cast<Eigen::Index>(ctx_store.d()) != model.d || static_cast<Eigen::Index>(can_store.d()) != model.d) {
        throw ArgumentError("train: embedding dimension does not match model d=" + std::to_string(model.d));
    }
    for (const auto& p : pairs) {
        if (p.ctx_id >= ctx_store.n() || p.can_id >= can_store.n()) throw ArgumentError("train: pair id out of range");
        check_label(p.label);
    }

    TrainTrace trace;
    const std::size_t steps = (pairs.size() + config.batch_size - 1) / config.batch_size;
    trace.steps_per_epoch = steps;
    detail::Adam<Scalar> adam(model);
    HashModel<Scalar> grad = HashModel<Scalar>::zeros(model.d, model.h);
    std::vector<PairExample> order(pairs.begin(), pairs.end());

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng(mix_seed(config.seed, epoch));
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng.below(i)]);
        }
        double epoch_sum = 0.0;
        for (std::size_t t = 0; t < steps; ++t) {
            const std::size_t begin = t * config.batch_size;
            const std::size_t count = std::min(config.batch_size, order.size() - begin);
            const auto batch = gather_batch<Scalar>(ctx_store, can_store, std::span(order).subspan(begin, count));
            const double gamma = gamma_schedule(t, steps, config.gamma_min, config.gamma_max);
            const auto loss = gradients(model, batch, gamma, grad);
            if (!std::isfinite(loss.total)) {
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                    std::to_string(t) + " (preserved=" + std::to_string(loss.preserved) +
                                    ", hash=" + std::to_string(loss.hash) +
                                    ", quantization=" + std::to_string(loss.quantization) + ")");
            }
            adam.apply(model, grad, config);
            trace.steps.push_back(loss);
            epoch_sum += loss.total;
        }
        trace.epoch_mean_total.push_back(epoch_sum / static_cast<double>(steps));
        if (on_epoch) on_epoch(epoch, trace.epoch_mean_total.back());
    }
    return trace;
}

/// Real codes o for every row of `store`, as an h x n matrix. Rows are
/// processed in fixed-size chunks so the result does not depend on callers.
template <typename Scalar>
Matrix<Scalar> encode_store(const HashModel<Scalar>& model, Side side, const EmbeddingStore& store) {
    if (static_cast<Eigen::Index>(store.d()) != model.d) {
        throw ArgumentError("embedding dimension " + std::to_string(store.d()) + " does not match model d=" +
                            std::to_string(model.d));
    }
    constexpr Eigen::Index kChunk = 256;
    const auto n = static_cast<Eigen::Index>(store.n());
    Matrix<Scalar> codes(model.h, n);
    for (Eigen::Index begin = 0; begin < n; begin += kChunk) {
        const auto count = std::min(kChunk, n - begin);
        const Matrix<Scalar> x = store.vectors.middleRows(begin, count).transpose().template cast<Scalar>();
        codes.middleCols(begin, count) = encode_batch(model.tower(side), x);
    }
    return codes;
}

/// sign(encode(row)) for every row of `store`, order preserved.
template <typename Scalar>
std::vector<SignCode> export_codes(const HashModel<Scalar>& model, Side side, const EmbeddingStore& store) {
    const auto codes = encode_store(model, side, store);
    std::vector<SignCode> out;
    out.reserve(store.n());
    for (Eigen::Index i = 0; i < codes.cols(); ++i) {
        out.emplace_back(sign_quantize(codes.col(i)).template cast<std::int8_t>());
    }
    return out;
}

}  // namespace dshc
