#pragma once

#include "dshc/common.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string_view>

namespace dshc {

enum class Side { Context, Candidate };

std::string_view to_string(Side side) noexcept;

/// One autoencoder tower.
///
/// Encoder: o = tanh(W2 tanh(W1 e + b1) + b2), W1: d x d, W2: h x d.
/// Decoder: E = V2 tanh(V1 o + c1) + c2,       V1: d x h, V2: d x d.
template <typename Scalar>
struct Autoencoder {
    Matrix<Scalar> enc_w1;
    Vector<Scalar> enc_b1;
    Matrix<Scalar> enc_w2;
    Vector<Scalar> enc_b2;
    Matrix<Scalar> dec_w1;
    Vector<Scalar> dec_b1;
    Matrix<Scalar> dec_w2;
    Vector<Scalar> dec_b2;
};

/// Context and candidate towers. The towers never share storage.
template <typename Scalar>
struct HashModel {
    Eigen::Index d = 0;
    Eigen::Index h = 0;
    Autoencoder<Scalar> ctx;
    Autoencoder<Scalar> can;

    Autoencoder<Scalar>& tower(Side side) noexcept { return side == Side::Context ? ctx : can; }
    const Autoencoder<Scalar>& tower(Side side) const noexcept { return side == Side::Context ? ctx : can; }

    static HashModel zeros(Eigen::Index d, Eigen::Index h);

    /// Xavier-uniform weights and zero biases, drawn in double so float and
    /// double models built from one seed agree up to rounding.
    static HashModel xavier(Eigen::Index d, Eigen::Index h, std::uint64_t seed);

    template <typename Other>
    HashModel<Other> cast() const;

    std::size_t parameter_count() const noexcept;
};

/// Visits corresponding tensors of every tower in file order
/// (ctx enc W1,b1,W2,b2, ctx dec V1,c1,V2,c2, then the candidate tower).
template <typename F, typename... Towers>
void zip_tower(F&& f, Towers&... t) {
    f(t.enc_w1...);
    f(t.enc_b1...);
    f(t.enc_w2...);
    f(t.enc_b2...);
    f(t.dec_w1...);
    f(t.dec_b1...);
    f(t.dec_w2...);
    f(t.dec_b2...);
}

template <typename F, typename... Models>
void zip_tensors(F&& f, Models&... m) {
    zip_tower(f, m.ctx...);
    zip_tower(f, m.can...);
}

template <typename Scalar>
HashModel<Scalar> HashModel<Scalar>::zeros(Eigen::Index d, Eigen::Index h) {
    if (d < 1 || h < 1) throw ArgumentError("HashModel: d and h must be positive");
    HashModel m;
    m.d = d;
    m.h = h;
    for (auto* t : {&m.ctx, &m.can}) {
        t->enc_w1 = Matrix<Scalar>::Zero(d, d);
        t->enc_b1 = Vector<Scalar>::Zero(d);
        t->enc_w2 = Matrix<Scalar>::Zero(h, d);
        t->enc_b2 = Vector<Scalar>::Zero(h);
        t->dec_w1 = Matrix<Scalar>::Zero(d, h);
        t->dec_b1 = Vector<Scalar>::Zero(d);
        t->dec_w2 = Matrix<Scalar>::Zero(d, d);
        t->dec_b2 = Vector<Scalar>::Zero(d);
    }
    return m;
}

template <typename Scalar>
HashModel<Scalar> HashModel<Scalar>::xavier(Eigen::Index d, Eigen::Index h, std::uint64_t seed) {
    HashModel m = zeros(d, h);
    Rng rng(seed);
    zip_tensors(
        [&](auto& t) {
            if (t.cols() == 1) return;  // biases stay zero
            const double bound = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
            for (Eigen::Index j = 0; j < t.cols(); ++j) {
                for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
            }
        },
        m);
    return m;
}

template <typename Scalar>
template <typename Other>
HashModel<Other> HashModel<Scalar>::cast() const {
    HashModel<Other> out = HashModel<Other>::zeros(d, h);
    zip_tensors([](auto& dst, const auto& src) { dst = src.template cast<Other>(); }, out, *this);
    return out;
}

template <typename Scalar>
std::size_t HashModel<Scalar>::parameter_count() const noexcept {
    std::size_t n = 0;
    zip_tensors([&](const auto& t) { n += static_cast<std::size_t>(t.size()); }, *this);
    return n;
}

/// Activations of one tower for a batch of column vectors.
template <typename Scalar>
struct TowerActivations {
    Matrix<Scalar> hidden;  // tanh(W1 X + b1), d x B
    Matrix<Scalar> code;    // o, h x B
    Matrix<Scalar> dec_hidden;  // tanh(V1 o + c1), d x B
    Matrix<Scalar> recon;   // E, d x B
};

template <typename Scalar, typename Derived>
Matrix<Scalar> encode_batch(const Autoencoder<Scalar>& t, const Eigen::MatrixBase<Derived>& x,
                            Matrix<Scalar>* hidden = nullptr) {
    Matrix<Scalar> a1 = ((t.enc_w1 * x).colwise() + t.enc_b1).array().tanh().matrix();
    Matrix<Scalar> o = ((t.enc_w2 * a1).colwise() + t.enc_b2).array().tanh().matrix();
    if (hidden != nullptr) *hidden = std::move(a1);
    return o;
}

template <typename Scalar, typename Derived>
Matrix<Scalar> decode_batch(const Autoencoder<Scalar>& t, const Eigen::MatrixBase<Derived>& o,
                            Matrix<Scalar>* hidden = nullptr) {
    Matrix<Scalar> a3 = ((t.dec_w1 * o).colwise() + t.dec_b1).array().tanh().matrix();
    Matrix<Scalar> e = (t.dec_w2 * a3).colwise() + t.dec_b2;
    if (hidden != nullptr) *hidden = std::move(a3);
    return e;
}

template <typename Scalar, typename Derived>
TowerActivations<Scalar> forward(const Autoencoder<Scalar>& t, const Eigen::MatrixBase<Derived>& x) {
    TowerActivations<Scalar> a;
    a.code = encode_batch(t, x, &a.hidden);
    a.recon = decode_batch(t, a.code, &a.dec_hidden);
    return a;
}

/// Real-valued code o in (-1, 1)^h for one embedding.
template <typename Scalar, typename Derived>
Vector<Scalar> encode(const HashModel<Scalar>& model, Side side, const Eigen::MatrixBase<Derived>& e) {
    if (e.size() != model.d) {
        throw ArgumentError("encode: expected input of length " + std::to_string(model.d) + ", got " +
                            std::to_string(e.size()));
    }
    const Vector<Scalar> x = e.template cast<Scalar>();
    return encode_batch(model.tower(side), x);
}

/// Reconstruction E of length d from a real code.
template <typename Scalar, typename Derived>
Vector<Scalar> decode(const HashModel<Scalar>& model, Side side, const Eigen::MatrixBase<Derived>& o) {
    if (o.size() != model.h) {
        throw ArgumentError("decode: expected code of length " + std::to_string(model.h) + ", got " +
                            std::to_string(o.size()));
    }
    const Vector<Scalar> c = o.template cast<Scalar>();
    return decode_batch(model.tower(side), c);
}

inline constexpr std::string_view kModelMagic = "DSHCMDL1";

/// DSHCMDL1 | u32 d | u32 h | tensors in zip_tensors order as f32, row-major.
void save_model(const HashModel<float>& model, const std::filesystem::path& path);
HashModel<float> load_model(const std::filesystem::path& path);

template <typename Scalar>
void save_model(const HashModel<Scalar>& model, const std::filesystem::path& path) {
    save_model(model.template cast<float>(), path);
}

}  // namespace dshc
