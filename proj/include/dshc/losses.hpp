#pragma once

#include "dshc/common.hpp"

#include <cstdint>

namespace dshc {

/// Component-wise sign with sign(0) = +1.
template <typename Derived>
auto sign_quantize(const Eigen::MatrixBase<Derived>& o) {
    using Scalar = typename Derived::Scalar;
    return o.unaryExpr([](Scalar v) { return v >= Scalar(0) ? Scalar(1) : Scalar(-1); });
}

/// ||e_ctx - E_ctx||^2 + ||e_can - E_can||^2.
template <typename A, typename B, typename C, typename D>
typename A::Scalar preserved_loss(const Eigen::MatrixBase<A>& e_ctx, const Eigen::MatrixBase<B>& recon_ctx,
                                  const Eigen::MatrixBase<C>& e_can, const Eigen::MatrixBase<D>& recon_can) {
    if (e_ctx.size() != recon_ctx.size() || e_can.size() != recon_can.size()) {
        throw ArgumentError("preserved_loss: dimension mismatch");
    }
    return (e_ctx - recon_ctx).squaredNorm() + (e_can - recon_can).squaredNorm();
}

inline void check_label(int label) {
    if (label != 0 && label != 1) throw ArgumentError("similarity label must be 0 or 1");
}

/// (o_ctx . o_can - h S)^2. Zero exactly when the Hamming identity
/// (h - o_ctx . o_can) / 2 gives distance 0 for S = 1 and h / 2 for S = 0.
template <typename A, typename B>
typename A::Scalar hash_loss(const Eigen::MatrixBase<A>& o_ctx, const Eigen::MatrixBase<B>& o_can, int label,
                             Eigen::Index h) {
    check_label(label);
    if (o_ctx.size() != h || o_can.size() != h) throw ArgumentError("hash_loss: codes must have length h");
    using Scalar = typename A::Scalar;
    const Scalar r = o_ctx.dot(o_can) - static_cast<Scalar>(h * label);
    return r * r;
}

/// ||sign(o_ctx) - o_ctx||^2 + ||sign(o_can) - o_can||^2.
template <typename A, typename B>
typename A::Scalar quantization_loss(const Eigen::MatrixBase<A>& o_ctx, const Eigen::MatrixBase<B>& o_can) {
    return (sign_quantize(o_ctx) - o_ctx).squaredNorm() + (sign_quantize(o_can) - o_can).squaredNorm();
}

/// Linear ramp gamma_min + (gamma_max - gamma_min) * t / T for step t of T.
inline double gamma_schedule(std::size_t t, std::size_t steps, double gamma_min, double gamma_max) {
    if (steps == 0 || t >= steps) {
        throw ArgumentError("gamma_schedule: step " + std::to_string(t) + " outside [0, " + std::to_string(steps) + ")");
    }
    return gamma_min + (gamma_max - gamma_min) * static_cast<double>(t) / static_cast<double>(steps);
}

}  // namespace dshc
