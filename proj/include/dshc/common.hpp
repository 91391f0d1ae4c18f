#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dshc {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXfR = RowMatrix<float>;
using VectorXf = Vector<float>;

/// A hash code with components exactly -1 or +1.
using SignCode = Eigen::Matrix<std::int8_t, Eigen::Dynamic, 1>;

/// Raised for malformed or truncated on-disk artifacts.
class FormatError : public std::runtime_error {
  public:
    enum class Kind { Io, BadMagic, Truncated, Overflow, Malformed };

    FormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

  private:
    Kind kind_;
};

/// Raised when a caller violates a shape or range precondition.
class ArgumentError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Exact payload of n packed h-bit codes: n * ceil(h / 8).
inline constexpr std::uint64_t binary_code_bytes(std::uint64_t n, std::uint64_t h) noexcept {
    return n * ((h + 7) / 8);
}

/// Exact payload of an n x d float32 matrix: n * d * 4.
inline constexpr std::uint64_t dense_code_bytes(std::uint64_t n, std::uint64_t d) noexcept {
    return n * d * sizeof(float);
}

/// SplitMix64 generator. Used everywhere randomness must be reproducible
/// across standard library implementations (std distributions are not).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound) noexcept {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(bound));
    }

    /// Standard normal via Box-Muller (no cached second value).
    double normal() noexcept {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

  private:
    std::uint64_t state_;
};

/// Mixes two 64-bit values into a seed for an independent stream.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
    Rng r(a ^ (b * 0xD1B54A32D192ED03ULL));
    r.next();
    return r.next();
}

/// FNV-1a over raw bytes.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xCBF29CE484222325ULL) noexcept {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

namespace io {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T to_le(T v) noexcept {
    if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
        return v;
    } else {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
}

void write_magic(std::ostream& out, std::string_view magic);
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f32(std::ostream& out, float v);
void write_f64(std::ostream& out, double v);
void write_bytes(std::ostream& out, const void* data, std::size_t size);
void write_f32_array(std::ostream& out, const float* data, std::size_t count);

/// Reads and checks an 8-byte magic; throws FormatError(BadMagic) on mismatch.
void expect_magic(std::istream& in, std::string_view magic, const std::filesystem::path& path);
std::uint32_t read_u32(std::istream& in, const std::filesystem::path& path);
std::uint64_t read_u64(std::istream& in, const std::filesystem::path& path);
double read_f64(std::istream& in, const std::filesystem::path& path);
void read_bytes(std::istream& in, void* data, std::size_t size, const std::filesystem::path& path);
void read_f32_array(std::istream& in, float* data, std::size_t count, const std::filesystem::path& path);

/// Bytes remaining between the current read position and end of stream.
std::uint64_t remaining(std::istream& in);

/// Computes a*b*elem_size, throwing FormatError(Overflow) if it does not fit.
std::uint64_t checked_payload(std::uint64_t a, std::uint64_t b, std::uint64_t elem_size,
                              const std::filesystem::path& path);

}  // namespace io

}  // namespace dshc
