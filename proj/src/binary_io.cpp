#include "dshc/common.hpp"

#include <istream>
#include <ostream>
#include <vector>

namespace dshc::io {

namespace {

[[noreturn]] void truncated(const std::filesystem::path& path) {
    throw FormatError(FormatError::Kind::Truncated, path.string() + ": truncated payload");
}

template <typename T>
void put(std::ostream& out, T v) {
    v = to_le(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) truncated(path);
    return to_le(v);
}

}  // namespace

void write_magic(std::ostream& out, std::string_view magic) { out.write(magic.data(), static_cast<std::streamsize>(magic.size())); }
void write_u32(std::ostream& out, std::uint32_t v) { put(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { put(out, v); }
void write_f32(std::ostream& out, float v) { put(out, v); }
void write_f64(std::ostream& out, double v) { put(out, v); }

void write_bytes(std::ostream& out, const void* data, std::size_t size) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

void write_f32_array(std::ostream& out, const float* data, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
        write_bytes(out, data, count * sizeof(float));
    } else {
        for (std::size_t i = 0; i < count; ++i) put(out, data[i]);
    }
}

void expect_magic(std::istream& in, std::string_view magic, const std::filesystem::path& path) {
    std::string buf(magic.size(), '\0');
    if (!in.read(buf.data(), static_cast<std::streamsize>(buf.size()))) {
        throw FormatError(FormatError::Kind::BadMagic, path.string() + ": file too short for magic");
    }
    if (buf != magic) {
        throw FormatError(FormatError::Kind::BadMagic,
                          path.string() + ": bad magic, expected " + std::string(magic));
    }
}

std::uint32_t read_u32(std::istream& in, const std::filesystem::path& path) { return get<std::uint32_t>(in, path); }
std::uint64_t read_u64(std::istream& in, const std::filesystem::path& path) { return get<std::uint64_t>(in, path); }
double read_f64(std::istream& in, const std::filesystem::path& path) { return get<double>(in, path); }

void read_bytes(std::istream& in, void* data, std::size_t size, const std::filesystem::path& path) {
    if (size == 0) return;
    if (!in.read(static_cast<char*>(data), static_cast<std::streamsize>(size))) truncated(path);
}

void read_f32_array(std::istream& in, float* data, std::size_t count, const std::filesystem::path& path) {
    read_bytes(in, data, count * sizeof(float), path);
    if constexpr (std::endian::native != std::endian::little) {
        for (std::size_t i = 0; i < count; ++i) data[i] = to_le(data[i]);
    }
}

std::uint64_t remaining(std::istream& in) {
    const auto here = in.tellg();
    in.seekg(0, std::ios::end);
    const auto end = in.tellg();
    in.seekg(here);
    return static_cast<std::uint64_t>(end - here);
}

std::uint64_t checked_payload(std::uint64_t a, std::uint64_t b, std::uint64_t elem_size,
                              const std::filesystem::path& path) {
    constexpr auto max = std::numeric_limits<std::uint64_t>::max();
    if (a != 0 && b > max / a) {
        throw FormatError(FormatError::Kind::Overflow, path.string() + ": element count overflows");
    }
    const std::uint64_t count = a * b;
    if (elem_size != 0 && count > max / elem_size) {
        throw FormatError(FormatError::Kind::Overflow, path.string() + ": payload size overflows");
    }
    const std::uint64_t bytes = count * elem_size;
    if (bytes > static_cast<std::uint64_t>(std::numeric_limits<std::ptrdiff_t>::max())) {
        throw FormatError(FormatError::Kind::Overflow, path.string() + ": payload exceeds addressable memory");
    }
    return bytes;
}

}  // namespace dshc::io
