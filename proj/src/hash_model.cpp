#include "dshc/hash_model.hpp"

#include <fstream>
#include <vector>

namespace dshc {

std::string_view to_string(Side side) noexcept { return side == Side::Context ? "ctx" : "can"; }

void save_model(const HashModel<float>& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatError::Kind::Io, "cannot write " + path.string());
    io::write_magic(out, kModelMagic);
    io::write_u32(out, static_cast<std::uint32_t>(model.d));
    io::write_u32(out, static_cast<std::uint32_t>(model.h));
    std::vector<float> row;
    zip_tensors(
        [&](const auto& t) {
            row.resize(static_cast<std::size_t>(t.cols()));
            for (Eigen::Index i = 0; i < t.rows(); ++i) {
                for (Eigen::Index j = 0; j < t.cols(); ++j) row[static_cast<std::size_t>(j)] = t(i, j);
                io::write_f32_array(out, row.data(), row.size());
            }
        },
        model);
    if (!out) throw FormatError(FormatError::Kind::Io, "write failed: " + path.string());
}

HashModel<float> load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string());
    io::expect_magic(in, kModelMagic, path);
    const std::uint64_t d = io::read_u32(in, path);
    const std::uint64_t h = io::read_u32(in, path);
    if (d == 0 || h == 0) throw FormatError(FormatError::Kind::Malformed, path.string() + ": zero dimension");
    // Per tower: W1 d*d, b1 d, W2 h*d, b2 h, V1 d*h, c1 d, V2 d*d, c2 d.
    const auto dd = io::checked_payload(d, d, 2, path);
    const auto hd = io::checked_payload(h, d, 2, path);
    const auto per_tower = dd + hd + (3 * d + h);
    const auto expected = io::checked_payload(per_tower, 2, sizeof(float), path);
    if (io::remaining(in) < expected) {
        throw FormatError(FormatError::Kind::Truncated, path.string() + ": truncated payload");
    }
    auto model = HashModel<float>::zeros(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(h));
    std::vector<float> row;
    zip_tensors(
        [&](auto& t) {
            row.resize(static_cast<std::size_t>(t.cols()));
            for (Eigen::Index i = 0; i < t.rows(); ++i) {
                io::read_f32_array(in, row.data(), row.size(), path);
                for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = row[static_cast<std::size_t>(j)];
            }
        },
        model);
    bool finite = true;
    zip_tensors([&](const auto& t) { finite = finite && t.allFinite(); }, model);
    if (!finite) throw FormatError(FormatError::Kind::Malformed, path.string() + ": non-finite parameter");
    return model;
}

}  // namespace dshc
