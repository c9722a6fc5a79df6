#pragma once

// ICRA v1: on-disk attention dumps.
//
//   offset  field
//   0       magic "ICRA"
//   4       u32 version (= 1)
//   8       u32 model-name byte length n, then n bytes of UTF-8
//   .       u32 L, u32 H, u32 T, u32 num_rows, u32 dtype (0 = float32)
//   .       num_rows x u32 row indices, strictly ascending, each < T
//   .       L*H*num_rows*T float32 values: layer, head, row, position
//
// Every integer and float is little-endian. Rows are dense; positions after
// the row index are stored as 0.0. Nothing may follow the body.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "icr/attention.hpp"
#include "icr/error.hpp"

namespace icr {

inline constexpr std::uint32_t kIcraVersion = 1;
inline constexpr std::uint32_t kIcraFloat32 = 0;

struct DumpMeta {
    std::string model_name;
};

struct IcraDump {
    DumpMeta meta;
    AttentionSlice slice;
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

    std::uint32_t u32(ErrorCode on_short, const char* what) {
        if (remaining() < 4) fail(on_short, std::string("file ends inside ") + what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + static_cast<std::size_t>(i)]} << (8 * i);
        pos_ += 4;
        return v;
    }

    std::span<const std::uint8_t> take(std::size_t n) {
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> write_dump(const AttentionSlice& slice, const DumpMeta& meta = {}) {
    std::vector<std::uint8_t> out;
    const auto values = slice.values();
    out.reserve(36 + meta.model_name.size() + 4 * slice.num_rows() + 4 * values.size());
    for (char c : std::string_view("ICRA")) out.push_back(static_cast<std::uint8_t>(c));
    detail::put_u32(out, kIcraVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(meta.model_name.size()));
    for (char c : meta.model_name) out.push_back(static_cast<std::uint8_t>(c));
    detail::put_u32(out, slice.layers());
    detail::put_u32(out, slice.heads());
    detail::put_u32(out, slice.context_len());
    detail::put_u32(out, static_cast<std::uint32_t>(slice.num_rows()));
    detail::put_u32(out, kIcraFloat32);
    for (auto r : slice.row_indices()) detail::put_u32(out, r);
    for (float f : values) detail::put_u32(out, std::bit_cast<std::uint32_t>(f));
    return out;
}

/// Parses and structurally validates a dump. Never reads past the buffer and
/// never allocates more than the buffer could hold.
inline IcraDump read_dump(std::span<const std::uint8_t> bytes) {
    detail::ByteReader in(bytes);
    if (bytes.size() < 4) fail(ErrorCode::TruncatedHeader, "shorter than the magic");
    const auto magic = in.take(4);
    if (std::memcmp(magic.data(), "ICRA", 4) != 0) fail(ErrorCode::BadMagic, "not an ICRA file");
    const auto version = in.u32(ErrorCode::TruncatedHeader, "version");
    if (version != kIcraVersion) fail(ErrorCode::UnsupportedVersion, "version " + std::to_string(version));

    const auto name_len = in.u32(ErrorCode::TruncatedHeader, "model name length");
    if (name_len > in.remaining()) fail(ErrorCode::TruncatedHeader, "model name runs past end of file");
    const auto name = in.take(name_len);

    const auto L = in.u32(ErrorCode::TruncatedHeader, "L");
    const auto H = in.u32(ErrorCode::TruncatedHeader, "H");
    const auto T = in.u32(ErrorCode::TruncatedHeader, "T");
    const auto num_rows = in.u32(ErrorCode::TruncatedHeader, "num_rows");
    const auto dtype = in.u32(ErrorCode::TruncatedHeader, "dtype");
    if (dtype != kIcraFloat32) fail(ErrorCode::UnsupportedDtype, "dtype code " + std::to_string(dtype));
    if (L == 0 || H == 0) fail(ErrorCode::ShapeMismatch, "L and H must be positive");

    if (std::uint64_t{num_rows} * 4 > in.remaining())
        fail(ErrorCode::TruncatedHeader, "row index table runs past end of file");
    std::vector<std::uint32_t> rows(num_rows);
    for (std::uint32_t i = 0; i < num_rows; ++i) {
        rows[i] = in.u32(ErrorCode::TruncatedHeader, "row indices");
        if (i > 0 && rows[i] <= rows[i - 1])
            fail(ErrorCode::NonAscendingRows, "row " + std::to_string(i) + " = " + std::to_string(rows[i]));
        if (rows[i] >= T) fail(ErrorCode::RowOutOfRange, "row " + std::to_string(rows[i]) + " >= T");
    }

    // L, H, num_rows, T are each < 2^32; the product needs 128 bits.
    const unsigned __int128 count =
        static_cast<unsigned __int128>(std::uint64_t{L} * H) * (std::uint64_t{num_rows} * T);
    const unsigned __int128 body_bytes = count * 4;
    if (body_bytes > in.remaining()) fail(ErrorCode::TruncatedBody, "body shorter than declared");
    if (body_bytes < in.remaining()) fail(ErrorCode::TrailingBytes, "bytes after the declared body");

    const auto n = static_cast<std::size_t>(count);
    std::vector<float> values(n);
    const auto body = in.take(n * 4);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b) v |= std::uint32_t{body[i * 4 + static_cast<std::size_t>(b)]} << (8 * b);
        values[i] = std::bit_cast<float>(v);
    }

    IcraDump dump;
    dump.meta.model_name.assign(reinterpret_cast<const char*>(name.data()), name.size());
    dump.slice = AttentionSlice(L, H, T, std::move(rows), std::move(values));
    return dump;
}

enum class ViolationKind { RowSum, Causality, NonFinite };

inline std::string_view to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::RowSum: return "row_sum";
        case ViolationKind::Causality: return "causality";
        case ViolationKind::NonFinite: return "non_finite";
    }
    return "unknown";
}

struct Violation {
    ViolationKind kind;
    std::uint32_t layer = 0;
    std::uint32_t head = 0;
    std::uint32_t row = 0;       // token index k
    std::uint32_t position = 0;  // token index j (0 for row-sum violations)
    double value = 0.0;
};

struct DumpReport {
    std::vector<Violation> violations;
    bool ok() const noexcept { return violations.empty(); }
};

/// Semantic checks on a parsed slice: finite values, exact zeros above the
/// diagonal, and each row summing to 1 within `tolerance`.
inline DumpReport validate_dump(const AttentionSlice& slice, double tolerance = 1e-3) {
    DumpReport report;
    const auto rows = slice.row_indices();
    for (std::uint32_t l = 0; l < slice.layers(); ++l)
        for (std::uint32_t h = 0; h < slice.heads(); ++h)
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const auto k = rows[r];
                const auto row = slice.row(l, h, r);
                double sum = 0.0;
                bool finite = true;
                for (std::uint32_t j = 0; j < row.size(); ++j) {
                    const float v = row[j];
                    if (!std::isfinite(v)) {
                        report.violations.push_back({ViolationKind::NonFinite, l, h, k, j, static_cast<double>(v)});
                        finite = false;
                        continue;
                    }
                    if (j > k && v != 0.0f)
                        report.violations.push_back({ViolationKind::Causality, l, h, k, j, static_cast<double>(v)});
                    if (j <= k) sum += v;
                }
                if (finite && std::abs(sum - 1.0) > tolerance)
                    report.violations.push_back({ViolationKind::RowSum, l, h, k, 0, sum});
            }
    return report;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) fail(ErrorCode::IoFailure, "read error on " + path.string());
    return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoFailure, "cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::IoFailure, "write error on " + path.string());
}

inline IcraDump read_dump_file(const std::filesystem::path& path) { return read_dump(read_file_bytes(path)); }

inline void write_dump_file(const std::filesystem::path& path, const AttentionSlice& slice, const DumpMeta& meta = {}) {
    write_file_bytes(path, write_dump(slice, meta));
}

inline std::filesystem::path query_dump_path(const std::filesystem::path& dir, std::string_view qid) {
    return dir / (std::string(qid) + ".q.icra");
}

inline std::filesystem::path calibration_dump_path(const std::filesystem::path& dir, std::string_view qid) {
    return dir / (std::string(qid) + ".cal.icra");
}

}  // namespace icr
