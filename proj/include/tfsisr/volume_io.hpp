// SPDX-License-Identifier: MIT
#pragma once

// On-disk volume format: a text header `<name>.hdr` with `Key = value` lines
//
//   NDims = 3
//   DimSize = I J K
//   ElementSpacing = sx sy sz
//   ElementType = MET_FLOAT
//   ElementDataFile = <name>.raw
//
// and a raw payload of I*J*K 32-bit little-endian IEEE-754 floats in voxel
// order i + I*j + I*J*k. Writing rounds each voxel to the nearest float, so
// read(write(v)) == v holds exactly for volumes whose values are floats.

#include "tfsisr/error.hpp"
#include "tfsisr/volume.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace tfsisr {

inline constexpr const char* kElementTypeFloat = "MET_FLOAT";

namespace detail {

inline std::filesystem::path header_path(const std::filesystem::path& base) {
    if (base.extension() == ".hdr") return base;
    std::filesystem::path p = base;
    p += ".hdr";
    return p;
}

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T, std::size_t N>
std::array<T, N> parse_tuple(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    std::array<T, N> out{};
    for (auto& v : out) {
        if (!(in >> v)) throw Error(ErrorCode::malformed_header, "cannot parse " + key + " = " + value);
    }
    std::string rest;
    if (in >> rest) throw Error(ErrorCode::malformed_header, "trailing tokens in " + key);
    return out;
}

}  // namespace detail

/// Paths of the header/payload pair for a base name (`p` or `p.hdr`).
[[nodiscard]] inline std::pair<std::filesystem::path, std::filesystem::path>
volume_file_pair(const std::filesystem::path& base) {
    auto hdr = detail::header_path(base);
    auto raw = hdr;
    raw.replace_extension(".raw");
    return {hdr, raw};
}

inline void write_volume(const Volume& v, const std::filesystem::path& base) {
    const auto [hdr_path, raw_path] = volume_file_pair(base);
    const auto& d = v.dims();
    const auto& s = v.spacing();

    std::ofstream hdr(hdr_path, std::ios::binary | std::ios::trunc);
    if (!hdr) throw Error(ErrorCode::io_failure, "cannot open " + hdr_path.string() + " for writing");
    hdr << "NDims = 3\n"
        << "DimSize = " << d[0] << ' ' << d[1] << ' ' << d[2] << '\n'
        << "ElementSpacing = " << detail::format_double(s[0]) << ' ' << detail::format_double(s[1])
        << ' ' << detail::format_double(s[2]) << '\n'
        << "ElementType = " << kElementTypeFloat << '\n'
        << "ElementDataFile = " << raw_path.filename().string() << '\n';
    if (!hdr) throw Error(ErrorCode::io_failure, "failed writing " + hdr_path.string());

    std::vector<char> bytes(v.size() * 4);
    for (std::size_t n = 0; n < v.size(); ++n) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v[n]));
        for (int b = 0; b < 4; ++b) bytes[4 * n + b] = static_cast<char>((bits >> (8 * b)) & 0xFFu);
    }
    std::ofstream raw(raw_path, std::ios::binary | std::ios::trunc);
    if (!raw) throw Error(ErrorCode::io_failure, "cannot open " + raw_path.string() + " for writing");
    raw.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!raw) throw Error(ErrorCode::io_failure, "failed writing " + raw_path.string());
}

[[nodiscard]] inline Volume read_volume(const std::filesystem::path& base) {
    const auto hdr_path = detail::header_path(base);
    std::ifstream hdr(hdr_path);
    if (!hdr) throw Error(ErrorCode::io_failure, "cannot open " + hdr_path.string());

    std::map<std::string, std::string> fields;
    std::string line;
    while (std::getline(hdr, line)) {
        if (detail::trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::malformed_header, "line without '=': " + line);
        fields[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
    }
    for (const char* key : {"NDims", "DimSize", "ElementSpacing", "ElementType", "ElementDataFile"}) {
        if (!fields.contains(key)) throw Error(ErrorCode::malformed_header, std::string("missing key ") + key);
    }
    if (fields["NDims"] != "3") throw Error(ErrorCode::malformed_header, "NDims must be 3");
    if (fields["ElementType"] != kElementTypeFloat)
        throw Error(ErrorCode::malformed_header, "unsupported ElementType " + fields["ElementType"]);

    const auto dims_ll = detail::parse_tuple<long long, 3>("DimSize", fields["DimSize"]);
    Dims dims{};
    for (int a = 0; a < 3; ++a) {
        if (dims_ll[a] <= 0) throw Error(ErrorCode::malformed_header, "DimSize entries must be positive");
        dims[a] = static_cast<std::size_t>(dims_ll[a]);
    }
    const auto spacing = detail::parse_tuple<double, 3>("ElementSpacing", fields["ElementSpacing"]);
    for (double s : spacing)
        if (!(std::isfinite(s) && s > 0.0))
            throw Error(ErrorCode::malformed_header, "ElementSpacing entries must be positive");

    const auto raw_path = hdr_path.parent_path() / fields["ElementDataFile"];
    std::ifstream raw(raw_path, std::ios::binary);
    if (!raw) throw Error(ErrorCode::io_failure, "cannot open " + raw_path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(raw)), std::istreambuf_iterator<char>());
    const std::size_t n = voxel_count(dims);
    if (bytes.size() != 4 * n)
        throw Error(ErrorCode::size_mismatch, raw_path.string() + " holds " + std::to_string(bytes.size()) +
                                                  " bytes, expected " + std::to_string(4 * n));

    std::vector<double> data(n);
    for (std::size_t idx = 0; idx < n; ++idx) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b)
            bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * idx + b])) << (8 * b);
        const float value = std::bit_cast<float>(bits);
        if (!std::isfinite(value))
            throw Error(ErrorCode::non_finite, "non-finite voxel at payload offset " + std::to_string(idx));
        data[idx] = value;
    }
    return Volume(dims, std::move(data), spacing);
}

}  // namespace tfsisr
