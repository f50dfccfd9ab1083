// SPDX-License-Identifier: MIT
#pragma once

// Line-oriented text files shared by the CLI and the tests.
//
// Metrics report (`<name>.txt`): `key<TAB>value` lines for psnr_db, dice,
// mean_abs_feret_diff_um, mean_abs_area_diff_mm2 and slices, then the blocks
// `[recon]` and `[reference]`, each a CSV with header `slice,feret_mm,area_mm2`.
// An infinite PSNR is written as `inf`. The same content goes to `<name>.json`
// with psnr_db null when infinite.
//
// Solver trace: tab-separated, header iteration, objective, seconds.
// Sweep table: tab-separated, header sweep, iterations, rank, psnr_db, seconds.

#include "tfsisr/error.hpp"
#include "tfsisr/metrics.hpp"
#include "tfsisr/solver.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace tfsisr {

namespace detail {

inline std::string num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_for_write(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_failure, "cannot open " + p.string() + " for writing");
    return out;
}

}  // namespace detail

inline void write_report_text(const MetricsReport& r, std::ostream& out) {
    out << "psnr_db\t" << detail::num(r.psnr_db) << '\n'
        << "dice\t" << detail::num(r.dice) << '\n'
        << "mean_abs_feret_diff_um\t" << detail::num(r.mean_abs_feret_diff_um) << '\n'
        << "mean_abs_area_diff_mm2\t" << detail::num(r.mean_abs_area_diff_mm2) << '\n'
        << "slices\t" << r.ref_slices.size() << '\n';
    const auto block = [&](const char* name, const std::vector<SliceMeasure>& rows) {
        out << '[' << name << "]\nslice,feret_mm,area_mm2\n";
        for (const auto& m : rows) out << m.slice << ',' << detail::num(m.feret_mm) << ',' << detail::num(m.area_mm2) << '\n';
    };
    block("recon", r.recon_slices);
    block("reference", r.ref_slices);
}

[[nodiscard]] inline nlohmann::json report_to_json(const MetricsReport& r) {
    const auto rows = [](const std::vector<SliceMeasure>& v) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& m : v) arr.push_back({{"slice", m.slice}, {"feret_mm", m.feret_mm}, {"area_mm2", m.area_mm2}});
        return arr;
    };
    nlohmann::json j;
    j["psnr_db"] = std::isfinite(r.psnr_db) ? nlohmann::json(r.psnr_db) : nlohmann::json(nullptr);
    j["dice"] = r.dice;
    j["mean_abs_feret_diff_um"] = r.mean_abs_feret_diff_um;
    j["mean_abs_area_diff_mm2"] = r.mean_abs_area_diff_mm2;
    j["slices"] = {{"recon", rows(r.recon_slices)}, {"reference", rows(r.ref_slices)}};
    return j;
}

/// Writes `<base>.txt` and `<base>.json`.
inline void write_report(const MetricsReport& r, const std::filesystem::path& base) {
    auto txt = base;
    txt += ".txt";
    auto json_path = base;
    json_path += ".json";
    {
        auto out = detail::open_for_write(txt);
        write_report_text(r, out);
        if (!out) throw Error(ErrorCode::io_failure, "failed writing " + txt.string());
    }
    auto out = detail::open_for_write(json_path);
    out << report_to_json(r).dump(2) << '\n';
    if (!out) throw Error(ErrorCode::io_failure, "failed writing " + json_path.string());
}

[[nodiscard]] inline MetricsReport read_report_text(std::istream& in) {
    MetricsReport r;
    std::string line;
    std::vector<SliceMeasure>* block = nullptr;
    const auto parse_double = [](const std::string& s) {
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        try {
            return std::stod(s);
        } catch (const std::exception&) {
            throw Error(ErrorCode::malformed_header, "bad number in report: " + s);
        }
    };
    while (std::getline(in, line)) {
        if (line.empty() || line == "slice,feret_mm,area_mm2") continue;
        if (line == "[recon]") {
            block = &r.recon_slices;
            continue;
        }
        if (line == "[reference]") {
            block = &r.ref_slices;
            continue;
        }
        if (block) {
            std::istringstream row(line);
            std::string a, b, c;
            if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c))
                throw Error(ErrorCode::malformed_header, "bad slice row: " + line);
            block->push_back({static_cast<std::size_t>(std::stoul(a)), parse_double(b), parse_double(c)});
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw Error(ErrorCode::malformed_header, "bad report line: " + line);
        const std::string key = line.substr(0, tab), value = line.substr(tab + 1);
        if (key == "psnr_db") r.psnr_db = parse_double(value);
        else if (key == "dice") r.dice = parse_double(value);
        else if (key == "mean_abs_feret_diff_um") r.mean_abs_feret_diff_um = parse_double(value);
        else if (key == "mean_abs_area_diff_mm2") r.mean_abs_area_diff_mm2 = parse_double(value);
    }
    return r;
}

inline void write_trace(const SolverTrace& t, const std::filesystem::path& path) {
    auto out = detail::open_for_write(path);
    out << "iteration\tobjective\tseconds\n";
    for (std::size_t n = 0; n < t.sweeps(); ++n)
        out << n + 1 << '\t' << detail::num(t.objective[n]) << '\t' << detail::num(t.seconds[n]) << '\n';
    if (!out) throw Error(ErrorCode::io_failure, "failed writing " + path.string());
}

}  // namespace tfsisr
