#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "normlab/errors.hpp"

namespace normlab {

inline std::string fmt_g17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string fmt_sig12(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

// Tabular report with byte-stable emission: fixed column order, fixed float
// formatting, newline-terminated rows.
struct Report {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row) {
        if (row.size() != columns.size())
            throw InvalidInput("report row width mismatch");
        rows.push_back(std::move(row));
    }

    std::string to_csv() const {
        std::string out;
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) out += ',';
            out += columns[i];
        }
        out += '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out += ',';
                out += row[i];
            }
            out += '\n';
        }
        return out;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& row : rows) {
            nlohmann::ordered_json obj;
            for (std::size_t i = 0; i < columns.size(); ++i) obj[columns[i]] = row[i];
            arr.push_back(std::move(obj));
        }
        return arr;
    }
};

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MissingArtifact("cannot write file: " + path);
    out << content;
}

// gnuplot-compatible companion script for a CSV report.
inline std::string plot_script_for(const std::string& csv_path,
                                   const std::string& x_column, long x_index,
                                   const std::vector<std::pair<std::string, long>>& ys,
                                   const std::string& title) {
    std::string s;
    s += "set datafile separator ','\n";
    s += "set key autotitle columnhead\n";
    s += "set title '" + title + "'\n";
    s += "set xlabel '" + x_column + "'\n";
    s += "set logscale x\n";
    s += "plot ";
    for (std::size_t i = 0; i < ys.size(); ++i) {
        if (i) s += ", ";
        s += "'" + csv_path + "' using " + std::to_string(x_index) + ":" +
             std::to_string(ys[i].second) + " with linespoints title '" +
             ys[i].first + "'";
    }
    s += "\n";
    return s;
}

} // namespace normlab
