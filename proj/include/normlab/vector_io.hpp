#pragma once

#include <fstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "normlab/errors.hpp"
#include "normlab/sparse_vector.hpp"

namespace normlab {

// Vector file format:
//   {"mode":"float", "coords":[[index, value], ...]}
//   {"mode":"exact", "coords":[[index, num, den], ...]}
// Indices are 0-based and strictly increasing.

inline nlohmann::ordered_json vector_to_json(const VecF& x) {
    nlohmann::ordered_json coords = nlohmann::ordered_json::array();
    for (const auto& [i, c] : x.entries())
        coords.push_back({i, c});
    return nlohmann::ordered_json{{"mode", "float"}, {"coords", std::move(coords)}};
}

inline nlohmann::ordered_json vector_to_json(const VecQ& x) {
    nlohmann::ordered_json coords = nlohmann::ordered_json::array();
    for (const auto& [i, c] : x.entries()) {
        coords.push_back({i,
                          boost::multiprecision::numerator(c).str(),
                          boost::multiprecision::denominator(c).str()});
    }
    return nlohmann::ordered_json{{"mode", "exact"}, {"coords", std::move(coords)}};
}

inline std::string json_mode(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("mode") || !j.contains("coords"))
        throw ParseError("vector file must contain 'mode' and 'coords'");
    const std::string mode = j.at("mode").get<std::string>();
    if (mode != "exact" && mode != "float")
        throw ParseError("vector mode must be 'exact' or 'float'");
    return mode;
}

inline VecF vector_from_json_float(const nlohmann::json& j) {
    if (json_mode(j) != "float") throw ParseError("expected a float-mode vector");
    std::vector<VecF::Entry> entries;
    Index prev = -1;
    for (const auto& c : j.at("coords")) {
        if (!c.is_array() || c.size() != 2)
            throw ParseError("float coords must be [index, value] pairs");
        const Index i = c[0].get<Index>();
        if (i <= prev) throw ParseError("indices must be strictly increasing");
        prev = i;
        entries.emplace_back(i, c[1].get<double>());
    }
    return VecF::from_entries(std::move(entries));
}

inline VecQ vector_from_json_exact(const nlohmann::json& j) {
    if (json_mode(j) != "exact") throw ParseError("expected an exact-mode vector");
    std::vector<VecQ::Entry> entries;
    Index prev = -1;
    for (const auto& c : j.at("coords")) {
        if (!c.is_array() || c.size() != 3)
            throw ParseError("exact coords must be [index, num, den] triples");
        const Index i = c[0].get<Index>();
        if (i <= prev) throw ParseError("indices must be strictly increasing");
        prev = i;
        BigInt num, den;
        try {
            // Accept both JSON integers and decimal strings for num/den.
            num = c[1].is_string() ? BigInt(c[1].get<std::string>())
                                   : BigInt(c[1].get<std::int64_t>());
            den = c[2].is_string() ? BigInt(c[2].get<std::string>())
                                   : BigInt(c[2].get<std::int64_t>());
        } catch (const std::exception&) {
            throw ParseError("malformed rational coefficient");
        }
        if (den == 0) throw ParseError("rational denominator must be nonzero");
        entries.emplace_back(i, Rational(num, den));
    }
    return VecQ::from_entries(std::move(entries));
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifact("cannot open file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("JSON parse failure in ") + path + ": " + e.what());
    }
    return j;
}

inline void save_json_file(const std::string& path, const nlohmann::ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw MissingArtifact("cannot write file: " + path);
    out << j.dump(2) << '\n';
}

} // namespace normlab
