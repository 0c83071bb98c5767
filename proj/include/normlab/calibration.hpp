#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "normlab/errors.hpp"
#include "normlab/rng.hpp"
#include "normlab/spaces.hpp"
#include "normlab/sparse_vector.hpp"
#include "normlab/vector_io.hpp"

namespace normlab {

// Measured stand-ins for the constants no reference supplies in closed
// form: the block-equivalence constant C, the far-enough thresholds P(n),
// the separation schedule L(k) and the decay values eps_k. All entries are
// measurements tied to (space, sigma, seed); rerunning with the same
// configuration must reproduce the file byte for byte.
struct CalibrationTable {
    std::string space = "t2";
    double p = 2.0;
    double C = 1.0;
    std::vector<std::pair<long, long>> P;      // (n, P(n)), nondecreasing
    std::vector<std::pair<long, long>> L;      // (k, L(k))
    std::vector<std::pair<long, double>> eps;  // (k, eps_k)
    double sigma = 1.0;
    std::uint64_t seed = 0;
    nlohmann::ordered_json witnesses = nlohmann::ordered_json::array();

    long lookup_P(long n) const {
        long best = n;  // default: "after n" when nothing was measured
        for (const auto& [m, pn] : P)
            if (m <= n) best = std::max(best, pn);
        return best;
    }

    void set_P(long n, long value) {
        for (auto& [m, pn] : P) {
            if (m == n) {
                pn = std::max(pn, value);
                normalize_P();
                return;
            }
        }
        P.emplace_back(n, value);
        normalize_P();
    }

    long lookup_L(long k, long fallback) const {
        for (const auto& [kk, l] : L)
            if (kk == k) return l;
        return fallback;
    }

    double lookup_eps(long k, double fallback) const {
        for (const auto& [kk, e] : eps)
            if (kk == k) return e;
        return fallback;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["space"] = space;
        j["p"] = p;
        j["C"] = C;
        nlohmann::ordered_json pj = nlohmann::ordered_json::array();
        for (const auto& [n, pn] : P) pj.push_back({n, pn});
        j["P"] = std::move(pj);
        nlohmann::ordered_json lj = nlohmann::ordered_json::array();
        for (const auto& [k, l] : L) lj.push_back({k, l});
        j["L"] = std::move(lj);
        nlohmann::ordered_json ej = nlohmann::ordered_json::array();
        for (const auto& [k, e] : eps) ej.push_back({k, e});
        j["eps"] = std::move(ej);
        j["sigma"] = sigma;
        j["seed"] = seed;
        j["witnesses"] = witnesses;
        return j;
    }

    static CalibrationTable from_json(const nlohmann::json& j) {
        CalibrationTable t;
        t.space = j.at("space").get<std::string>();
        t.p = j.at("p").get<double>();
        t.C = j.at("C").get<double>();
        for (const auto& row : j.at("P"))
            t.P.emplace_back(row[0].get<long>(), row[1].get<long>());
        for (const auto& row : j.value("L", nlohmann::json::array()))
            t.L.emplace_back(row[0].get<long>(), row[1].get<long>());
        for (const auto& row : j.value("eps", nlohmann::json::array()))
            t.eps.emplace_back(row[0].get<long>(), row[1].get<double>());
        t.sigma = j.value("sigma", 1.0);
        t.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("witnesses")) t.witnesses = j.at("witnesses");
        t.normalize_P();
        return t;
    }

private:
    void normalize_P() {
        std::sort(P.begin(), P.end());
        long run = 0;
        for (auto& [n, pn] : P) {
            pn = std::max(pn, run);
            run = pn;
        }
    }
};

struct AnEstimate {
    double c_lower = 1.0;
    long n = 1;
    Index after = 0;
    nlohmann::ordered_json witness;  // extremal tuple, serialized
};

// Probes the two-sided block inequality
//   C^-p sum ||y_i||^p <= ||sum y_i||^p <= C^p sum ||y_i||^p
// (and its dual with exponent q) on seeded/enumerated successive normalized
// n-tuples supported after N, and returns the largest violation-derived
// lower bound on C. Dual-side sums use evaluation-based lower estimates of
// the dual norm, so every reported bound is a genuine lower bound; the
// degenerate tuple with vanishing tail blocks forces C >= 1.
inline AnEstimate estimate_An_constants(const SpaceParams& sp, long n, Index N,
                                        long budget, std::uint64_t seed) {
    if (n < 1) throw InvalidInput("property probe needs n >= 1");
    if (budget < 1) throw InvalidInput("property probe needs a positive budget");

    AnEstimate est;
    est.n = n;
    est.after = N;
    est.c_lower = 1.0;
    if (n == 1) {
        // a single normalized block realizes both inequalities with C = 1
        est.witness = nlohmann::ordered_json{{"n", 1}, {"after", N}, {"c_lower", 1.0}};
        return est;
    }

    const double p = sp.p;
    const double q = sp.q();
    double best = 1.0;
    std::vector<VecF> best_blocks;

    for (long trial = 0; trial < budget; ++trial) {
        Rng rng(seed * 1000003ULL + static_cast<std::uint64_t>(trial));
        std::vector<VecF> blocks;
        Index pos = N + 1;
        for (long b = 0; b < n; ++b) {
            long width;
            if (trial == 0) width = 1;
            else if (trial == 1) width = 2;
            else if (trial == 2) width = 3;
            else width = 1 + rng.uniform_int(0, 2);
            std::vector<VecF::Entry> e;
            for (long t = 0; t < width; ++t) {
                double c = trial <= 2 ? 1.0 : rng.uniform(0.25, 1.0);
                e.emplace_back(pos++, c);
            }
            VecF raw = VecF::from_entries(std::move(e));
            blocks.push_back(scale(raw, 1.0 / space_norm(sp, raw)));
        }
        const VecF total = sum_of(blocks);
        const double sum_norm = space_norm(sp, total);
        const double rhs = std::pow(static_cast<double>(n), 1.0 / p);
        double c_trial = std::max(sum_norm / rhs, rhs / sum_norm);

        if (q < std::numeric_limits<double>::infinity()) {
            std::vector<VecF> duals;
            duals.reserve(blocks.size());
            for (const auto& b : blocks)
                duals.push_back(space_norming_functional(sp, b));
            const VecF dual_total = sum_of(duals);
            const double dual_est = estimate_dual_norm(
                sp, dual_total, 8, seed * 7919ULL + static_cast<std::uint64_t>(trial));
            const double rhs_q = std::pow(static_cast<double>(n), 1.0 / q);
            c_trial = std::max(c_trial, dual_est / rhs_q);
        }

        if (c_trial > best) {
            best = c_trial;
            best_blocks = blocks;
        }
    }

    est.c_lower = std::max(1.0, best);
    nlohmann::ordered_json w;
    w["n"] = n;
    w["after"] = N;
    w["c_lower"] = est.c_lower;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& b : best_blocks) arr.push_back(vector_to_json(b));
    w["blocks"] = std::move(arr);
    est.witness = std::move(w);
    return est;
}

} // namespace normlab
