#pragma once

#include <cmath>
#include <string>

#include "normlab/errors.hpp"
#include "normlab/rng.hpp"
#include "normlab/schlumprecht.hpp"
#include "normlab/sparse_vector.hpp"
#include "normlab/tsirelson.hpp"

namespace normlab {

enum class SpaceKind { Schlumprecht, Tsirelson, ConvexifiedTsirelson, LpOracle };

// Which norm a float-mode vector lives under, plus the exponent for the
// convexified / oracle families. Tags: s | t | t2 | tp:<p> | lp:<p>.
struct SpaceParams {
    SpaceKind kind = SpaceKind::ConvexifiedTsirelson;
    double p = 2.0;

    double q() const {
        if (p <= 1.0) return std::numeric_limits<double>::infinity();
        return p / (p - 1.0);
    }

    bool has_exponent() const {
        return kind == SpaceKind::ConvexifiedTsirelson || kind == SpaceKind::LpOracle;
    }

    static SpaceParams parse(const std::string& tag) {
        SpaceParams sp;
        if (tag == "s") {
            sp.kind = SpaceKind::Schlumprecht;
            sp.p = 1.0;
        } else if (tag == "t") {
            sp.kind = SpaceKind::Tsirelson;
            sp.p = 1.0;
        } else if (tag == "t2") {
            sp.kind = SpaceKind::ConvexifiedTsirelson;
            sp.p = 2.0;
        } else if (tag.rfind("tp:", 0) == 0) {
            sp.kind = SpaceKind::ConvexifiedTsirelson;
            sp.p = std::stod(tag.substr(3));
            if (!(sp.p > 1.0))
                throw InvalidInput("convexified space needs p > 1");
        } else if (tag.rfind("lp:", 0) == 0) {
            sp.kind = SpaceKind::LpOracle;
            sp.p = std::stod(tag.substr(3));
            if (!(sp.p >= 1.0)) throw InvalidInput("lp oracle needs p >= 1");
        } else {
            throw ParseError("unknown space tag: " + tag);
        }
        return sp;
    }

    std::string tag() const {
        switch (kind) {
            case SpaceKind::Schlumprecht: return "s";
            case SpaceKind::Tsirelson: return "t";
            case SpaceKind::ConvexifiedTsirelson:
                if (p == 2.0) return "t2";
                return "tp:" + std::to_string(p);
            case SpaceKind::LpOracle: return "lp:" + std::to_string(p);
        }
        return "?";
    }
};

inline double space_norm(const SpaceParams& sp, const VecF& x) {
    switch (sp.kind) {
        case SpaceKind::Schlumprecht: return s_norm(x);
        case SpaceKind::Tsirelson: return t_norm(x);
        case SpaceKind::ConvexifiedTsirelson: return tp_norm(x, sp.p);
        case SpaceKind::LpOracle: return lp_norm(x, sp.p);
    }
    throw InvalidInput("unknown space");
}

// Realized dual vector v with v(x) = ||x|| and dual norm <= 1 (structural
// for s/t/t2, classical duality map for the lp oracle).
inline VecF space_norming_functional(const SpaceParams& sp, const VecF& x) {
    if (x.is_zero()) throw InvalidInput("zero vector has no norming functional");
    switch (sp.kind) {
        case SpaceKind::Schlumprecht:
            return s_norming_functional(x).realize();
        case SpaceKind::Tsirelson:
            return t_norming_functional(x);
        case SpaceKind::ConvexifiedTsirelson:
            return tp_norming_functional(x, sp.p);
        case SpaceKind::LpOracle: {
            if (sp.p == 1.0) {
                std::vector<VecF::Entry> out;
                for (const auto& [i, c] : x.entries())
                    out.emplace_back(i, c < 0 ? -1.0 : 1.0);
                return VecF::from_entries(std::move(out));
            }
            const double nrm = lp_norm(x, sp.p);
            std::vector<VecF::Entry> out;
            for (const auto& [i, c] : x.entries()) {
                const double mag = std::pow(std::fabs(c), sp.p - 1.0);
                out.emplace_back(i, (c < 0 ? -1.0 : 1.0) * mag /
                                        std::pow(nrm, sp.p - 1.0));
            }
            return VecF::from_entries(std::move(out));
        }
    }
    throw InvalidInput("unknown space");
}

// Lower estimate of the dual norm of v by evaluation against sampled unit
// vectors on the support of v (plus natural candidates).
inline double estimate_dual_norm(const SpaceParams& sp, const VecF& v,
                                 long budget, std::uint64_t seed) {
    if (v.is_zero()) return 0.0;
    double best = 0.0;
    auto consider = [&](const VecF& cand) {
        if (cand.is_zero()) return;
        const double nrm = space_norm(sp, cand);
        if (nrm <= 0) return;
        best = std::max(best, std::fabs(dot(v, cand)) / nrm);
    };
    // basis directions and the |v|^(q-1) profile
    for (const auto& [i, c] : v.entries()) consider(VecF::basis(i));
    if (sp.p > 1.0) {
        std::vector<VecF::Entry> prof;
        for (const auto& [i, c] : v.entries())
            prof.emplace_back(i, (c < 0 ? -1.0 : 1.0) *
                                     std::pow(std::fabs(c), sp.q() - 1.0));
        consider(VecF::from_entries(std::move(prof)));
    }
    Rng rng(seed);
    for (long t = 0; t < budget; ++t) {
        std::vector<VecF::Entry> e;
        for (const auto& [i, c] : v.entries()) {
            const double u = rng.uniform(-1.0, 1.0);
            if (u != 0.0) e.emplace_back(i, u);
        }
        consider(VecF::from_entries(std::move(e)));
    }
    return best;
}

} // namespace normlab
