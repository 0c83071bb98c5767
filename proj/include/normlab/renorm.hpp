#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "normlab/errors.hpp"
#include "normlab/rng.hpp"
#include "normlab/spaces.hpp"
#include "normlab/sparse_vector.hpp"

namespace normlab {

// An equivalent norm built from a finite functional family. Three shapes:
//   epsilon form: |x| = ||x|| + (1/eps) sup_A* |a*(x)|
//   tau form:     |x| = sup_A* |a*(x)| + tau ||x||
//   scaled form:  |x| = scale * sup_A* |a*(x)|
struct RenormSpec {
    enum class Form { Epsilon, Tau, Scaled };
    Form form = Form::Epsilon;
    double eps = 1.0;    // epsilon form
    double tau = 0.0;    // tau form
    double scale = 1.0;  // scaled form
    std::vector<VecF> family;
    SpaceParams base;
};

inline double family_sup(const std::vector<VecF>& family, const VecF& x) {
    double best = 0.0;
    for (const auto& a : family) best = std::max(best, std::fabs(dot(a, x)));
    return best;
}

inline double eval_renorm(const RenormSpec& spec, const VecF& x) {
    if (spec.family.empty()) throw InvalidInput("renorm family may not be empty");
    const double sup = family_sup(spec.family, x);
    switch (spec.form) {
        case RenormSpec::Form::Epsilon:
            if (!(spec.eps > 0)) throw InvalidInput("epsilon form needs eps > 0");
            return space_norm(spec.base, x) + sup / spec.eps;
        case RenormSpec::Form::Tau:
            if (!(spec.tau > 0)) throw InvalidInput("tau form needs tau > 0");
            return sup + spec.tau * space_norm(spec.base, x);
        case RenormSpec::Form::Scaled:
            return spec.scale * sup;
    }
    throw InvalidInput("unknown renorm form");
}

// sup_A* |a*(a)| >= delta ||a|| for every a; returns the first violator.
struct DeltaNormingResult {
    bool ok = true;
    std::optional<std::size_t> violator;
    double worst_ratio = std::numeric_limits<double>::infinity();
};

inline DeltaNormingResult is_delta_norming(const std::vector<VecF>& family,
                                           const std::vector<VecF>& vectors,
                                           double delta, const SpaceParams& base) {
    DeltaNormingResult res;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        const double nrm = space_norm(base, vectors[i]);
        if (nrm == 0.0) continue;
        const double ratio = family_sup(family, vectors[i]) / nrm;
        res.worst_ratio = std::min(res.worst_ratio, ratio);
        if (ratio < delta && res.ok) {
            res.ok = false;
            res.violator = i;
        }
    }
    return res;
}

// Witness-based distortion report: for unit vectors a (well normed by the
// family) and b (nearly invisible to it), |a| / |b| bounds the distortion
// from below; with |a| >= delta/eps and |b| <= 2 the ratio is at least
// (delta/eps)/2.
struct DistortionReport {
    double a_renorm = 0.0;
    double b_renorm = 0.0;
    double a_base = 0.0;
    double b_base = 0.0;
    double ratio = 0.0;
    double delta = 0.0;
    bool a_large = false;  // |a| >= delta/eps
    bool b_small = false;  // |b| <= 2
    bool shape_bound = false;  // ratio >= (delta/eps)/2 when both flags hold
};

inline DistortionReport distortion_witness(const VecF& a, const VecF& b,
                                           const RenormSpec& spec, double delta) {
    DistortionReport rep;
    rep.delta = delta;
    rep.a_base = space_norm(spec.base, a);
    rep.b_base = space_norm(spec.base, b);
    if (std::fabs(rep.a_base - 1.0) > 1e-6 || std::fabs(rep.b_base - 1.0) > 1e-6)
        throw InvalidInput("distortion witnesses must be unit vectors in the base norm");
    rep.a_renorm = eval_renorm(spec, a);
    rep.b_renorm = eval_renorm(spec, b);
    rep.ratio = rep.a_renorm / rep.b_renorm;
    if (spec.form == RenormSpec::Form::Epsilon) {
        rep.a_large = rep.a_renorm >= delta / spec.eps - 1e-9;
        rep.b_small = rep.b_renorm <= 2.0 + 1e-9;
        rep.shape_bound =
            !(rep.a_large && rep.b_small) ||
            rep.ratio >= (delta / spec.eps) / 2.0 - 1e-9;
    }
    return rep;
}

// Finite block subspace: normalized successive blocks.
class BlockSubspace {
public:
    explicit BlockSubspace(std::vector<VecF> blocks, const SpaceParams& base)
        : blocks_(std::move(blocks)) {
        for (const auto& b : blocks_.blocks()) {
            if (std::fabs(space_norm(base, b) - 1.0) > 1e-6)
                throw InvalidInput("subspace blocks must be normalized");
        }
    }

    std::size_t dimension() const { return blocks_.size(); }
    const std::vector<VecF>& blocks() const { return blocks_.blocks(); }

    VecF combine(const std::vector<double>& coeffs) const {
        VecF acc;
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            if (coeffs[i] == 0.0) continue;
            acc = add(acc, scale(blocks_.blocks()[i], coeffs[i]));
        }
        return acc;
    }

private:
    BlockSequence<double> blocks_;
};

// Exploratory max/min of the renorm over the base-norm unit sphere of the
// span. Exhaustive angular grid for dimension <= 2, grid + refinement for
// dimension 3, seeded sampling plus pairwise-rotation descent beyond.
// Estimates only -- never certified suprema.
struct DistortionSearchResult {
    double ratio_estimate = 1.0;
    double max_value = 0.0;
    double min_value = 0.0;
    std::vector<double> argmax;
    std::vector<double> argmin;
};

inline DistortionSearchResult distortion_search(const RenormSpec& spec,
                                                const BlockSubspace& sub,
                                                long budget, std::uint64_t seed) {
    if (sub.dimension() < 1) throw InvalidInput("subspace dimension must be >= 1");
    if (budget < 1) throw InvalidInput("distortion search needs a positive budget");
    const std::size_t d = sub.dimension();

    DistortionSearchResult res;
    double vmax = -1.0, vmin = std::numeric_limits<double>::infinity();
    std::vector<double> amax, amin;

    auto consider = [&](const std::vector<double>& coeffs) {
        VecF x = sub.combine(coeffs);
        if (x.is_zero()) return;
        const double base = space_norm(spec.base, x);
        if (base <= 0) return;
        const double v = eval_renorm(spec, scale(x, 1.0 / base));
        if (v > vmax) {
            vmax = v;
            amax = coeffs;
        }
        if (v < vmin) {
            vmin = v;
            amin = coeffs;
        }
    };

    if (d == 1) {
        consider({1.0});
        res.ratio_estimate = 1.0;
        res.max_value = vmax;
        res.min_value = vmax;
        res.argmax = res.argmin = {1.0};
        return res;
    }

    if (d == 2) {
        const long steps = std::max<long>(budget, 8);
        for (long t = 0; t < steps; ++t) {
            const double th = 2.0 * M_PI * static_cast<double>(t) / steps;
            consider({std::cos(th), std::sin(th)});
        }
    } else if (d == 3) {
        const long steps = std::max<long>(static_cast<long>(std::sqrt(budget)), 8);
        for (long u = 0; u < steps; ++u) {
            const double a = M_PI * static_cast<double>(u) / (steps - 1);
            for (long t = 0; t < steps; ++t) {
                const double b = 2.0 * M_PI * static_cast<double>(t) / steps;
                consider({std::sin(a) * std::cos(b), std::sin(a) * std::sin(b),
                          std::cos(a)});
            }
        }
    } else {
        Rng rng(seed);
        for (long t = 0; t < budget; ++t) {
            std::vector<double> c(d);
            for (auto& v : c) v = rng.uniform(-1.0, 1.0);
            consider(c);
        }
        // pairwise rotation descent from the current extremes
        for (int which = 0; which < 2; ++which) {
            std::vector<double> cur = which == 0 ? amax : amin;
            if (cur.empty()) continue;
            for (int pass = 0; pass < 4; ++pass) {
                for (std::size_t i = 0; i < d; ++i) {
                    for (std::size_t j = i + 1; j < d; ++j) {
                        for (double th : {0.2, -0.2, 0.05, -0.05}) {
                            std::vector<double> cand = cur;
                            const double ci = cand[i], cj = cand[j];
                            cand[i] = ci * std::cos(th) - cj * std::sin(th);
                            cand[j] = ci * std::sin(th) + cj * std::cos(th);
                            consider(cand);
                        }
                    }
                }
                cur = which == 0 ? amax : amin;
            }
        }
    }

    res.max_value = vmax;
    res.min_value = vmin;
    res.ratio_estimate = vmin > 0 ? vmax / vmin : std::numeric_limits<double>::infinity();
    res.argmax = std::move(amax);
    res.argmin = std::move(amin);
    return res;
}

// min over generated members a of dist(a, span(sub)) in the base norm, via
// per-coordinate line search (the objective is convex in the coefficients).
inline double asymptotic_distance(const std::vector<VecF>& members,
                                  const BlockSubspace& sub, const SpaceParams& base,
                                  long budget) {
    if (members.empty()) throw InvalidInput("no members generated");
    const std::size_t d = sub.dimension();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& a : members) {
        std::vector<double> c(d, 0.0);
        auto dist = [&](const std::vector<double>& cs) {
            return space_norm(base, subtract(a, sub.combine(cs)));
        };
        double cur = dist(c);
        const long passes = std::max<long>(4, budget / static_cast<long>(d * 24));
        for (long pass = 0; pass < passes; ++pass) {
            for (std::size_t i = 0; i < d; ++i) {
                double lo = c[i] - 4.0, hi = c[i] + 4.0;
                for (int it = 0; it < 48; ++it) {
                    const double m1 = lo + (hi - lo) / 3.0;
                    const double m2 = hi - (hi - lo) / 3.0;
                    std::vector<double> c1 = c, c2 = c;
                    c1[i] = m1;
                    c2[i] = m2;
                    if (dist(c1) <= dist(c2)) hi = m2;
                    else lo = m1;
                }
                c[i] = (lo + hi) / 2.0;
                cur = dist(c);
            }
        }
        best = std::min(best, cur);
    }
    return best;
}

} // namespace normlab
