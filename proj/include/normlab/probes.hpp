#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "normlab/calibration.hpp"
#include "normlab/constructions.hpp"
#include "normlab/errors.hpp"
#include "normlab/renorm.hpp"
#include "normlab/rng.hpp"
#include "normlab/spaces.hpp"
#include "normlab/sparse_vector.hpp"
#include "normlab/vector_io.hpp"

namespace normlab {

// Dual norm: closed form for the lp oracle, evaluation-based lower
// estimate elsewhere.
inline double dual_norm_estimate(const SpaceParams& sp, const VecF& v, long budget,
                                 std::uint64_t seed) {
    if (sp.kind == SpaceKind::LpOracle)
        return lp_norm(v, sp.q());
    return estimate_dual_norm(sp, v, budget, seed);
}

// --------------------------------------------------------------------------
// F / G estimates: lower bounds for the smallest constants C in
//   ||y_1 + ... + y_n|| <= C (sum ||y_i||^p)^(1/p)           (successive, ball)
//   sup_{y in ball} (x*_1 + ... + x*_n)(y) <= C (sum ||x*_i||^q)^(1/q)
// Sampling cannot certify a supremum, so the results are reported as lower
// estimates; tuples with vanishing tail blocks force both constants >= 1.
// --------------------------------------------------------------------------
struct FGEstimate {
    long n = 1;
    Index after = 0;
    double F_lower = 1.0;
    double G_lower = 1.0;
    nlohmann::ordered_json witness;
};

inline FGEstimate estimate_FG(const SpaceParams& sp, long n, Index after_k,
                              long budget, std::uint64_t seed) {
    if (n < 1) throw InvalidInput("F/G estimation needs n >= 1");
    if (budget < 1) throw InvalidInput("F/G estimation needs a positive budget");
    const double p = sp.p, q = sp.q();

    FGEstimate est;
    est.n = n;
    est.after = after_k;
    double bestF = 1.0, bestG = 1.0;
    std::vector<VecF> bestF_blocks;

    for (long trial = 0; trial < budget; ++trial) {
        Rng rng(seed * 2654435761ULL + static_cast<std::uint64_t>(trial));
        std::vector<VecF> blocks;
        Index pos = after_k + 1;
        for (long b = 0; b < n; ++b) {
            const long width = trial == 0 ? 1 : 1 + rng.uniform_int(0, 2);
            std::vector<VecF::Entry> e;
            for (long t = 0; t < width; ++t)
                e.emplace_back(pos++, trial == 0 ? 1.0 : rng.uniform(0.25, 1.0));
            VecF raw = VecF::from_entries(std::move(e));
            VecF unit = scale(raw, 1.0 / space_norm(sp, raw));
            const double c = trial == 0 ? 1.0 : rng.uniform(0.3, 1.0);
            blocks.push_back(scale(unit, c));
        }
        double lp_sum = 0.0;
        for (const auto& b : blocks) lp_sum += std::pow(space_norm(sp, b), p);
        const double denom = std::pow(lp_sum, 1.0 / p);
        const double ratioF = space_norm(sp, sum_of(blocks)) / denom;
        if (ratioF > bestF) {
            bestF = ratioF;
            bestF_blocks = blocks;
        }

        if (q < std::numeric_limits<double>::infinity()) {
            std::vector<VecF> duals;
            double q_sum = 0.0;
            for (const auto& b : blocks) {
                VecF unit = scale(b, 1.0 / space_norm(sp, b));
                VecF d = space_norming_functional(sp, unit);
                q_sum += 1.0;  // each norming functional has dual norm 1
                duals.push_back(std::move(d));
            }
            const double denom_q = std::pow(q_sum, 1.0 / q);
            const double ratioG =
                dual_norm_estimate(sp, sum_of(duals), 8,
                                   seed * 31ULL + static_cast<std::uint64_t>(trial)) /
                denom_q;
            bestG = std::max(bestG, ratioG);
        }
    }

    est.F_lower = std::max(1.0, bestF);
    est.G_lower = std::max(1.0, bestG);
    nlohmann::ordered_json w;
    w["n"] = n;
    w["after"] = after_k;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& b : bestF_blocks) arr.push_back(vector_to_json(b));
    w["F_blocks"] = std::move(arr);
    est.witness = std::move(w);
    return est;
}

// --------------------------------------------------------------------------
// Two-exponent cut bound: with sum ||x*_j||^q <= 1 and parts A_1..A_m of a
// length-N structure,  sum_j ||x*_j|| |A_j|^(1/p) <= N^(1/p).
// --------------------------------------------------------------------------
struct HolderCutResult {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

inline HolderCutResult holder_cut_check(const std::vector<double>& dual_norms,
                                        const std::vector<long>& part_sizes, long N,
                                        double p) {
    if (dual_norms.size() != part_sizes.size() || dual_norms.empty())
        throw InvalidInput("malformed partition");
    if (!(p >= 1.0)) throw InvalidInput("cut bound needs p >= 1");
    const double q = p <= 1.0 ? std::numeric_limits<double>::infinity()
                              : p / (p - 1.0);
    double qsum = 0.0;
    long total = 0;
    for (std::size_t j = 0; j < dual_norms.size(); ++j) {
        if (dual_norms[j] < 0 || part_sizes[j] < 0)
            throw InvalidInput("malformed partition");
        total += part_sizes[j];
        if (std::isinf(q))
            qsum = std::max(qsum, dual_norms[j]);
        else
            qsum += std::pow(dual_norms[j], q);
    }
    if (qsum > 1.0 + 1e-9)
        throw InvalidInput("dual norms must satisfy sum ||x*_j||^q <= 1");
    if (total > N) throw InvalidInput("parts exceed the structure length");

    HolderCutResult res;
    for (std::size_t j = 0; j < dual_norms.size(); ++j)
        res.lhs += dual_norms[j] *
                   std::pow(static_cast<double>(part_sizes[j]), 1.0 / p);
    res.rhs = std::pow(static_cast<double>(N), 1.0 / p);
    res.pass = res.lhs <= res.rhs + 1e-9;
    return res;
}

// --------------------------------------------------------------------------
// Cross actions between constructed families.
// --------------------------------------------------------------------------
struct FamilyMember {
    VecF x;     // primal element
    VecF dual;  // realized dual element
};

struct ActionMatrix {
    std::string row_tag, col_tag;
    std::vector<std::vector<double>> entries;  // |dual_i(x_j)|
    double sup_entry = 0.0;
    std::vector<double> matched;  // dual_i(x_i) when tags coincide
};

inline ActionMatrix cross_action(const std::vector<FamilyMember>& fam_rows,
                                 const std::vector<FamilyMember>& fam_cols,
                                 const std::string& row_tag,
                                 const std::string& col_tag) {
    if (fam_rows.empty() || fam_cols.empty())
        throw InvalidInput("cross action needs nonempty families");
    ActionMatrix m;
    m.row_tag = row_tag;
    m.col_tag = col_tag;
    m.entries.assign(fam_rows.size(), std::vector<double>(fam_cols.size(), 0.0));
    for (std::size_t i = 0; i < fam_rows.size(); ++i) {
        for (std::size_t j = 0; j < fam_cols.size(); ++j) {
            const double v = std::fabs(dot(fam_rows[i].dual, fam_cols[j].x));
            m.entries[i][j] = v;
            m.sup_entry = std::max(m.sup_entry, v);
        }
    }
    if (row_tag == col_tag) {
        for (std::size_t i = 0; i < std::min(fam_rows.size(), fam_cols.size()); ++i)
            m.matched.push_back(dot(fam_rows[i].dual, fam_cols[i].x));
    }
    return m;
}

// --------------------------------------------------------------------------
// Moduli of convexity on 2-d sections, and the alpha cascade built from
// them: alpha_1 inverts the measured moduli, then
//   alpha_2(e) = C (alpha_1(e) + e^min(1/p,1/q))
//   alpha_3(e) = C (alpha_2(e) + e^min(1/p,1/q))
//   alpha(e)   = alpha_3(e^(1/3)).
// --------------------------------------------------------------------------
struct ModulusProfile {
    std::string space_tag;
    double C = 1.0;
    std::vector<double> eps_grid;
    std::vector<double> delta;       // modulus of convexity
    std::vector<double> delta_star;  // dual modulus
    std::vector<double> alpha1, alpha2, alpha3, alpha;
};

namespace detail {

// min over sampled section pairs with separation >= eps of 1 - ||mid||.
inline void section_modulus(const std::vector<VecF>& dirs,
                            const std::vector<double>& norms_cache_unused,
                            const SpaceParams& sp, const std::vector<double>& eps_grid,
                            std::vector<double>& out, long steps,
                            bool dual_side, std::uint64_t seed) {
    (void)norms_cache_unused;
    const VecF& b1 = dirs[0];
    const VecF& b2 = dirs[1];
    auto norm_of = [&](const VecF& v) {
        return dual_side ? dual_norm_estimate(sp, v, 6, seed) : space_norm(sp, v);
    };
    std::vector<VecF> pts;
    pts.reserve(static_cast<std::size_t>(steps));
    for (long t = 0; t < steps; ++t) {
        const double th = 2.0 * M_PI * static_cast<double>(t) / steps;
        VecF x = add(scale(b1, std::cos(th)), scale(b2, std::sin(th)));
        const double nx = norm_of(x);
        if (nx <= 0) continue;
        pts.push_back(scale(x, 1.0 / nx));
    }
    for (std::size_t a = 0; a < pts.size(); ++a) {
        for (std::size_t b = a + 1; b < pts.size(); ++b) {
            const double sep = norm_of(subtract(pts[a], pts[b]));
            const double mid =
                norm_of(scale(add(pts[a], pts[b]), 0.5));
            for (std::size_t e = 0; e < eps_grid.size(); ++e) {
                if (sep >= eps_grid[e])
                    out[e] = std::min(out[e], 1.0 - mid);
            }
        }
    }
}

} // namespace detail

inline ModulusProfile estimate_moduli(const SpaceParams& sp, double C,
                                      std::vector<double> eps_grid, long sections,
                                      long steps, std::uint64_t seed) {
    std::sort(eps_grid.begin(), eps_grid.end());
    ModulusProfile prof;
    prof.space_tag = sp.tag();
    prof.C = C;
    prof.eps_grid = eps_grid;
    prof.delta.assign(eps_grid.size(), 1.0);
    prof.delta_star.assign(eps_grid.size(), 1.0);

    for (long s = 0; s < sections; ++s) {
        Rng rng(seed + static_cast<std::uint64_t>(s) * 7727ULL);
        const Index base = 2 + rng.uniform_int(0, 12);
        const long w1 = 1 + rng.uniform_int(0, 2);
        const long w2 = 1 + rng.uniform_int(0, 2);
        std::vector<VecF::Entry> e1, e2;
        Index pos = base;
        for (long t = 0; t < w1; ++t) e1.emplace_back(pos++, rng.uniform(0.5, 1.0));
        for (long t = 0; t < w2; ++t) e2.emplace_back(pos++, rng.uniform(0.5, 1.0));
        VecF b1 = VecF::from_entries(std::move(e1));
        VecF b2 = VecF::from_entries(std::move(e2));
        b1 = scale(b1, 1.0 / space_norm(sp, b1));
        b2 = scale(b2, 1.0 / space_norm(sp, b2));
        detail::section_modulus({b1, b2}, {}, sp, eps_grid, prof.delta, steps, false,
                                seed);
        VecF d1 = space_norming_functional(sp, b1);
        VecF d2 = space_norming_functional(sp, b2);
        detail::section_modulus({d1, d2}, {}, sp, eps_grid, prof.delta_star, steps,
                                true, seed + 13);
    }
    for (auto& v : prof.delta) v = std::max(0.0, v);
    for (auto& v : prof.delta_star) v = std::max(0.0, v);
    // enforce monotonicity (delta nondecreasing in eps)
    for (std::size_t e = 1; e < eps_grid.size(); ++e) {
        prof.delta[e] = std::max(prof.delta[e], prof.delta[e - 1]);
        prof.delta_star[e] = std::max(prof.delta_star[e], prof.delta_star[e - 1]);
    }

    const double expo = std::min(1.0 / sp.p, 1.0 / sp.q());
    auto inv_modulus = [&](const std::vector<double>& curve, double eps) {
        // largest separation s on the grid with curve(s) <= eps
        double s = 0.0;
        for (std::size_t e = 0; e < prof.eps_grid.size(); ++e)
            if (curve[e] <= eps) s = prof.eps_grid[e];
        return s;
    };
    prof.alpha1.resize(eps_grid.size());
    prof.alpha2.resize(eps_grid.size());
    prof.alpha3.resize(eps_grid.size());
    prof.alpha.resize(eps_grid.size());
    auto alpha1_at = [&](double eps) {
        return std::max(inv_modulus(prof.delta, eps), inv_modulus(prof.delta_star, eps));
    };
    auto alpha2_at = [&](double eps) {
        return C * (alpha1_at(eps) + std::pow(eps, expo));
    };
    auto alpha3_at = [&](double eps) {
        return C * (alpha2_at(eps) + std::pow(eps, expo));
    };
    for (std::size_t e = 0; e < eps_grid.size(); ++e) {
        prof.alpha1[e] = alpha1_at(eps_grid[e]);
        prof.alpha2[e] = alpha2_at(eps_grid[e]);
        prof.alpha3[e] = alpha3_at(eps_grid[e]);
        prof.alpha[e] = alpha3_at(std::cbrt(eps_grid[e]));
    }
    return prof;
}

inline double alpha_at(const ModulusProfile& prof, double eps,
                       const SpaceParams& sp) {
    const double expo = std::min(1.0 / sp.p, 1.0 / sp.q());
    auto inv_modulus = [&](const std::vector<double>& curve, double e) {
        double s = 0.0;
        for (std::size_t i = 0; i < prof.eps_grid.size(); ++i)
            if (curve[i] <= e) s = prof.eps_grid[i];
        return s;
    };
    const double e3 = std::cbrt(eps);
    const double a1 = std::max(inv_modulus(prof.delta, e3),
                               inv_modulus(prof.delta_star, e3));
    const double a2 = prof.C * (a1 + std::pow(e3, expo));
    return prof.C * (a2 + std::pow(e3, expo));
}

// --------------------------------------------------------------------------
// Empirical transfer of small product mass to small projections: for
// couples (y, y*) and sampled subsets E with ||E yy*||_1 < eps, record the
// largest observed ||Ey|| and ||Ey*|| per eps bucket. Buckets are nested,
// so the curves are nondecreasing in eps by construction.
// --------------------------------------------------------------------------
struct Lemma2Slice {
    std::vector<double> eps_grid;  // ascending
    std::vector<double> max_Ey;
    std::vector<double> max_Eystar;
    std::vector<long> samples;  // qualifying subsets per bucket
};

inline Lemma2Slice lemma2_probe(const std::vector<std::pair<VecF, VecF>>& couples,
                                const SpaceParams& sp, std::vector<double> eps_grid,
                                std::uint64_t seed) {
    std::sort(eps_grid.begin(), eps_grid.end());
    Lemma2Slice slice;
    slice.eps_grid = eps_grid;
    slice.max_Ey.assign(eps_grid.size(), 0.0);
    slice.max_Eystar.assign(eps_grid.size(), 0.0);
    slice.samples.assign(eps_grid.size(), 0);

    for (std::size_t ci = 0; ci < couples.size(); ++ci) {
        const auto& [y, ystar] = couples[ci];
        const VecF yy = pointwise_product(y, ystar);
        std::vector<Index> supp;
        for (const auto& [i, c] : yy.entries()) supp.push_back(i);
        const std::size_t s = supp.size();

        auto handle = [&](const std::vector<Index>& subset) {
            const Segment E = Segment::of_set(subset);
            const double mass = lp_norm(project(E, yy), 1.0);
            const VecF Ey = project(E, y);
            const VecF Eystar = project(E, ystar);
            const double ny = Ey.is_zero() ? 0.0 : space_norm(sp, Ey);
            const double nys =
                Eystar.is_zero()
                    ? 0.0
                    : dual_norm_estimate(sp, Eystar, 4, seed ^ (ci * 977ULL));
            for (std::size_t e = 0; e < slice.eps_grid.size(); ++e) {
                if (mass < slice.eps_grid[e]) {
                    slice.max_Ey[e] = std::max(slice.max_Ey[e], ny);
                    slice.max_Eystar[e] = std::max(slice.max_Eystar[e], nys);
                    ++slice.samples[e];
                }
            }
        };

        if (s <= 12) {
            for (std::uint64_t mask = 0; mask < (1ULL << s); ++mask) {
                std::vector<Index> subset;
                for (std::size_t b = 0; b < s; ++b)
                    if (mask & (1ULL << b)) subset.push_back(supp[b]);
                handle(subset);
            }
        } else {
            handle({});  // the empty subset qualifies in every bucket
            for (Index i : supp) handle({i});
            Rng rng(seed + ci);
            for (int t = 0; t < 4096; ++t) {
                std::vector<Index> subset;
                for (std::size_t b = 0; b < s; ++b)
                    if (rng.coin()) subset.push_back(supp[b]);
                handle(subset);
            }
        }
    }
    return slice;
}

// --------------------------------------------------------------------------
// sqrt pairing / l1 distance probe for nonnegative unit products:
//   ||t - t'||_1 >= 2 - 2 sqrt(t).sqrt(t').
// --------------------------------------------------------------------------
struct OrthogonalityResult {
    double sqrt_pairing = 0.0;
    double l1_distance = 0.0;
    bool bound_ok = false;
};

inline OrthogonalityResult orthogonality_probe(const VecF& t, const VecF& tp) {
    if (!is_nonnegative(t) || !is_nonnegative(tp))
        throw InvalidInput("orthogonality probe needs nonnegative inputs");
    if (std::fabs(lp_norm(t, 1.0) - 1.0) > 1e-9 ||
        std::fabs(lp_norm(tp, 1.0) - 1.0) > 1e-9)
        throw InvalidInput("orthogonality probe needs unit l1 inputs");
    OrthogonalityResult res;
    res.sqrt_pairing = dot(sqrt_pointwise(t), sqrt_pointwise(tp));
    res.l1_distance = lp_norm(subtract(t, tp), 1.0);
    res.bound_ok = res.l1_distance >= 2.0 - 2.0 * res.sqrt_pairing - 1e-9;
    return res;
}

// --------------------------------------------------------------------------
// Sequential distortion suite: norms |y|_k = C^-2 sup over the k-th stored
// family, evaluated on each family's own witness. The diagonal entries are
// at least C^-2 by self-pairing; off-diagonal entries are the measured
// cross actions, reported against the 2 C^4 alpha(2^-min(j,k)) shape with
// the measured alpha.
// --------------------------------------------------------------------------
struct SeqSuiteResult {
    std::vector<long> schedule;  // gamma lengths m_k
    double C = 1.0;
    std::vector<GammaCouple> families;
    std::vector<std::vector<double>> witness_norms;  // [k][j] = |y_k|_j
    std::vector<CertRow> checks;
    ModulusProfile profile;
};

inline SeqSuiteResult seq_distortion_suite(const SpaceParams& sp,
                                           const std::vector<long>& schedule,
                                           const LacunaritySchedule& lac, Index start,
                                           long budget, std::uint64_t seed,
                                           const CalibrationTable* calib,
                                           long width = 2) {
    if (schedule.empty()) throw InvalidInput("schedule must contain at least one level");
    SeqSuiteResult res;
    res.schedule = schedule;
    res.C = calib ? std::max(1.0, calib->C) : 1.0;

    // Schedule rows against the calibrated L and eps tables when present.
    if (calib) {
        for (std::size_t k = 0; k + 1 < schedule.size(); ++k) {
            const long L = calib->lookup_L(schedule[k], schedule[k] + 1);
            res.checks.push_back(CertRow{"m_{k+1} >= L(m_k)",
                                         static_cast<double>(schedule[k + 1]),
                                         static_cast<double>(L),
                                         schedule[k + 1] >= L});
        }
        for (std::size_t k = 0; k < schedule.size(); ++k) {
            const double eps_k = calib->lookup_eps(schedule[k], 0.0);
            const double bound = std::exp2(-static_cast<double>(k) - 3.0);
            res.checks.push_back(CertRow{"eps_{m_k} < 2^{-k-2}", eps_k, bound,
                                         eps_k < bound});
        }
    }

    // Families anchored at a common start so cross actions are nontrivial.
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        const long mk = schedule[k];
        std::vector<long> sizes;
        for (long i = 0; i < mk; ++i) sizes.push_back(2L << i);
        res.families.push_back(
            make_gamma(sp, mk, sizes, lac, start, budget, width, calib));
    }

    const std::size_t count = schedule.size();
    res.witness_norms.assign(count, std::vector<double>(count, 0.0));
    const double c2 = res.C * res.C;
    for (std::size_t k = 0; k < count; ++k) {
        for (std::size_t j = 0; j < count; ++j) {
            res.witness_norms[k][j] =
                std::fabs(dot(res.families[j].ystar, res.families[k].y)) / c2;
        }
    }

    for (std::size_t k = 0; k < count; ++k) {
        res.checks.push_back(CertRow{"|z|_k >= C^-2", res.witness_norms[k][k],
                                     1.0 / c2,
                                     res.witness_norms[k][k] >= 1.0 / c2 - 1e-9});
        for (std::size_t j = 0; j < count; ++j) {
            if (j == k) continue;
            res.checks.push_back(CertRow{"off-diagonal < diagonal",
                                         res.witness_norms[k][j],
                                         res.witness_norms[k][k],
                                         res.witness_norms[k][j] <
                                             res.witness_norms[k][k]});
        }
    }

    // measured alpha for the reported bound shape
    res.profile = estimate_moduli(sp, res.C, {0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0},
                                  3, 48, seed);
    for (std::size_t k = 0; k < count; ++k) {
        for (std::size_t j = 0; j < count; ++j) {
            if (j == k) continue;
            const double eps = std::exp2(-static_cast<double>(std::min(j, k)) - 1.0);
            const double bound = 2.0 * std::pow(res.C, 4.0) *
                                 alpha_at(res.profile, eps, sp) *
                                 res.witness_norms[k][k];
            res.checks.push_back(CertRow{"|z|_j <= 2C^4 alpha(2^-min(j,k)) |z|_k",
                                         res.witness_norms[k][j], bound,
                                         res.witness_norms[k][j] <= bound + 1e-9});
        }
    }

    // family norms never exceed the base norm on sampled vectors as long as
    // the measured dual norms stay below C^2
    Rng rng(seed ^ 0xabcdULL);
    for (std::size_t k = 0; k < count; ++k) {
        const double dual_est = res.families[k].ystar_norm_est;
        res.checks.push_back(CertRow{"||z*|| <= C^2", dual_est, c2,
                                     dual_est <= c2 + 1e-9});
        for (int t = 0; t < 8; ++t) {
            const VecF& base_y = res.families[k].y;
            std::vector<VecF::Entry> e;
            for (const auto& [i, c] : base_y.entries())
                if (rng.coin()) e.emplace_back(i, rng.uniform(0.1, 1.0));
            VecF ysample = VecF::from_entries(std::move(e));
            if (ysample.is_zero()) continue;
            const double lhs =
                std::fabs(dot(res.families[k].ystar, ysample)) / c2;
            const double rhs = space_norm(sp, ysample);
            res.checks.push_back(
                CertRow{"|y|_k <= ||y||", lhs, rhs, lhs <= rhs + 1e-9});
        }
    }
    return res;
}

} // namespace normlab
