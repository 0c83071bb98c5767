#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "normlab/calibration.hpp"
#include "normlab/errors.hpp"
#include "normlab/functional_tree.hpp"
#include "normlab/phi.hpp"
#include "normlab/schlumprecht.hpp"
#include "normlab/spaces.hpp"
#include "normlab/sparse_vector.hpp"
#include "normlab/vector_io.hpp"

namespace normlab {

struct CertRow {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

inline nlohmann::ordered_json cert_rows_to_json(const std::vector<CertRow>& rows) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows)
        arr.push_back({{"name", r.name}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"pass", r.pass}});
    return arr;
}

// --------------------------------------------------------------------------
// Two-sided lp-equivalence measurement for a block family:
//   d (sum |c_i|^p)^(1/p) <= ||sum c_i x_i|| <= D (sum |c_i|^p)^(1/p)
// d and D are taken over a simplex grid on the nonnegative lp sphere
// (unconditionality reduces the sphere to that orthant) refined by local
// mass-transfer descent. d is an upper bound on the true minimum and D a
// lower bound on the true maximum; they are reported as such.
// --------------------------------------------------------------------------
struct EquivalenceCertificate {
    double d = 1.0;
    double D = 1.0;
    double p = 1.0;
    int grid = 64;
    std::vector<double> argmin_mass;
    std::vector<double> argmax_mass;
};

namespace detail {

inline VecF combine_blocks(const std::vector<VecF>& blocks,
                           const std::vector<double>& mass, double p) {
    VecF acc;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (mass[i] <= 0.0) continue;
        acc = add(acc, scale(blocks[i], std::pow(mass[i], 1.0 / p)));
    }
    return acc;
}

template <class Eval>
void descend(std::vector<double>& mass, double& value, bool minimize, double step0,
             const Eval& eval) {
    const std::size_t n = mass.size();
    bool improved = true;
    int guard = 0;
    while (improved && guard++ < 64) {
        improved = false;
        for (double step = step0; step > step0 / 16.0; step /= 2.0) {
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    if (i == j || mass[i] < step) continue;
                    std::vector<double> cand = mass;
                    cand[i] -= step;
                    cand[j] += step;
                    const double v = eval(cand);
                    if (minimize ? v < value - 1e-15 : v > value + 1e-15) {
                        mass = cand;
                        value = v;
                        improved = true;
                    }
                }
            }
        }
    }
}

} // namespace detail

inline EquivalenceCertificate verify_lp_equivalence(const BlockSeqF& blocks, double p,
                                                    int grid_resolution,
                                                    const SpaceParams& space) {
    if (blocks.size() == 0) throw InvalidInput("empty block family");
    if (!(p >= 1.0)) throw InvalidInput("equivalence exponent must satisfy p >= 1");
    for (const auto& b : blocks.blocks()) {
        if (std::fabs(space_norm(space, b) - 1.0) > 1e-6)
            throw InvalidInput("equivalence verification needs normalized blocks");
    }
    const std::size_t n = blocks.size();
    const int G = grid_resolution;

    EquivalenceCertificate cert;
    cert.p = p;
    cert.grid = G;
    double dmin = std::numeric_limits<double>::infinity();
    double dmax = -1.0;
    std::vector<double> mass(n, 0.0), argmin, argmax;

    auto eval_mass = [&](const std::vector<double>& ms) {
        return space_norm(space, detail::combine_blocks(blocks.blocks(), ms, p));
    };
    auto consider = [&](const std::vector<double>& ms) {
        const double v = eval_mass(ms);
        if (v < dmin) {
            dmin = v;
            argmin = ms;
        }
        if (v > dmax) {
            dmax = v;
            argmax = ms;
        }
    };

    if (n <= 3) {
        // full simplex grid over the masses |c_i|^p
        std::vector<int> units(n, 0);
        auto rec = [&](auto&& self, std::size_t i, int left) -> void {
            if (i == n - 1) {
                units[i] = left;
                for (std::size_t t = 0; t < n; ++t)
                    mass[t] = static_cast<double>(units[t]) / G;
                consider(mass);
                return;
            }
            for (int u = 0; u <= left; ++u) {
                units[i] = u;
                self(self, i + 1, left - u);
            }
        };
        rec(rec, 0, G);
    } else {
        // The full grid is exponential in the family size; beyond three
        // blocks the candidate set is corners, subset centers, all pairwise
        // edges at the grid resolution, and seeded interior points, ahead
        // of the descent below. The d/D brackets keep their one-sided
        // semantics either way.
        for (std::size_t i = 0; i < n; ++i) {
            std::fill(mass.begin(), mass.end(), 0.0);
            mass[i] = 1.0;
            consider(mass);
        }
        for (std::size_t lo = 0; lo < n; ++lo) {
            std::fill(mass.begin(), mass.end(), 0.0);
            for (std::size_t i = lo; i < n; ++i)
                mass[i] = 1.0 / static_cast<double>(n - lo);
            consider(mass);
        }
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        if (n <= 12) {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
        } else {
            for (std::size_t i = 0; i + 1 < n; ++i) pairs.emplace_back(i, i + 1);
            Rng prng(0x51a7eULL);
            for (int t = 0; t < 32; ++t) {
                const std::size_t i =
                    static_cast<std::size_t>(prng.uniform_int(0, n - 2));
                const std::size_t j = static_cast<std::size_t>(
                    prng.uniform_int(static_cast<std::int64_t>(i) + 1, n - 1));
                pairs.emplace_back(i, j);
            }
        }
        for (const auto& [i, j] : pairs) {
            for (int u = 0; u <= G; ++u) {
                std::fill(mass.begin(), mass.end(), 0.0);
                mass[i] = static_cast<double>(u) / G;
                mass[j] = 1.0 - mass[i];
                consider(mass);
            }
        }
        // interior points live on contiguous windows of few blocks so the
        // combined vector stays run-compressible
        Rng rng(0x9e3779b9ULL);
        for (int t = 0; t < 256; ++t) {
            const std::size_t wlen =
                2 + static_cast<std::size_t>(rng.uniform_int(0, 4));
            const std::size_t lo = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(n - std::min(wlen, n))));
            std::fill(mass.begin(), mass.end(), 0.0);
            double total = 0.0;
            for (std::size_t i = lo; i < std::min(lo + wlen, n); ++i) {
                mass[i] = rng.uniform01();
                total += mass[i];
            }
            if (total <= 0) continue;
            for (auto& m_i : mass) m_i /= total;
            consider(mass);
        }
    }

    detail::descend(argmin, dmin, true, 1.0 / (2.0 * G), eval_mass);
    detail::descend(argmax, dmax, false, 1.0 / (2.0 * G), eval_mass);

    cert.d = dmin;
    cert.D = dmax;
    cert.argmin_mass = std::move(argmin);
    cert.argmax_mass = std::move(argmax);
    return cert;
}

// --------------------------------------------------------------------------
// l1 averages: u of norm one written as n^-1 (x_1 + ... + x_n) with the
// normalized parts 2-equivalent to the unit-vector basis. Since flat parts
// of norm one average to something strictly below one, the identity holds
// for the rescaled parts beta * x_i; beta = 1/||n^-1 sum x_i|| is recorded
// and stays in [1, 2] exactly when the measured lower constant d is >= 1/2.
// --------------------------------------------------------------------------
struct L1Average {
    VecF u;
    long n = 1;
    std::vector<VecF> parts;  // normalized
    double beta = 1.0;
    EquivalenceCertificate cert;
    long width = 0;  // flat block width (0 when built on explicit groups)
};

inline L1Average make_l1_average_on_groups(const std::vector<std::vector<Index>>& groups,
                                           double tolerance = 1e-6,
                                           int grid_resolution = 64) {
    if (groups.empty()) throw InvalidInput("l1 average needs n >= 1 parts");
    const long n = static_cast<long>(groups.size());
    const SpaceParams s_space = SpaceParams::parse("s");

    std::vector<VecF> parts;
    parts.reserve(groups.size());
    for (const auto& g : groups) {
        if (g.empty()) throw InvalidInput("empty block in l1 average");
        std::vector<VecF::Entry> e;
        for (Index i : g) e.emplace_back(i, 1.0);
        VecF raw = VecF::from_entries(std::move(e));
        parts.push_back(scale(raw, 1.0 / s_norm(raw)));
    }
    BlockSeqF seq(parts);  // validates successiveness

    L1Average out;
    out.n = n;
    out.parts = parts;
    const VecF mean = scale(sum_of(parts), 1.0 / static_cast<double>(n));
    const double val = s_norm(mean);
    out.u = scale(mean, 1.0 / val);
    out.beta = 1.0 / val;

    if (std::fabs(s_norm(out.u) - 1.0) > tolerance)
        throw InfeasibleConstruction("l1 average failed to normalize", "||u|| = 1");

    out.cert = verify_lp_equivalence(seq, 1.0, grid_resolution, s_space);
    if (out.cert.d < 0.5) {
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "l1 average parts are not 2-equivalent: measured d=%.9f < 1/2",
                      out.cert.d);
        throw InfeasibleConstruction(buf, "d >= 1/2");
    }
    return out;
}

inline L1Average make_l1_average(long n, Index start, long width,
                                 double tolerance = 1e-6, int grid_resolution = 64) {
    if (n < 1) throw InvalidInput("l1 average needs n >= 1");
    if (width < 1) throw InvalidInput("l1 average needs block width >= 1");
    std::vector<std::vector<Index>> groups;
    groups.reserve(static_cast<std::size_t>(n));
    Index pos = start;
    for (long b = 0; b < n; ++b) {
        std::vector<Index> g;
        for (long t = 0; t < width; ++t) g.push_back(pos++);
        groups.push_back(std::move(g));
    }
    L1Average out = make_l1_average_on_groups(groups, tolerance, grid_resolution);
    out.width = width;
    return out;
}

// --------------------------------------------------------------------------
// Rapidly increasing sequences at a configurable lacunarity scale. The
// nominal conditions
//   phi(n_1/4) >= 36 k^2        phi(n_j)^(1/2) >= 2 |supp(u_{j-1})|
// force n_1 >= 4(2^(36k^2) - 1), far beyond any truncation for k >= 2, so
// both right-hand sides are multiplied by sigma in (0, 1]; sigma = 1 keeps
// the nominal conditions. Every certificate records sigma.
// --------------------------------------------------------------------------
struct LacunaritySchedule {
    double sigma = 1e-3;
    std::vector<long> sizes;  // explicit average sizes; empty = minimal feasible
    long block_width = 0;     // 0 = default per size
    long max_support = 1 << 20;
};

struct RISequence {
    std::vector<L1Average> averages;
    std::vector<long> sizes;
    double sigma = 1.0;
    std::vector<CertRow> cert;
};

namespace detail {

inline long default_ris_width(long n) { return std::max<long>(2, 4 * n); }

// smallest integer x with phi(x) >= target, or -1 when out of range
inline long invert_phi(double target, long cap) {
    if (target <= 0.0) return 1;
    if (target > 40.0) return -1;
    const double raw = std::exp2(target) - 1.0;
    if (raw > static_cast<double>(cap)) return -1;
    long x = static_cast<long>(std::ceil(raw));
    while (phi(static_cast<double>(x)) < target) ++x;
    return x;
}

} // namespace detail

inline RISequence make_ris(long k, const LacunaritySchedule& schedule, Index start) {
    if (k < 1) throw InvalidInput("a rapidly increasing sequence needs k >= 1");
    if (!(schedule.sigma > 0.0 && schedule.sigma <= 1.0))
        throw InvalidInput("lacunarity scale must lie in (0, 1]");
    if (!schedule.sizes.empty() &&
        static_cast<long>(schedule.sizes.size()) != k)
        throw InvalidInput("explicit size list must have length k");

    RISequence out;
    out.sigma = schedule.sigma;
    const double sigma = schedule.sigma;

    // Resolve sizes and widths first; everything is checked before any
    // average gets built, so infeasible schedules fail fast.
    std::vector<long> sizes, widths;
    long prev_support = 0;
    for (long j = 0; j < k; ++j) {
        double rhs;
        std::string name;
        if (j == 0) {
            rhs = sigma * 36.0 * static_cast<double>(k) * static_cast<double>(k);
            name = "phi(n_1/4) >= sigma * 36 k^2";
        } else {
            rhs = sigma * 2.0 * static_cast<double>(prev_support);
            name = "phi(n_j)^(1/2) >= sigma * 2 |supp(u_{j-1})|";
        }

        long n_j;
        if (!schedule.sizes.empty()) {
            n_j = schedule.sizes[static_cast<std::size_t>(j)];
            if (n_j < 1) throw InvalidInput("average sizes must be >= 1");
        } else {
            long minimal = -1;
            if (j == 0) {
                // phi(n/4) >= rhs  <=>  n >= 4 (2^rhs - 1)
                if (rhs <= 40.0) {
                    const double raw = 4.0 * (std::exp2(rhs) - 1.0);
                    if (raw <= static_cast<double>(schedule.max_support)) {
                        minimal = std::max<long>(1, static_cast<long>(std::ceil(raw)));
                        while (phi(static_cast<double>(minimal) / 4.0) < rhs)
                            ++minimal;
                    }
                }
            } else {
                minimal = detail::invert_phi(rhs * rhs, schedule.max_support);
            }
            if (minimal < 0)
                throw InfeasibleConstruction(
                    "lacunarity condition exceeds the truncation: " + name, name);
            // sizes keep growing even when the scaled condition is slack
            n_j = std::max(minimal, j == 0 ? 1 : 2 * sizes.back());
        }

        const double lhs = j == 0
                               ? phi(static_cast<double>(n_j) / 4.0)
                               : std::sqrt(phi(static_cast<double>(n_j)));
        const bool pass = lhs >= rhs - 1e-12;
        out.cert.push_back(CertRow{name, lhs, rhs, pass});
        if (!pass)
            throw InfeasibleConstruction(
                "lacunarity condition violated: " + name, name);

        const long width = schedule.block_width > 0
                               ? schedule.block_width
                               : detail::default_ris_width(n_j);
        sizes.push_back(n_j);
        widths.push_back(width);
        prev_support = n_j * width;
    }

    Index pos = start;
    for (long j = 0; j < k; ++j) {
        const long n_j = sizes[static_cast<std::size_t>(j)];
        const long width = widths[static_cast<std::size_t>(j)];
        if (pos + n_j * width > schedule.max_support)
            throw InfeasibleConstruction(
                "average does not fit inside the truncation",
                "support <= truncation");
        out.averages.push_back(make_l1_average(n_j, pos, width));
        out.sizes.push_back(n_j);
        pos += n_j * width;
    }
    return out;
}

// u = (phi(k)/k) (u_1 + ... + u_k) over a RIS of length k.
struct AkVector {
    VecF u;
    RISequence ris;
    double s_norm_measured = 0.0;
};

inline AkVector make_ak(long k, const LacunaritySchedule& schedule, Index start) {
    AkVector out;
    out.ris = make_ris(k, schedule, start);
    std::vector<VecF> us;
    us.reserve(out.ris.averages.size());
    for (const auto& a : out.ris.averages) us.push_back(a.u);
    out.u = scale(sum_of(us), phi(static_cast<double>(k)) / static_cast<double>(k));
    out.s_norm_measured = s_norm(out.u);
    return out;
}

// --------------------------------------------------------------------------
// Pointwise products t = uv with u an l1 average and v a norming
// functional from the dual unit ball: nonnegative, unit l1 mass.
// --------------------------------------------------------------------------
struct ProductVector {
    L1Average avg;
    FunctionalTree v = FunctionalTree::leaf(0, 1);
    VecF t;
    double t_l1 = 0.0;
};

inline ProductVector finish_product(L1Average avg) {
    ProductVector out{std::move(avg), FunctionalTree::leaf(0, 1), {}, 0.0};
    out.v = s_norming_functional(out.avg.u);
    out.t = pointwise_product(out.avg.u, out.v.realize());
    out.t_l1 = lp_norm(out.t, 1.0);
    if (!is_nonnegative(out.t) || std::fabs(out.t_l1 - 1.0) > 1e-9)
        throw InfeasibleConstruction("product mass check failed", "||uv||_1 = 1");
    return out;
}

inline ProductVector make_dm(long m, Index start, long width) {
    return finish_product(make_l1_average(m, start, width));
}

// --------------------------------------------------------------------------
// Bounded search for the transfer step: given successive nonnegative unit
// l1 vectors h_1..h_K, look for an index interval J, an l1^m average u and
// a nonnegative dual element v with ||uv||_1 = 1 and
// ||uv - (1/|J|) sum_{j in J} h_j||_1 < eps. Candidates are scored by how
// close the J-averaged profile is to flat; u is built from flat blocks on
// the heaviest coordinates of that profile. Exhausting the budget yields
// NotFound, which is a legitimate outcome (the guaranteed K(m, eps) may
// exceed the provided K).
// --------------------------------------------------------------------------
struct TransferResult {
    long j_lo = 1, j_hi = 1;  // 1-based inclusive
    ProductVector product;
    double defect = 0.0;
};

inline std::optional<TransferResult> transfer_search(const std::vector<VecF>& h,
                                                     long m, double eps,
                                                     long budget) {
    if (h.empty()) throw InvalidInput("transfer search needs at least one input");
    if (m < 1) throw InvalidInput("transfer search needs m >= 1");
    if (!(eps > 0.0)) throw InvalidInput("transfer search needs eps > 0");
    for (std::size_t j = 0; j < h.size(); ++j) {
        if (!is_nonnegative(h[j]) || std::fabs(lp_norm(h[j], 1.0) - 1.0) > 1e-9)
            throw InvalidInput("transfer inputs must be nonnegative unit l1 vectors");
        if (j > 0 && !is_successive(h[j - 1], h[j]))
            throw InvalidInput("transfer inputs must be successive");
    }

    const long K = static_cast<long>(h.size());
    struct Cand {
        double score;
        long a, b;
    };
    std::vector<Cand> cands;
    for (long a = 0; a < K; ++a) {
        for (long b = a; b < K; ++b) {
            VecF g = sum_of(std::vector<VecF>(h.begin() + a, h.begin() + b + 1));
            g = scale(g, 1.0 / static_cast<double>(b - a + 1));
            const double flat_level = 1.0 / static_cast<double>(g.nnz());
            double score = 0.0;
            for (const auto& [i, c] : g.entries())
                score += std::fabs(c - flat_level);
            cands.push_back(Cand{score, a, b});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
        if (x.score != y.score) return x.score < y.score;
        if (x.b - x.a != y.b - y.a) return x.b - x.a > y.b - y.a;
        return x.a < y.a;
    });

    long used = 0;
    for (const auto& cand : cands) {
        if (used >= budget) break;
        const long count = cand.b - cand.a + 1;
        VecF g = sum_of(std::vector<VecF>(h.begin() + cand.a, h.begin() + cand.b + 1));
        g = scale(g, 1.0 / static_cast<double>(count));
        const long support = static_cast<long>(g.nnz());
        if (support < m) continue;

        std::vector<long> widths;
        widths.push_back(std::max<long>(1, support / m));
        if (support % m != 0 && (support + m - 1) / m != widths[0])
            widths.push_back((support + m - 1) / m);

        for (long r : widths) {
            if (used++ >= budget) break;
            if (m * r > support) continue;
            // heaviest m*r coordinates of the profile, ties to lower index
            std::vector<std::pair<double, Index>> ranked;
            for (const auto& [i, c] : g.entries()) ranked.emplace_back(-c, i);
            std::sort(ranked.begin(), ranked.end());
            std::vector<Index> chosen;
            chosen.reserve(static_cast<std::size_t>(m * r));
            for (long t = 0; t < m * r; ++t) chosen.push_back(ranked[t].second);
            std::sort(chosen.begin(), chosen.end());

            std::vector<std::vector<Index>> groups(static_cast<std::size_t>(m));
            for (long t = 0; t < m * r; ++t)
                groups[static_cast<std::size_t>(t / r)].push_back(chosen[t]);

            L1Average avg;
            try {
                avg = make_l1_average_on_groups(groups);
            } catch (const InfeasibleConstruction&) {
                continue;  // blocks too short for 2-equivalence; try next
            }
            ProductVector prod = finish_product(std::move(avg));
            const double defect = lp_norm(subtract(prod.t, g), 1.0);
            if (defect < eps) {
                TransferResult res;
                res.j_lo = cand.a + 1;
                res.j_hi = cand.b + 1;
                res.product = std::move(prod);
                res.defect = defect;
                return res;
            }
        }
    }
    return std::nullopt;
}

// --------------------------------------------------------------------------
// Couples (z, z*) built from successive unit blocks far enough out, their
// norming functionals, and a transfer witness:
//   z = N^(-1/p) sum z_j,  z* = N^(-1/q) sum z*_j,
//   zz* nonnegative with ||zz*||_1 = 1,  ||uv - zz*||_1 < 1/m.
// --------------------------------------------------------------------------
struct Couple {
    std::string space_tag;
    long N = 1;  // |J|: blocks actually combined
    long m = 1;
    Index supported_after = 0;
    std::vector<VecF> blocks;       // the combined z_j (successive, unit)
    std::vector<VecF> block_duals;  // norming functionals z*_j
    VecF z, zstar;
    TransferResult witness;
    double defect = 0.0;
    double z_norm = 0.0;
    double zstar_norm_est = 0.0;
};

inline Couple make_delta(const SpaceParams& sp, long N, long m, Index start,
                         long budget, long width = 2,
                         const CalibrationTable* calib = nullptr) {
    if (N < 1) throw InvalidInput("couple construction needs N >= 1");
    if (m < 1) throw InvalidInput("couple construction needs m >= 1");
    if (width < 1) throw InvalidInput("couple construction needs width >= 1");
    if (sp.kind != SpaceKind::ConvexifiedTsirelson && sp.kind != SpaceKind::LpOracle)
        throw InvalidInput("couples live in a convexified or lp oracle space");

    const Index after = calib ? calib->lookup_P(N) : N;
    Index pos = std::max<Index>(start, after + 1);
    const Index first_pos = pos;

    // Blocks must be wide enough for the transfer target to host an
    // m-average whose parts stay 2-equivalent (part length >= m).
    const long eff_width = std::max(width, m);
    std::vector<VecF> blocks, duals;
    std::vector<VecF> products;
    for (long j = 0; j < N; ++j) {
        std::vector<VecF::Entry> e;
        for (long t = 0; t < eff_width; ++t) e.emplace_back(pos++, 1.0);
        VecF raw = VecF::from_entries(std::move(e));
        VecF z = scale(raw, 1.0 / space_norm(sp, raw));
        VecF zs = space_norming_functional(sp, z);
        if (std::fabs(dot(z, zs) - 1.0) > 1e-9)
            throw InfeasibleConstruction("norming functional pairing drifted",
                                         "z*(z) = 1");
        VecF prod = pointwise_product(z, zs);
        blocks.push_back(std::move(z));
        duals.push_back(std::move(zs));
        products.push_back(std::move(prod));
    }

    auto res = transfer_search(products, m, 1.0 / static_cast<double>(m), budget);
    if (!res)
        throw InfeasibleConstruction("transfer search exhausted its budget",
                                     "||uv - zz*||_1 < 1/m");

    Couple c;
    c.space_tag = sp.tag();
    c.m = m;
    c.supported_after = first_pos - 1;
    const long lo = res->j_lo - 1, hi = res->j_hi - 1;
    for (long j = lo; j <= hi; ++j) {
        c.blocks.push_back(blocks[static_cast<std::size_t>(j)]);
        c.block_duals.push_back(duals[static_cast<std::size_t>(j)]);
    }
    c.N = hi - lo + 1;
    const double p = sp.p, q = sp.q();
    c.z = scale(sum_of(c.blocks), std::pow(static_cast<double>(c.N), -1.0 / p));
    c.zstar = scale(sum_of(c.block_duals), std::pow(static_cast<double>(c.N), -1.0 / q));
    c.witness = std::move(*res);

    const VecF zz = pointwise_product(c.z, c.zstar);
    if (!is_nonnegative(zz))
        throw InfeasibleConstruction("couple product must be nonnegative", "zz* >= 0");
    if (std::fabs(lp_norm(zz, 1.0) - 1.0) > 1e-9)
        throw InfeasibleConstruction("couple product mass drifted", "||zz*||_1 = 1");
    c.defect = lp_norm(subtract(c.witness.product.t, zz), 1.0);
    if (!(c.defect < 1.0 / static_cast<double>(m) + 1e-12))
        throw InfeasibleConstruction("couple defect too large", "||uv - zz*||_1 < 1/m");
    if (std::fabs(dot(c.z, c.zstar) - 1.0) > 1e-9)
        throw InfeasibleConstruction("couple self-pairing drifted", "z*(z) = 1");
    c.z_norm = space_norm(sp, c.z);
    c.zstar_norm_est = estimate_dual_norm(sp, c.zstar, 16, 0x5eedULL);
    return c;
}

// --------------------------------------------------------------------------
// Gamma couples: k successive member couples with average sizes m_1..m_k
// whose transfer witnesses form a RIS at scale sigma;
//   y = k^(-1/p) sum z_i, y* = k^(-1/q) sum z*_i.
// --------------------------------------------------------------------------
struct GammaCouple {
    std::string space_tag;
    long k = 1;
    double sigma = 1.0;
    std::vector<Couple> members;
    std::vector<CertRow> ris_cert;
    VecF y, ystar;
    double yy_l1 = 0.0;
    double y_norm = 0.0;
    double ystar_norm_est = 0.0;
};

inline GammaCouple make_gamma(const SpaceParams& sp, long k,
                              const std::vector<long>& sizes,
                              const LacunaritySchedule& schedule, Index start,
                              long budget, long width = 2,
                              const CalibrationTable* calib = nullptr) {
    if (k < 1) throw InvalidInput("gamma construction needs k >= 1");
    if (static_cast<long>(sizes.size()) != k)
        throw InvalidInput("gamma construction needs one size per member");
    if (!(schedule.sigma > 0.0 && schedule.sigma <= 1.0))
        throw InvalidInput("lacunarity scale must lie in (0, 1]");

    GammaCouple g;
    g.space_tag = sp.tag();
    g.k = k;
    g.sigma = schedule.sigma;

    Index pos = std::max<Index>(start, (calib ? calib->lookup_P(k) : k) + 1);
    long prev_support = 0;
    for (long i = 0; i < k; ++i) {
        const long m_i = sizes[static_cast<std::size_t>(i)];
        Couple member = make_delta(sp, m_i, m_i, pos, budget, width, calib);
        pos = member.z.max_index() + 1;

        double rhs;
        std::string name;
        if (i == 0) {
            rhs = schedule.sigma * 36.0 * static_cast<double>(k) *
                  static_cast<double>(k);
            name = "phi(n_1/4) >= sigma * 36 k^2";
        } else {
            rhs = schedule.sigma * 2.0 * static_cast<double>(prev_support);
            name = "phi(n_j)^(1/2) >= sigma * 2 |supp(u_{j-1})|";
        }
        const double lhs =
            i == 0 ? phi(static_cast<double>(m_i) / 4.0)
                   : std::sqrt(phi(static_cast<double>(m_i)));
        const bool pass = lhs >= rhs - 1e-12;
        g.ris_cert.push_back(CertRow{name, lhs, rhs, pass});
        if (!pass)
            throw InfeasibleConstruction("lacunarity condition violated: " + name,
                                         name);
        prev_support = static_cast<long>(member.witness.product.avg.u.nnz());
        g.members.push_back(std::move(member));
    }

    const double p = sp.p, q = sp.q();
    std::vector<VecF> zs, zss;
    for (const auto& mb : g.members) {
        zs.push_back(mb.z);
        zss.push_back(mb.zstar);
    }
    g.y = scale(sum_of(zs), std::pow(static_cast<double>(k), -1.0 / p));
    g.ystar = scale(sum_of(zss), std::pow(static_cast<double>(k), -1.0 / q));

    const VecF yy = pointwise_product(g.y, g.ystar);
    if (!is_nonnegative(yy))
        throw InfeasibleConstruction("gamma product must be nonnegative", "yy* >= 0");
    g.yy_l1 = lp_norm(yy, 1.0);
    if (std::fabs(g.yy_l1 - 1.0) > 1e-9)
        throw InfeasibleConstruction("gamma product mass drifted", "||yy*||_1 = 1");
    if (std::fabs(dot(g.y, g.ystar) - 1.0) > 1e-9)
        throw InfeasibleConstruction("gamma self-pairing drifted", "y*(y) = 1");
    g.y_norm = space_norm(sp, g.y);
    g.ystar_norm_est = estimate_dual_norm(sp, g.ystar, 16, 0x5eedULL);
    return g;
}

} // namespace normlab
