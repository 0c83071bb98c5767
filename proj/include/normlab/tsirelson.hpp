#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "normlab/errors.hpp"
#include "normlab/sparse_vector.hpp"

namespace normlab {

// An admissible family: intervals E_1 < ... < E_k with k <= min E_1 in
// 1-based basis indexing (storage indices are 0-based, so the constraint
// reads k <= lo(E_1) + 1).
struct AdmissibleFamily {
    long k = 0;
    std::vector<std::pair<Index, Index>> intervals;  // inclusive, absolute

    bool valid() const {
        if (k < 1 || intervals.size() != static_cast<std::size_t>(k)) return false;
        if (k > intervals.front().first + 1) return false;
        for (std::size_t i = 0; i < intervals.size(); ++i) {
            if (intervals[i].second < intervals[i].first) return false;
            if (i > 0 && intervals[i - 1].second >= intervals[i].first) return false;
        }
        return true;
    }
};

// Fixed point of ||x|| = max(||x||_inf, 1/2 sup sum_j ||E_j x||) over
// admissible families, computed by interval DP over the support hull.
// Works in exact rationals or doubles; sealed after construction.
template <class Scalar>
class TNormEvaluator {
public:
    static constexpr long kHullCap = 128;

    explicit TNormEvaluator(const SparseVector<Scalar>& x) {
        if (x.is_zero()) return;
        lo_ = x.min_index();
        H_ = x.max_index() - lo_ + 1;
        if (H_ > kHullCap)
            throw InvalidInput("support hull too large for exact evaluation");
        const int H = static_cast<int>(H_);
        c_abs_.assign(H, Scalar(0));
        sign_.assign(H, 1);
        has_.assign(H, 0);
        for (const auto& [i, c] : x.entries()) {
            const int t = static_cast<int>(i - lo_);
            c_abs_[t] = c < Scalar(0) ? Scalar(-c) : c;
            sign_[t] = c < Scalar(0) ? -1 : 1;
            has_[t] = 1;
        }
        build();
    }

    bool is_zero() const { return H_ == 0; }
    Scalar value() const { return H_ == 0 ? Scalar(0) : V_[idx2(0, H_ - 1)]; }

    SparseVector<Scalar> norming_functional() const {
        if (H_ == 0) throw InvalidInput("zero vector has no norming functional");
        std::vector<typename SparseVector<Scalar>::Entry> entries;
        collect(0, static_cast<int>(H_) - 1, Scalar(1), entries);
        return SparseVector<Scalar>::from_entries(std::move(entries));
    }

    // The winning family at the top level, if the partition branch won.
    std::optional<AdmissibleFamily> top_family() const {
        if (H_ == 0) return std::nullopt;
        const BranchRec& br = branch_[idx2(0, H_ - 1)];
        if (br.sup) return std::nullopt;
        AdmissibleFamily fam;
        fam.k = br.k;
        for (const auto& [pa, pb] : family_parts(br.s, br.k, static_cast<int>(H_) - 1))
            fam.intervals.emplace_back(lo_ + pa, lo_ + pb);
        return fam;
    }

private:
    struct BranchRec {
        bool sup = true;
        int pos = 0;  // sup branch argmax offset
        int s = 0;    // family start offset
        int k = 0;    // family size
    };

    Index lo_ = 0;
    long H_ = 0;
    std::vector<Scalar> c_abs_;
    std::vector<int> sign_;
    std::vector<char> has_;
    std::vector<Scalar> V_;
    std::vector<BranchRec> branch_;
    std::vector<Scalar> tiling_;       // [s][k][b]
    std::vector<int> arg_split_;       // [s][k][b]
    std::vector<Scalar> best_family_;  // [s][b]: max over admissible k of tiling/..
    std::vector<int> best_family_k_;   // [s][b]

    std::size_t idx2(long a, long b) const {
        return static_cast<std::size_t>(a) * H_ + b;
    }
    std::size_t idx3(long s, long k, long b) const {
        return (static_cast<std::size_t>(s) * (H_ + 1) + k) * H_ + b;
    }

    long family_cap(long s) const {
        // k <= 1-based index of the family start.
        const Index abs_start = lo_ + s;
        return abs_start + 1;
    }

    void build() {
        const int H = static_cast<int>(H_);
        V_.assign(static_cast<std::size_t>(H) * H, Scalar(0));
        branch_.assign(static_cast<std::size_t>(H) * H, BranchRec{});
        tiling_.assign(static_cast<std::size_t>(H) * (H + 1) * H, Scalar(-1));
        arg_split_.assign(tiling_.size(), -1);
        best_family_.assign(static_cast<std::size_t>(H) * H, Scalar(-1));
        best_family_k_.assign(best_family_.size(), 0);
        const Scalar half = Scalar(1) / Scalar(2);

        for (int len = 1; len <= H; ++len) {
            for (int a = 0; a + len <= H; ++a) {
                const int b = a + len - 1;

                // Tilings of [a, b] anchored at a (first part starts at a).
                // Useful only when a carries support.
                if (has_[a]) {
                    const long kmax = std::min<long>(len, family_cap(a));
                    for (long k = 2; k <= kmax; ++k) {
                        Scalar bt(-1);
                        int aj = -1;
                        for (int j = a + static_cast<int>(k) - 2; j <= b - 1; ++j) {
                            const Scalar& head = tiling_[idx3(a, k - 1, j)];
                            if (head < Scalar(0)) continue;
                            const Scalar cand = head + V_[idx2(j + 1, b)];
                            if (cand > bt) {
                                bt = cand;
                                aj = j;
                            }
                        }
                        tiling_[idx3(a, k, b)] = bt;
                        arg_split_[idx3(a, k, b)] = aj;
                        if (bt >= Scalar(0) &&
                            (best_family_[idx2(a, b)] < Scalar(0) ||
                             bt > best_family_[idx2(a, b)])) {
                            best_family_[idx2(a, b)] = bt;
                            best_family_k_[idx2(a, b)] = static_cast<int>(k);
                        }
                    }
                }

                // sup branch
                Scalar sup_v(0);
                int sup_pos = a;
                for (int i = a; i <= b; ++i) {
                    if (has_[i] && c_abs_[i] > sup_v) {
                        sup_v = c_abs_[i];
                        sup_pos = i;
                    }
                }

                // family branch: first interval may start at any support
                // point (skipping leading coordinates only relaxes
                // admissibility).
                Scalar best_part(-1);
                int best_s = -1, best_k = 0;
                for (int s = a; s <= b - 1; ++s) {
                    if (!has_[s]) continue;
                    const Scalar& fam = best_family_[idx2(s, b)];
                    if (fam < Scalar(0)) continue;
                    if (best_part < Scalar(0) || fam > best_part) {
                        best_part = fam;
                        best_s = s;
                        best_k = best_family_k_[idx2(s, b)];
                    }
                }

                BranchRec br{true, sup_pos, 0, 0};
                Scalar v = sup_v;
                if (best_part >= Scalar(0)) {
                    const Scalar pv = half * best_part;
                    // Partition branch preferred on ties so norming
                    // functionals keep full support.
                    if (pv >= sup_v) {
                        v = pv;
                        br = BranchRec{false, 0, best_s, best_k};
                    }
                }
                V_[idx2(a, b)] = v;
                branch_[idx2(a, b)] = br;
                if (has_[a]) tiling_[idx3(a, 1, b)] = v;
            }
        }
    }

    std::vector<std::pair<int, int>> family_parts(int s, int k, int b) const {
        std::vector<std::pair<int, int>> parts;
        int n = k, end = b;
        while (n >= 2) {
            const int j = arg_split_[idx3(s, n, end)];
            parts.emplace_back(j + 1, end);
            end = j;
            --n;
        }
        parts.emplace_back(s, end);
        std::reverse(parts.begin(), parts.end());
        return parts;
    }

    void collect(int a, int b, Scalar weight,
                 std::vector<typename SparseVector<Scalar>::Entry>& out) const {
        const BranchRec& br = branch_[idx2(a, b)];
        if (br.sup) {
            if (has_[br.pos] && c_abs_[br.pos] > Scalar(0))
                out.emplace_back(lo_ + br.pos, weight * Scalar(sign_[br.pos]));
            return;
        }
        const Scalar w = weight / Scalar(2);
        for (const auto& [pa, pb] : family_parts(br.s, br.k, b)) {
            if (V_[idx2(pa, pb)] > Scalar(0)) collect(pa, pb, w, out);
        }
    }
};

template <class Scalar>
Scalar t_norm(const SparseVector<Scalar>& x) {
    if (x.is_zero()) return Scalar(0);
    return TNormEvaluator<Scalar>(x).value();
}

template <class Scalar>
SparseVector<Scalar> t_norming_functional(const SparseVector<Scalar>& x) {
    if (x.is_zero()) throw InvalidInput("zero vector has no norming functional");
    return TNormEvaluator<Scalar>(x).norming_functional();
}

// p-convexification: coefficients |x_i|^p fed through the base norm, then
// the p-th root. Float only.
inline double tp_norm(const VecF& x, double p) {
    if (!(p > 1.0)) throw InvalidInput("convexification exponent must satisfy p > 1");
    if (x.is_zero()) return 0.0;
    return std::pow(t_norm(pow_abs(x, p)), 1.0 / p);
}

// Norming functional for the p-convexified norm via the duality map: from
// the base-norm functional w of y = |x|^p,
//   v_i = sign(x_i) w_i |x_i|^(p-1) / ||y||^((p-1)/p),
// which pairs with x to exactly the p-convexified norm.
inline VecF tp_norming_functional(const VecF& x, double p) {
    if (!(p > 1.0)) throw InvalidInput("convexification exponent must satisfy p > 1");
    if (x.is_zero()) throw InvalidInput("zero vector has no norming functional");
    const VecF y = pow_abs(x, p);
    TNormEvaluator<double> ev(y);
    const double ynorm = ev.value();
    const VecF w = ev.norming_functional();
    const double denom = std::pow(ynorm, (p - 1.0) / p);
    std::vector<VecF::Entry> out;
    for (const auto& [i, wi] : w.entries()) {
        const double xi = x.at(i);
        if (xi == 0.0) continue;
        const double mag = std::pow(std::fabs(xi), p - 1.0);
        out.emplace_back(i, (xi < 0 ? -1.0 : 1.0) * wi * mag / denom);
    }
    return VecF::from_entries(std::move(out));
}

} // namespace normlab
