#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "normlab/errors.hpp"
#include "normlab/rational.hpp"

namespace normlab {

using Index = std::int64_t;

// A subset E of the naturals: either a contiguous interval [lo, hi]
// (inclusive) or an explicit finite sorted set.
class Segment {
public:
    static Segment interval(Index lo, Index hi) {
        if (lo < 0 || hi < lo)
            throw InvalidInput("Segment::interval requires 0 <= lo <= hi");
        Segment s;
        s.is_interval_ = true;
        s.lo_ = lo;
        s.hi_ = hi;
        return s;
    }

    static Segment of_set(std::vector<Index> indices) {
        std::sort(indices.begin(), indices.end());
        indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
        if (!indices.empty() && indices.front() < 0)
            throw InvalidInput("Segment indices must be nonnegative");
        Segment s;
        s.is_interval_ = false;
        s.set_ = std::move(indices);
        return s;
    }

    static Segment empty_set() { return of_set({}); }

    bool is_interval() const { return is_interval_; }
    bool empty() const { return is_interval_ ? false : set_.empty(); }
    Index lo() const { return lo_; }
    Index hi() const { return hi_; }
    const std::vector<Index>& indices() const { return set_; }

    bool contains(Index i) const {
        if (is_interval_) return lo_ <= i && i <= hi_;
        return std::binary_search(set_.begin(), set_.end(), i);
    }

    std::size_t size() const {
        return is_interval_ ? static_cast<std::size_t>(hi_ - lo_ + 1) : set_.size();
    }

    bool operator==(const Segment& o) const {
        if (is_interval_ != o.is_interval_) return false;
        if (is_interval_) return lo_ == o.lo_ && hi_ == o.hi_;
        return set_ == o.set_;
    }

private:
    Segment() = default;
    bool is_interval_ = false;
    Index lo_ = 0, hi_ = 0;
    std::vector<Index> set_;
};

// Finitely supported coefficient sequence over the naturals. Entries are
// (index, coefficient) pairs with strictly increasing indices and no stored
// zeros; the empty entry list is the zero vector. Values are immutable
// after construction, so sharing across threads is safe.
template <class T>
class SparseVector {
public:
    using Scalar = T;
    using Entry = std::pair<Index, T>;

    SparseVector() = default;

    static SparseVector from_entries(std::vector<Entry> entries) {
        std::sort(entries.begin(), entries.end(),
                  [](const Entry& a, const Entry& b) { return a.first < b.first; });
        std::vector<Entry> kept;
        kept.reserve(entries.size());
        for (auto& e : entries) {
            if (e.first < 0)
                throw InvalidInput("vector index must be nonnegative");
            if (!kept.empty() && kept.back().first == e.first)
                throw InvalidInput("duplicate vector index");
            if (e.second != T(0)) kept.push_back(std::move(e));
        }
        SparseVector v;
        v.entries_ = std::move(kept);
        return v;
    }

    static SparseVector basis(Index i, T coeff = T(1)) {
        return from_entries({{i, coeff}});
    }

    const std::vector<Entry>& entries() const { return entries_; }
    bool is_zero() const { return entries_.empty(); }
    std::size_t nnz() const { return entries_.size(); }

    Index min_index() const {
        if (is_zero()) throw InvalidInput("zero vector has no support extremum");
        return entries_.front().first;
    }

    Index max_index() const {
        if (is_zero()) throw InvalidInput("zero vector has no support extremum");
        return entries_.back().first;
    }

    T at(Index i) const {
        auto it = std::lower_bound(
            entries_.begin(), entries_.end(), i,
            [](const Entry& e, Index k) { return e.first < k; });
        if (it != entries_.end() && it->first == i) return it->second;
        return T(0);
    }

    bool operator==(const SparseVector& o) const { return entries_ == o.entries_; }

private:
    std::vector<Entry> entries_;
};

using VecF = SparseVector<double>;
using VecQ = SparseVector<Rational>;

template <class T>
Segment support(const SparseVector<T>& x) {
    std::vector<Index> idx;
    idx.reserve(x.nnz());
    for (const auto& [i, c] : x.entries()) idx.push_back(i);
    return Segment::of_set(std::move(idx));
}

// max supp(x) < min supp(y); undefined (error) on zero inputs.
template <class T>
bool is_successive(const SparseVector<T>& x, const SparseVector<T>& y) {
    if (x.is_zero() || y.is_zero())
        throw InvalidInput("is_successive is undefined for the zero vector");
    return x.max_index() < y.min_index();
}

// x is supported after k: k < min supp(x).
template <class T>
bool supported_after(const SparseVector<T>& x, Index k) {
    if (x.is_zero()) throw InvalidInput("supported_after is undefined for the zero vector");
    return k < x.min_index();
}

template <class T>
SparseVector<T> project(const Segment& E, const SparseVector<T>& x) {
    std::vector<typename SparseVector<T>::Entry> kept;
    for (const auto& e : x.entries())
        if (E.contains(e.first)) kept.push_back(e);
    return SparseVector<T>::from_entries(std::move(kept));
}

template <class T>
SparseVector<T> project_complement(const Segment& E, const SparseVector<T>& x) {
    std::vector<typename SparseVector<T>::Entry> kept;
    for (const auto& e : x.entries())
        if (!E.contains(e.first)) kept.push_back(e);
    return SparseVector<T>::from_entries(std::move(kept));
}

template <class T>
SparseVector<T> pointwise_product(const SparseVector<T>& u, const SparseVector<T>& v) {
    std::vector<typename SparseVector<T>::Entry> out;
    auto iu = u.entries().begin();
    auto iv = v.entries().begin();
    while (iu != u.entries().end() && iv != v.entries().end()) {
        if (iu->first < iv->first) {
            ++iu;
        } else if (iv->first < iu->first) {
            ++iv;
        } else {
            out.emplace_back(iu->first, iu->second * iv->second);
            ++iu;
            ++iv;
        }
    }
    return SparseVector<T>::from_entries(std::move(out));
}

template <class T>
T dot(const SparseVector<T>& u, const SparseVector<T>& v) {
    T acc(0);
    auto iu = u.entries().begin();
    auto iv = v.entries().begin();
    while (iu != u.entries().end() && iv != v.entries().end()) {
        if (iu->first < iv->first) ++iu;
        else if (iv->first < iu->first) ++iv;
        else { acc += iu->second * iv->second; ++iu; ++iv; }
    }
    return acc;
}

template <class T>
SparseVector<T> add(const SparseVector<T>& u, const SparseVector<T>& v) {
    std::vector<typename SparseVector<T>::Entry> out;
    auto iu = u.entries().begin();
    auto iv = v.entries().begin();
    while (iu != u.entries().end() || iv != v.entries().end()) {
        if (iv == v.entries().end() || (iu != u.entries().end() && iu->first < iv->first)) {
            out.push_back(*iu++);
        } else if (iu == u.entries().end() || iv->first < iu->first) {
            out.push_back(*iv++);
        } else {
            T s = iu->second + iv->second;
            if (s != T(0)) out.emplace_back(iu->first, s);
            ++iu;
            ++iv;
        }
    }
    return SparseVector<T>::from_entries(std::move(out));
}

template <class T>
SparseVector<T> scale(const SparseVector<T>& x, T factor) {
    std::vector<typename SparseVector<T>::Entry> out;
    out.reserve(x.nnz());
    for (const auto& [i, c] : x.entries()) out.emplace_back(i, c * factor);
    return SparseVector<T>::from_entries(std::move(out));
}

template <class T>
SparseVector<T> subtract(const SparseVector<T>& u, const SparseVector<T>& v) {
    return add(u, scale(v, T(-1)));
}

template <class T>
SparseVector<T> sum_of(const std::vector<SparseVector<T>>& xs) {
    SparseVector<T> acc;
    for (const auto& x : xs) acc = add(acc, x);
    return acc;
}

template <class T>
SparseVector<T> abs_coeffs(const SparseVector<T>& x) {
    std::vector<typename SparseVector<T>::Entry> out;
    out.reserve(x.nnz());
    for (const auto& [i, c] : x.entries()) out.emplace_back(i, abs_value(c));
    return SparseVector<T>::from_entries(std::move(out));
}

template <class T>
bool is_nonnegative(const SparseVector<T>& x) {
    for (const auto& [i, c] : x.entries())
        if (c < T(0)) return false;
    return true;
}

// Standard lp norm of the coefficient sequence; p is in [1, inf], with
// inf encoded as std::numeric_limits<double>::infinity().
template <class T>
double lp_norm(const SparseVector<T>& x, double p) {
    if (!(p >= 1.0)) throw InvalidInput("lp_norm requires p >= 1");
    if (std::isinf(p)) {
        double m = 0;
        for (const auto& [i, c] : x.entries())
            m = std::max(m, std::fabs(to_double(c)));
        return m;
    }
    if (p == 1.0) {
        double s = 0;
        for (const auto& [i, c] : x.entries()) s += std::fabs(to_double(c));
        return s;
    }
    double s = 0;
    for (const auto& [i, c] : x.entries())
        s += std::pow(std::fabs(to_double(c)), p);
    return std::pow(s, 1.0 / p);
}

// Exact l1 / linf for rational vectors (used by the Tsirelson exact mode).
inline Rational l1_norm_exact(const VecQ& x) {
    Rational s(0);
    for (const auto& [i, c] : x.entries()) s += abs_value(c);
    return s;
}

inline Rational linf_norm_exact(const VecQ& x) {
    Rational m(0);
    for (const auto& [i, c] : x.entries()) m = std::max(m, abs_value(c));
    return m;
}

template <class T>
SparseVector<T> min_pointwise(const SparseVector<T>& f, const SparseVector<T>& g) {
    if (!is_nonnegative(f) || !is_nonnegative(g))
        throw InvalidInput("min_pointwise requires nonnegative inputs");
    std::vector<typename SparseVector<T>::Entry> out;
    auto iu = f.entries().begin();
    auto iv = g.entries().begin();
    while (iu != f.entries().end() && iv != g.entries().end()) {
        if (iu->first < iv->first) ++iu;       // other side is 0, min is 0
        else if (iv->first < iu->first) ++iv;
        else {
            out.emplace_back(iu->first, std::min(iu->second, iv->second));
            ++iu;
            ++iv;
        }
    }
    return SparseVector<T>::from_entries(std::move(out));
}

inline VecF sqrt_pointwise(const VecF& f) {
    if (!is_nonnegative(f))
        throw InvalidInput("sqrt_pointwise requires a nonnegative input");
    std::vector<VecF::Entry> out;
    out.reserve(f.nnz());
    for (const auto& [i, c] : f.entries()) out.emplace_back(i, std::sqrt(c));
    return VecF::from_entries(std::move(out));
}

// |x_i|^p coordinatewise, float result.
template <class T>
VecF pow_abs(const SparseVector<T>& x, double p) {
    std::vector<VecF::Entry> out;
    out.reserve(x.nnz());
    for (const auto& [i, c] : x.entries())
        out.emplace_back(i, std::pow(std::fabs(to_double(c)), p));
    return VecF::from_entries(std::move(out));
}

template <class T>
VecF to_float_vector(const SparseVector<T>& x) {
    std::vector<VecF::Entry> out;
    out.reserve(x.nnz());
    for (const auto& [i, c] : x.entries()) out.emplace_back(i, to_double(c));
    return VecF::from_entries(std::move(out));
}

// A list of pairwise successive nonzero blocks.
template <class T>
class BlockSequence {
public:
    BlockSequence() = default;

    explicit BlockSequence(std::vector<SparseVector<T>> blocks)
        : blocks_(std::move(blocks)) {
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            if (blocks_[i].is_zero())
                throw InvalidInput("block sequence may not contain a zero block");
            if (i > 0 && !is_successive(blocks_[i - 1], blocks_[i]))
                throw InvalidInput("blocks must be successive");
        }
    }

    const std::vector<SparseVector<T>>& blocks() const { return blocks_; }
    std::size_t size() const { return blocks_.size(); }
    const SparseVector<T>& operator[](std::size_t i) const { return blocks_[i]; }

private:
    std::vector<SparseVector<T>> blocks_;
};

using BlockSeqF = BlockSequence<double>;
using BlockSeqQ = BlockSequence<Rational>;

} // namespace normlab
