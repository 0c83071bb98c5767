#pragma once

#include <memory>
#include <utility>
#include <vector>

#include <json.hpp>

#include "normlab/errors.hpp"
#include "normlab/phi.hpp"
#include "normlab/sparse_vector.hpp"

namespace normlab {

// A recursively built norming functional: a leaf is a signed unit
// functional +-e*_i; a node with children v_1 < ... < v_n (successive
// supports) realizes (v_1 + ... + v_n) / phi(n). Since phi(n) >= 1 at
// every level, the realized vector always has sup norm <= 1 per leaf
// weight, hence lies in the unit ball of the dual lattice.
class FunctionalTree {
public:
    static FunctionalTree leaf(Index index, int sign) {
        if (index < 0) throw InvalidInput("leaf index must be nonnegative");
        if (sign != 1 && sign != -1) throw InvalidInput("leaf sign must be +-1");
        FunctionalTree t;
        t.index_ = index;
        t.sign_ = sign;
        return t;
    }

    static FunctionalTree node(std::vector<FunctionalTree> children) {
        if (children.empty()) throw InvalidInput("node arity must be >= 1");
        FunctionalTree t;
        t.children_ = std::move(children);
        return t;
    }

    bool is_leaf() const { return children_.empty(); }
    Index leaf_index() const { return index_; }
    int leaf_sign() const { return sign_; }
    const std::vector<FunctionalTree>& children() const { return children_; }

    Index min_support() const {
        return is_leaf() ? index_ : children_.front().min_support();
    }

    Index max_support() const {
        return is_leaf() ? index_ : children_.back().max_support();
    }

    // Successiveness must hold at every node.
    bool validate() const {
        if (is_leaf()) return true;
        for (std::size_t i = 0; i < children_.size(); ++i) {
            if (!children_[i].validate()) return false;
            if (i > 0 &&
                children_[i - 1].max_support() >= children_[i].min_support())
                return false;
        }
        return true;
    }

    VecF realize() const {
        std::vector<VecF::Entry> out;
        accumulate(1.0, out);
        // Merge repeated indices (possible only for trees that fail
        // validate(); kept additive so realize() is total).
        std::sort(out.begin(), out.end());
        std::vector<VecF::Entry> merged;
        for (const auto& e : out) {
            if (!merged.empty() && merged.back().first == e.first)
                merged.back().second += e.second;
            else
                merged.push_back(e);
        }
        return VecF::from_entries(std::move(merged));
    }

    double eval(const VecF& x) const { return eval_weighted(1.0, x); }

    nlohmann::ordered_json to_json() const {
        if (is_leaf())
            return nlohmann::ordered_json{{"leaf", {index_, sign_}}};
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& c : children_) arr.push_back(c.to_json());
        return nlohmann::ordered_json{{"node", std::move(arr)}};
    }

    static FunctionalTree from_json(const nlohmann::json& j) {
        if (j.contains("leaf")) {
            const auto& l = j.at("leaf");
            if (!l.is_array() || l.size() != 2)
                throw ParseError("malformed leaf");
            return leaf(l[0].get<Index>(), l[1].get<int>());
        }
        if (j.contains("node")) {
            std::vector<FunctionalTree> children;
            for (const auto& c : j.at("node")) children.push_back(from_json(c));
            return node(std::move(children));
        }
        throw ParseError("functional tree node must be a leaf or a node");
    }

private:
    FunctionalTree() = default;

    void accumulate(double weight, std::vector<VecF::Entry>& out) const {
        if (is_leaf()) {
            out.emplace_back(index_, weight * sign_);
            return;
        }
        const double w = weight / phi(static_cast<double>(children_.size()));
        for (const auto& c : children_) c.accumulate(w, out);
    }

    double eval_weighted(double weight, const VecF& x) const {
        if (is_leaf()) return weight * sign_ * x.at(index_);
        const double w = weight / phi(static_cast<double>(children_.size()));
        double acc = 0;
        for (const auto& c : children_) acc += c.eval_weighted(w, x);
        return acc;
    }

    Index index_ = 0;
    int sign_ = 1;
    std::vector<FunctionalTree> children_;
};

inline double functional_eval(const FunctionalTree& v, const VecF& x) {
    return v.eval(x);
}

inline bool validate_in_B(const FunctionalTree& v) { return v.validate(); }

} // namespace normlab
