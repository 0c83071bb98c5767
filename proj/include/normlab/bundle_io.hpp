#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "normlab/constructions.hpp"
#include "normlab/errors.hpp"
#include "normlab/vector_io.hpp"

namespace normlab {

// Construction bundles are self-contained JSON documents: every vector,
// functional and parameter needed to re-run the defining checks is
// embedded, so `verify` on a bundle reproduces the original pass/fail rows.

inline nlohmann::ordered_json cert_to_json(const EquivalenceCertificate& c) {
    return {{"d", c.d},
            {"D", c.D},
            {"p", c.p},
            {"grid", c.grid},
            {"argmin_mass", c.argmin_mass},
            {"argmax_mass", c.argmax_mass}};
}

inline EquivalenceCertificate cert_from_json(const nlohmann::json& j) {
    EquivalenceCertificate c;
    c.d = j.at("d").get<double>();
    c.D = j.at("D").get<double>();
    c.p = j.at("p").get<double>();
    c.grid = j.at("grid").get<int>();
    c.argmin_mass = j.at("argmin_mass").get<std::vector<double>>();
    c.argmax_mass = j.at("argmax_mass").get<std::vector<double>>();
    return c;
}

inline nlohmann::ordered_json average_to_json(const L1Average& a) {
    nlohmann::ordered_json parts = nlohmann::ordered_json::array();
    for (const auto& p : a.parts) parts.push_back(vector_to_json(p));
    return {{"u", vector_to_json(a.u)},
            {"n", a.n},
            {"beta", a.beta},
            {"width", a.width},
            {"parts", std::move(parts)},
            {"cert", cert_to_json(a.cert)}};
}

inline L1Average average_from_json(const nlohmann::json& j) {
    L1Average a;
    a.u = vector_from_json_float(j.at("u"));
    a.n = j.at("n").get<long>();
    a.beta = j.at("beta").get<double>();
    a.width = j.at("width").get<long>();
    for (const auto& p : j.at("parts")) a.parts.push_back(vector_from_json_float(p));
    a.cert = cert_from_json(j.at("cert"));
    return a;
}

inline nlohmann::ordered_json product_to_json(const ProductVector& p) {
    return {{"avg", average_to_json(p.avg)},
            {"v", p.v.to_json()},
            {"t", vector_to_json(p.t)},
            {"t_l1", p.t_l1}};
}

inline ProductVector product_from_json(const nlohmann::json& j) {
    ProductVector p{average_from_json(j.at("avg")),
                    FunctionalTree::from_json(j.at("v")),
                    vector_from_json_float(j.at("t")),
                    j.at("t_l1").get<double>()};
    return p;
}

inline nlohmann::ordered_json ris_to_json(const RISequence& r) {
    nlohmann::ordered_json avgs = nlohmann::ordered_json::array();
    for (const auto& a : r.averages) avgs.push_back(average_to_json(a));
    return {{"sizes", r.sizes},
            {"sigma", r.sigma},
            {"averages", std::move(avgs)},
            {"cert", cert_rows_to_json(r.cert)}};
}

inline RISequence ris_from_json(const nlohmann::json& j) {
    RISequence r;
    r.sizes = j.at("sizes").get<std::vector<long>>();
    r.sigma = j.at("sigma").get<double>();
    for (const auto& a : j.at("averages")) r.averages.push_back(average_from_json(a));
    for (const auto& row : j.at("cert"))
        r.cert.push_back(CertRow{row.at("name").get<std::string>(),
                                 row.at("lhs").get<double>(),
                                 row.at("rhs").get<double>(),
                                 row.at("pass").get<bool>()});
    return r;
}

inline nlohmann::ordered_json couple_to_json(const Couple& c) {
    nlohmann::ordered_json blocks = nlohmann::ordered_json::array();
    for (const auto& b : c.blocks) blocks.push_back(vector_to_json(b));
    nlohmann::ordered_json duals = nlohmann::ordered_json::array();
    for (const auto& d : c.block_duals) duals.push_back(vector_to_json(d));
    return {{"space", c.space_tag},
            {"N", c.N},
            {"m", c.m},
            {"supported_after", c.supported_after},
            {"blocks", std::move(blocks)},
            {"block_duals", std::move(duals)},
            {"z", vector_to_json(c.z)},
            {"zstar", vector_to_json(c.zstar)},
            {"witness", product_to_json(c.witness.product)},
            {"witness_j", {c.witness.j_lo, c.witness.j_hi}},
            {"defect", c.defect},
            {"z_norm", c.z_norm},
            {"zstar_norm_est", c.zstar_norm_est}};
}

inline Couple couple_from_json(const nlohmann::json& j) {
    Couple c;
    c.space_tag = j.at("space").get<std::string>();
    c.N = j.at("N").get<long>();
    c.m = j.at("m").get<long>();
    c.supported_after = j.at("supported_after").get<Index>();
    for (const auto& b : j.at("blocks")) c.blocks.push_back(vector_from_json_float(b));
    for (const auto& d : j.at("block_duals"))
        c.block_duals.push_back(vector_from_json_float(d));
    c.z = vector_from_json_float(j.at("z"));
    c.zstar = vector_from_json_float(j.at("zstar"));
    c.witness.product = product_from_json(j.at("witness"));
    c.witness.j_lo = j.at("witness_j")[0].get<long>();
    c.witness.j_hi = j.at("witness_j")[1].get<long>();
    c.witness.defect = j.at("defect").get<double>();
    c.defect = j.at("defect").get<double>();
    c.z_norm = j.at("z_norm").get<double>();
    c.zstar_norm_est = j.at("zstar_norm_est").get<double>();
    return c;
}

inline nlohmann::ordered_json gamma_to_json(const GammaCouple& g) {
    nlohmann::ordered_json members = nlohmann::ordered_json::array();
    for (const auto& m : g.members) members.push_back(couple_to_json(m));
    return {{"space", g.space_tag},
            {"k", g.k},
            {"sigma", g.sigma},
            {"members", std::move(members)},
            {"ris_cert", cert_rows_to_json(g.ris_cert)},
            {"y", vector_to_json(g.y)},
            {"ystar", vector_to_json(g.ystar)},
            {"yy_l1", g.yy_l1},
            {"y_norm", g.y_norm},
            {"ystar_norm_est", g.ystar_norm_est}};
}

inline GammaCouple gamma_from_json(const nlohmann::json& j) {
    GammaCouple g;
    g.space_tag = j.at("space").get<std::string>();
    g.k = j.at("k").get<long>();
    g.sigma = j.at("sigma").get<double>();
    for (const auto& m : j.at("members")) g.members.push_back(couple_from_json(m));
    for (const auto& row : j.at("ris_cert"))
        g.ris_cert.push_back(CertRow{row.at("name").get<std::string>(),
                                     row.at("lhs").get<double>(),
                                     row.at("rhs").get<double>(),
                                     row.at("pass").get<bool>()});
    g.y = vector_from_json_float(j.at("y"));
    g.ystar = vector_from_json_float(j.at("ystar"));
    g.yy_l1 = j.at("yy_l1").get<double>();
    g.y_norm = j.at("y_norm").get<double>();
    g.ystar_norm_est = j.at("ystar_norm_est").get<double>();
    return g;
}

inline nlohmann::ordered_json make_bundle(const std::string& kind,
                                          nlohmann::ordered_json payload,
                                          std::uint64_t seed, double sigma) {
    return {{"kind", kind},
            {"seed", seed},
            {"sigma", sigma},
            {"payload", std::move(payload)}};
}

// ---------------------------------------------------------------------------
// Re-verification: re-derive the defining checks of a stored construction.
// ---------------------------------------------------------------------------

inline void append_row(std::vector<CertRow>& rows, const std::string& name,
                       double lhs, double rhs, bool pass) {
    rows.push_back(CertRow{name, lhs, rhs, pass});
}

inline std::vector<CertRow> verify_average(const L1Average& a) {
    std::vector<CertRow> rows;
    const double unit = s_norm(a.u);
    append_row(rows, "||u|| = 1", unit, 1.0, std::fabs(unit - 1.0) <= 1e-6);
    for (std::size_t i = 0; i < a.parts.size(); ++i) {
        const double pn = s_norm(a.parts[i]);
        append_row(rows, "||x_i|| = 1", pn, 1.0, std::fabs(pn - 1.0) <= 1e-6);
    }
    // u reassembles from the recorded scale and parts
    const VecF again = scale(sum_of(a.parts), a.beta / static_cast<double>(a.n));
    const double drift = lp_norm(subtract(again, a.u), 1.0);
    append_row(rows, "u = (beta/n) sum x_i", drift, 0.0, drift <= 1e-9);
    const EquivalenceCertificate cert = verify_lp_equivalence(
        BlockSeqF(a.parts), a.cert.p, a.cert.grid, SpaceParams::parse("s"));
    append_row(rows, "d reproduced", cert.d, a.cert.d,
               std::fabs(cert.d - a.cert.d) <= 1e-9);
    append_row(rows, "d >= 1/2", cert.d, 0.5, cert.d >= 0.5);
    append_row(rows, "D reproduced", cert.D, a.cert.D,
               std::fabs(cert.D - a.cert.D) <= 1e-9);
    return rows;
}

inline std::vector<CertRow> verify_ris(const RISequence& r) {
    std::vector<CertRow> rows;
    long prev_support = 0;
    for (std::size_t j = 0; j < r.averages.size(); ++j) {
        const long n_j = r.sizes[j];
        double lhs, rhs;
        std::string name;
        if (j == 0) {
            const double k = static_cast<double>(r.sizes.size());
            lhs = phi(static_cast<double>(n_j) / 4.0);
            rhs = r.sigma * 36.0 * k * k;
            name = "phi(n_1/4) >= sigma * 36 k^2";
        } else {
            lhs = std::sqrt(phi(static_cast<double>(n_j)));
            rhs = r.sigma * 2.0 * static_cast<double>(prev_support);
            name = "phi(n_j)^(1/2) >= sigma * 2 |supp(u_{j-1})|";
        }
        append_row(rows, name, lhs, rhs, lhs >= rhs - 1e-12);
        prev_support = static_cast<long>(r.averages[j].u.nnz());
        auto sub = verify_average(r.averages[j]);
        rows.insert(rows.end(), sub.begin(), sub.end());
    }
    for (std::size_t j = 1; j < r.averages.size(); ++j)
        append_row(rows, "averages successive", 0.0, 0.0,
                   is_successive(r.averages[j - 1].u, r.averages[j].u));
    return rows;
}

inline std::vector<CertRow> verify_product(const ProductVector& p) {
    std::vector<CertRow> rows;
    append_row(rows, "v in norming set", 0.0, 0.0, p.v.validate());
    const VecF again = pointwise_product(p.avg.u, p.v.realize());
    const double drift = lp_norm(subtract(again, p.t), 1.0);
    append_row(rows, "t = uv", drift, 0.0, drift <= 1e-9);
    append_row(rows, "t >= 0", 0.0, 0.0, is_nonnegative(p.t));
    const double mass = lp_norm(p.t, 1.0);
    append_row(rows, "||t||_1 = 1", mass, 1.0, std::fabs(mass - 1.0) <= 1e-9);
    const double vsup = lp_norm(p.v.realize(), std::numeric_limits<double>::infinity());
    append_row(rows, "||v||_inf <= 2", vsup, 2.0, vsup <= 2.0 + 1e-12);
    auto sub = verify_average(p.avg);
    rows.insert(rows.end(), sub.begin(), sub.end());
    return rows;
}

inline std::vector<CertRow> verify_couple(const Couple& c) {
    std::vector<CertRow> rows;
    const SpaceParams sp = SpaceParams::parse(c.space_tag);
    for (std::size_t j = 0; j < c.blocks.size(); ++j) {
        const double bn = space_norm(sp, c.blocks[j]);
        append_row(rows, "||z_j|| = 1", bn, 1.0, std::fabs(bn - 1.0) <= 1e-6);
        const double pairing = dot(c.blocks[j], c.block_duals[j]);
        append_row(rows, "z*_j(z_j) = 1", pairing, 1.0,
                   std::fabs(pairing - 1.0) <= 1e-9);
        if (j > 0)
            append_row(rows, "blocks successive", 0.0, 0.0,
                       is_successive(c.blocks[j - 1], c.blocks[j]));
    }
    append_row(rows, "supported after", static_cast<double>(c.supported_after), 0.0,
               c.blocks.empty() ? false
                                : c.blocks.front().min_index() > c.supported_after);
    const double p = sp.p, q = sp.q();
    const VecF z_again =
        scale(sum_of(c.blocks), std::pow(static_cast<double>(c.N), -1.0 / p));
    append_row(rows, "z = N^(-1/p) sum z_j", lp_norm(subtract(z_again, c.z), 1.0), 0.0,
               lp_norm(subtract(z_again, c.z), 1.0) <= 1e-9);
    const VecF zs_again =
        scale(sum_of(c.block_duals), std::pow(static_cast<double>(c.N), -1.0 / q));
    append_row(rows, "z* = N^(-1/q) sum z*_j",
               lp_norm(subtract(zs_again, c.zstar), 1.0), 0.0,
               lp_norm(subtract(zs_again, c.zstar), 1.0) <= 1e-9);
    const VecF zz = pointwise_product(c.z, c.zstar);
    append_row(rows, "zz* >= 0", 0.0, 0.0, is_nonnegative(zz));
    const double mass = lp_norm(zz, 1.0);
    append_row(rows, "||zz*||_1 = 1", mass, 1.0, std::fabs(mass - 1.0) <= 1e-9);
    const double defect = lp_norm(subtract(c.witness.product.t, zz), 1.0);
    append_row(rows, "||uv - zz*||_1 < 1/m", defect, 1.0 / static_cast<double>(c.m),
               defect < 1.0 / static_cast<double>(c.m) + 1e-12);
    const double self = dot(c.z, c.zstar);
    append_row(rows, "z*(z) = 1", self, 1.0, std::fabs(self - 1.0) <= 1e-9);
    auto sub = verify_product(c.witness.product);
    rows.insert(rows.end(), sub.begin(), sub.end());
    return rows;
}

inline std::vector<CertRow> verify_gamma(const GammaCouple& g) {
    std::vector<CertRow> rows;
    long prev_support = 0;
    for (std::size_t i = 0; i < g.members.size(); ++i) {
        const long m_i = g.members[i].m;
        double lhs, rhs;
        std::string name;
        if (i == 0) {
            const double k = static_cast<double>(g.k);
            lhs = phi(static_cast<double>(m_i) / 4.0);
            rhs = g.sigma * 36.0 * k * k;
            name = "phi(n_1/4) >= sigma * 36 k^2";
        } else {
            lhs = std::sqrt(phi(static_cast<double>(m_i)));
            rhs = g.sigma * 2.0 * static_cast<double>(prev_support);
            name = "phi(n_j)^(1/2) >= sigma * 2 |supp(u_{j-1})|";
        }
        append_row(rows, name, lhs, rhs, lhs >= rhs - 1e-12);
        prev_support = static_cast<long>(g.members[i].witness.product.avg.u.nnz());
        auto sub = verify_couple(g.members[i]);
        rows.insert(rows.end(), sub.begin(), sub.end());
    }
    const SpaceParams sp = SpaceParams::parse(g.space_tag);
    const double p = sp.p, q = sp.q();
    std::vector<VecF> zs, zss;
    for (const auto& m : g.members) {
        zs.push_back(m.z);
        zss.push_back(m.zstar);
    }
    const VecF y_again = scale(sum_of(zs), std::pow(static_cast<double>(g.k), -1.0 / p));
    append_row(rows, "y = k^(-1/p) sum z_i", lp_norm(subtract(y_again, g.y), 1.0), 0.0,
               lp_norm(subtract(y_again, g.y), 1.0) <= 1e-9);
    const VecF ys_again =
        scale(sum_of(zss), std::pow(static_cast<double>(g.k), -1.0 / q));
    append_row(rows, "y* = k^(-1/q) sum z*_i",
               lp_norm(subtract(ys_again, g.ystar), 1.0), 0.0,
               lp_norm(subtract(ys_again, g.ystar), 1.0) <= 1e-9);
    const VecF yy = pointwise_product(g.y, g.ystar);
    append_row(rows, "yy* >= 0", 0.0, 0.0, is_nonnegative(yy));
    const double mass = lp_norm(yy, 1.0);
    append_row(rows, "||yy*||_1 = 1", mass, 1.0, std::fabs(mass - 1.0) <= 1e-9);
    const double self = dot(g.y, g.ystar);
    append_row(rows, "y*(y) = 1", self, 1.0, std::fabs(self - 1.0) <= 1e-9);
    return rows;
}

inline std::vector<CertRow> verify_bundle(const nlohmann::json& bundle) {
    const std::string kind = bundle.at("kind").get<std::string>();
    const auto& payload = bundle.at("payload");
    if (kind == "average") return verify_average(average_from_json(payload));
    if (kind == "ris") return verify_ris(ris_from_json(payload));
    if (kind == "ak") {
        std::vector<CertRow> rows;
        RISequence r = ris_from_json(payload.at("ris"));
        const VecF u = vector_from_json_float(payload.at("u"));
        const double measured = payload.at("s_norm").get<double>();
        const double again = s_norm(u);
        append_row(rows, "s_norm reproduced", again, measured,
                   std::fabs(again - measured) <= 1e-9);
        auto sub = verify_ris(r);
        rows.insert(rows.end(), sub.begin(), sub.end());
        return rows;
    }
    if (kind == "dm") return verify_product(product_from_json(payload));
    if (kind == "delta") return verify_couple(couple_from_json(payload));
    if (kind == "gamma") return verify_gamma(gamma_from_json(payload));
    throw ParseError("unknown bundle kind: " + kind);
}

inline bool all_pass(const std::vector<CertRow>& rows) {
    for (const auto& r : rows)
        if (!r.pass) return false;
    return true;
}

} // namespace normlab
