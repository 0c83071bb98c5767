// Command-line front end: norm evaluation, norming functionals,
// construction pipelines with certificates, probe reports, calibration.
//
// Exit codes: 0 ok, 1 failed verification, 2 parse failure, 3 invalid
// input, 4 infeasible construction, 5 missing artifact.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "normlab/bundle_io.hpp"
#include "normlab/calibration.hpp"
#include "normlab/constructions.hpp"
#include "normlab/probes.hpp"
#include "normlab/renorm.hpp"
#include "normlab/report.hpp"
#include "normlab/spaces.hpp"
#include "normlab/vector_io.hpp"

using namespace normlab;

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<long> split_longs(const std::string& s) {
    std::vector<long> out;
    for (const auto& item : split_list(s)) out.push_back(std::stol(item));
    return out;
}

std::vector<double> split_doubles(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) out.push_back(std::stod(item));
    return out;
}

struct CommonOpts {
    std::string space = "t2";
    long trunc = 1 << 20;
    double scale = 1e-3;
    std::uint64_t seed = 1;
    long budget = 256;
    double tol = 1e-9;
    std::string out;
    std::string format = "csv";
    bool verify = false;
    std::string calib_path;
};

CalibrationTable load_or_default_calibration(const CommonOpts& opts,
                                             const SpaceParams& sp) {
    if (!opts.calib_path.empty() && std::filesystem::exists(opts.calib_path))
        return CalibrationTable::from_json(load_json_file(opts.calib_path));
    CalibrationTable t;
    t.space = sp.tag();
    t.p = sp.p;
    t.sigma = opts.scale;
    t.seed = opts.seed;
    return t;
}

void emit_report(const Report& rep, const CommonOpts& opts,
                 const std::string& plot_script = "") {
    std::string payload = opts.format == "json" ? rep.to_json().dump(2) + "\n"
                                                : rep.to_csv();
    if (opts.out.empty()) {
        std::fputs(payload.c_str(), stdout);
    } else {
        write_text_file(opts.out, payload);
        std::printf("wrote %s\n", opts.out.c_str());
    }
    if (!plot_script.empty() && !opts.out.empty()) {
        const std::string plot_path = opts.out + ".gp";
        write_text_file(plot_path, plot_script);
        std::printf("wrote %s\n", plot_path.c_str());
    }
}

void print_rows(const std::vector<CertRow>& rows) {
    for (const auto& r : rows)
        std::printf("%-48s lhs=%s rhs=%s %s\n", r.name.c_str(),
                    fmt_sig12(r.lhs).c_str(), fmt_sig12(r.rhs).c_str(),
                    r.pass ? "pass" : "FAIL");
}

int cmd_norm(const CommonOpts& opts, const std::string& in_path) {
    const nlohmann::json j = load_json_file(in_path);
    const SpaceParams sp = SpaceParams::parse(opts.space);
    if (json_mode(j) == "exact") {
        if (sp.kind != SpaceKind::Tsirelson)
            throw InvalidInput("exact mode is supported for the t space only");
        const VecQ x = vector_from_json_exact(j);
        std::printf("%s\n", t_norm(x).str().c_str());
        return 0;
    }
    const VecF x = vector_from_json_float(j);
    std::printf("%s\n", fmt_sig12(space_norm(sp, x)).c_str());
    return 0;
}

int cmd_functional(const CommonOpts& opts, const std::string& in_path,
                   bool realize) {
    const nlohmann::json j = load_json_file(in_path);
    const SpaceParams sp = SpaceParams::parse(opts.space);
    if (json_mode(j) == "exact") {
        if (sp.kind != SpaceKind::Tsirelson)
            throw InvalidInput("exact mode is supported for the t space only");
        const VecQ x = vector_from_json_exact(j);
        if (x.is_zero()) throw InvalidInput("zero vector has no norming functional");
        const VecQ f = t_norming_functional(x);
        const nlohmann::ordered_json out = vector_to_json(f);
        if (opts.out.empty()) std::printf("%s\n", out.dump(2).c_str());
        else save_json_file(opts.out, out);
        std::printf("pairing %s\n", dot(x, f).str().c_str());
        return 0;
    }
    const VecF x = vector_from_json_float(j);
    if (x.is_zero()) throw InvalidInput("zero vector has no norming functional");
    nlohmann::ordered_json out;
    double pairing;
    if (sp.kind == SpaceKind::Schlumprecht && !realize) {
        const FunctionalTree tree = s_norming_functional(x);
        if (!tree.validate())
            throw InvalidInput("extracted functional failed validation");
        out = tree.to_json();
        pairing = tree.eval(x);
    } else if (sp.kind == SpaceKind::Schlumprecht) {
        const FunctionalTree tree = s_norming_functional(x);
        out = vector_to_json(tree.realize());
        pairing = tree.eval(x);
    } else {
        const VecF f = space_norming_functional(sp, x);
        out = vector_to_json(f);
        pairing = dot(x, f);
    }
    if (opts.out.empty()) std::printf("%s\n", out.dump(2).c_str());
    else save_json_file(opts.out, out);
    std::printf("pairing %s\n", fmt_sig12(pairing).c_str());
    return 0;
}

int finish_bundle(const CommonOpts& opts, nlohmann::ordered_json bundle) {
    if (opts.out.empty()) {
        std::printf("%s\n", bundle.dump(2).c_str());
    } else {
        save_json_file(opts.out, bundle);
        std::printf("wrote %s\n", opts.out.c_str());
    }
    if (opts.verify) {
        const auto rows = verify_bundle(bundle);
        print_rows(rows);
        if (!all_pass(rows)) return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"implicitly defined norms, constructions and distortion probes"};
    app.require_subcommand(1);

    CommonOpts opts;
    app.add_option("--space", opts.space, "space tag: s | t | t2 | tp:<p> | lp:<p>");
    app.add_option("--trunc", opts.trunc, "truncation bound");
    app.add_option("--scale", opts.scale, "lacunarity scale sigma in (0,1]");
    app.add_option("--seed", opts.seed, "random seed");
    app.add_option("--budget", opts.budget, "search/sampling budget");
    app.add_option("--tol", opts.tol, "tolerance");
    app.add_option("--out", opts.out, "output path");
    app.add_option("--format", opts.format, "report format: csv | json");
    app.add_flag("--verify", opts.verify, "re-verify emitted bundles");
    app.add_option("--calib", opts.calib_path, "calibration table path");
    app.fallthrough();

    // --- norm ---------------------------------------------------------------
    auto* norm_cmd = app.add_subcommand("norm", "evaluate the norm of a vector file");
    std::string norm_in;
    norm_cmd->add_option("--in", norm_in, "vector file")->required();

    // --- functional ----------------------------------------------------------
    auto* fn_cmd = app.add_subcommand("functional", "extract a norming functional");
    std::string fn_in;
    bool fn_realize = false;
    fn_cmd->add_option("--in", fn_in, "vector file")->required();
    fn_cmd->add_flag("--realize", fn_realize, "emit the realized dual vector");

    // --- build ---------------------------------------------------------------
    auto* build_cmd = app.add_subcommand("build", "construct a certified object");
    std::string build_kind;
    long b_n = 2, b_width = 0, b_k = 1, b_m = 1, b_start = 0, b_blocks = 0;
    std::string b_sizes;
    build_cmd->add_option("kind", build_kind,
                          "average | ris | ak | dm | delta | gamma")->required();
    build_cmd->add_option("--n", b_n, "average size / block count");
    build_cmd->add_option("--r", b_width, "flat block width");
    build_cmd->add_option("--k", b_k, "sequence length");
    build_cmd->add_option("--m", b_m, "product size");
    build_cmd->add_option("--start", b_start, "first support index");
    build_cmd->add_option("--sizes", b_sizes, "comma-separated average sizes");
    build_cmd->add_option("--blocks", b_blocks, "candidate block count");

    // --- probe ---------------------------------------------------------------
    auto* probe_cmd = app.add_subcommand("probe", "run a measurement probe");
    std::string probe_kind, p_in, p_in2, p_family, p_subspace, p_a, p_b, p_eps_grid;
    std::string p_bundles, p_l_list;
    double p_delta = 0.25, p_eps = 0.0625;
    long p_k = 1, p_n = 2, p_after = 0;
    std::string p_schedule;
    probe_cmd->add_option("kind", probe_kind,
                          "distort | asymp | fg | lemma1 | lemma2 | ortho | seq")
        ->required();
    probe_cmd->add_option("--in", p_in, "first input vector file");
    probe_cmd->add_option("--in2", p_in2, "second input vector file");
    probe_cmd->add_option("--family", p_family, "comma-separated dual vector files");
    probe_cmd->add_option("--subspace", p_subspace, "comma-separated block files");
    probe_cmd->add_option("--a", p_a, "well-normed witness file");
    probe_cmd->add_option("--b", p_b, "nearly-invisible witness file");
    probe_cmd->add_option("--delta", p_delta, "norming constant delta");
    probe_cmd->add_option("--eps", p_eps, "renorm epsilon");
    probe_cmd->add_option("--eps-grid", p_eps_grid, "comma-separated eps buckets");
    probe_cmd->add_option("--bundles", p_bundles, "comma-separated bundle files");
    probe_cmd->add_option("--k", p_k, "row family level");
    probe_cmd->add_option("--l-list", p_l_list, "comma-separated column levels");
    probe_cmd->add_option("--n", p_n, "family size");
    probe_cmd->add_option("--after", p_after, "supported-after index");
    probe_cmd->add_option("--schedule", p_schedule, "comma-separated gamma lengths");

    // --- verify ----------------------------------------------------------------
    auto* verify_cmd = app.add_subcommand("verify", "re-verify a stored bundle");
    std::string v_in;
    verify_cmd->add_option("--in", v_in, "bundle file")->required();

    // --- calibrate --------------------------------------------------------------
    auto* cal_cmd = app.add_subcommand("calibrate", "measure calibration constants");
    long c_n = 2;
    long c_after = -1;
    std::string c_decay_ls;
    long c_decay_k = 0;
    cal_cmd->add_option("--n", c_n, "block tuple size");
    cal_cmd->add_option("--after", c_after, "supported-after index (default n)");
    cal_cmd->add_option("--decay-k", c_decay_k, "measure decay row for level k");
    cal_cmd->add_option("--decay-ls", c_decay_ls, "column levels for decay");

    CLI11_PARSE(app, argc, argv);

    try {
        const SpaceParams sp = SpaceParams::parse(opts.space);

        if (norm_cmd->parsed()) return cmd_norm(opts, norm_in);
        if (fn_cmd->parsed()) return cmd_functional(opts, fn_in, fn_realize);

        if (build_cmd->parsed()) {
            CalibrationTable calib = load_or_default_calibration(opts, sp);
            LacunaritySchedule sched;
            sched.sigma = opts.scale;
            sched.max_support = opts.trunc;
            if (!b_sizes.empty()) sched.sizes = split_longs(b_sizes);
            if (b_width > 0) sched.block_width = b_width;

            if (build_kind == "average") {
                const L1Average a =
                    make_l1_average(b_n, b_start, b_width > 0 ? b_width : 4 * b_n);
                return finish_bundle(
                    opts, make_bundle("average", average_to_json(a), opts.seed,
                                      opts.scale));
            }
            if (build_kind == "ris") {
                const RISequence r = make_ris(b_k, sched, b_start);
                return finish_bundle(
                    opts, make_bundle("ris", ris_to_json(r), opts.seed, opts.scale));
            }
            if (build_kind == "ak") {
                const AkVector a = make_ak(b_k, sched, b_start);
                nlohmann::ordered_json payload{{"u", vector_to_json(a.u)},
                                               {"s_norm", a.s_norm_measured},
                                               {"ris", ris_to_json(a.ris)}};
                return finish_bundle(opts, make_bundle("ak", std::move(payload),
                                                       opts.seed, opts.scale));
            }
            if (build_kind == "dm") {
                const ProductVector d =
                    make_dm(b_m, b_start, b_width > 0 ? b_width : 4 * b_m);
                return finish_bundle(
                    opts, make_bundle("dm", product_to_json(d), opts.seed,
                                      opts.scale));
            }
            if (build_kind == "delta") {
                const long blocks = b_blocks > 0 ? b_blocks : b_n;
                const Couple c = make_delta(sp, blocks, b_m, b_start, opts.budget,
                                            b_width > 0 ? b_width : 2, &calib);
                return finish_bundle(
                    opts, make_bundle("delta", couple_to_json(c), opts.seed,
                                      opts.scale));
            }
            if (build_kind == "gamma") {
                std::vector<long> sizes = sched.sizes;
                if (sizes.empty())
                    for (long i = 0; i < b_k; ++i) sizes.push_back(2L << i);
                LacunaritySchedule gsched = sched;
                gsched.sizes.clear();
                const GammaCouple g =
                    make_gamma(sp, b_k, sizes, gsched, b_start, opts.budget,
                               b_width > 0 ? b_width : 2, &calib);
                return finish_bundle(
                    opts, make_bundle("gamma", gamma_to_json(g), opts.seed,
                                      opts.scale));
            }
            throw InvalidInput("unknown build kind: " + build_kind);
        }

        if (probe_cmd->parsed()) {
            if (probe_kind == "ortho") {
                if (p_in.empty() || p_in2.empty())
                    throw InvalidInput("ortho probe needs --in and --in2");
                const VecF t = vector_from_json_float(load_json_file(p_in));
                const VecF t2 = vector_from_json_float(load_json_file(p_in2));
                const OrthogonalityResult r = orthogonality_probe(t, t2);
                Report rep;
                rep.columns = {"sqrt_pairing", "l1_distance", "bound_ok"};
                rep.add_row({fmt_g17(r.sqrt_pairing), fmt_g17(r.l1_distance),
                             r.bound_ok ? "1" : "0"});
                emit_report(rep, opts);
                return 0;
            }
            if (probe_kind == "fg") {
                const FGEstimate est =
                    estimate_FG(sp, p_n, p_after, opts.budget, opts.seed);
                Report rep;
                rep.columns = {"n", "after", "F_lower", "G_lower"};
                rep.add_row({std::to_string(est.n), std::to_string(est.after),
                             fmt_g17(est.F_lower), fmt_g17(est.G_lower)});
                emit_report(rep, opts);
                return 0;
            }
            if (probe_kind == "lemma1") {
                if (p_l_list.empty()) throw InvalidInput("lemma1 probe needs --l-list");
                LacunaritySchedule sched;
                sched.sigma = opts.scale;
                sched.max_support = opts.trunc;
                const AkVector row = make_ak(p_k, sched, 0);
                std::vector<FunctionalTree> row_children;
                for (const auto& avg : row.ris.averages)
                    row_children.push_back(s_norming_functional(avg.u));
                const FunctionalTree row_dual =
                    FunctionalTree::node(std::move(row_children));
                const FamilyMember row_member{row.u, row_dual.realize()};

                Report rep;
                rep.columns = {"k", "l", "action", "matched_k"};
                for (long l : split_longs(p_l_list)) {
                    const AkVector col = make_ak(l, sched, 0);
                    const ActionMatrix m = cross_action(
                        {row_member}, {FamilyMember{col.u, {}}}, "A*_k", "A_l");
                    rep.add_row({std::to_string(p_k), std::to_string(l),
                                 fmt_g17(m.entries[0][0]),
                                 fmt_g17(dot(row_member.dual, row.u))});
                }
                std::string plot;
                if (!opts.out.empty())
                    plot = plot_script_for(opts.out, "l", 2, {{"action", 3}},
                                           "cross action decay");
                emit_report(rep, opts, plot);
                return 0;
            }
            if (probe_kind == "lemma2") {
                if (p_bundles.empty()) throw InvalidInput("lemma2 probe needs --bundles");
                std::vector<std::pair<VecF, VecF>> couples;
                for (const auto& path : split_list(p_bundles)) {
                    const nlohmann::json b = load_json_file(path);
                    const std::string kind = b.at("kind").get<std::string>();
                    if (kind == "gamma") {
                        const GammaCouple g = gamma_from_json(b.at("payload"));
                        couples.emplace_back(g.y, g.ystar);
                    } else if (kind == "delta") {
                        const Couple c = couple_from_json(b.at("payload"));
                        couples.emplace_back(c.z, c.zstar);
                    } else {
                        throw InvalidInput("lemma2 probe needs delta or gamma bundles");
                    }
                }
                std::vector<double> grid = p_eps_grid.empty()
                                               ? std::vector<double>{0.03, 0.1, 0.3}
                                               : split_doubles(p_eps_grid);
                const Lemma2Slice slice = lemma2_probe(couples, sp, grid, opts.seed);
                Report rep;
                rep.columns = {"eps", "max_Ey", "max_Eystar", "samples"};
                for (std::size_t e = 0; e < slice.eps_grid.size(); ++e)
                    rep.add_row({fmt_g17(slice.eps_grid[e]), fmt_g17(slice.max_Ey[e]),
                                 fmt_g17(slice.max_Eystar[e]),
                                 std::to_string(slice.samples[e])});
                std::string plot;
                if (!opts.out.empty())
                    plot = plot_script_for(opts.out, "eps", 1,
                                           {{"max_Ey", 2}, {"max_Eystar", 3}},
                                           "empirical alpha");
                emit_report(rep, opts, plot);
                return 0;
            }
            if (probe_kind == "distort") {
                RenormSpec rspec;
                rspec.base = sp;
                rspec.form = RenormSpec::Form::Epsilon;
                rspec.eps = p_eps;
                for (const auto& path : split_list(p_family))
                    rspec.family.push_back(
                        vector_from_json_float(load_json_file(path)));
                if (rspec.family.empty())
                    throw InvalidInput("distort probe needs --family");
                if (!p_a.empty() && !p_b.empty()) {
                    const VecF a = vector_from_json_float(load_json_file(p_a));
                    const VecF b = vector_from_json_float(load_json_file(p_b));
                    const DistortionReport r = distortion_witness(a, b, rspec, p_delta);
                    Report rep;
                    rep.columns = {"a_renorm", "b_renorm", "ratio", "a_large",
                                   "b_small", "shape_bound"};
                    rep.add_row({fmt_g17(r.a_renorm), fmt_g17(r.b_renorm),
                                 fmt_g17(r.ratio), r.a_large ? "1" : "0",
                                 r.b_small ? "1" : "0", r.shape_bound ? "1" : "0"});
                    emit_report(rep, opts);
                    return 0;
                }
                if (p_subspace.empty())
                    throw InvalidInput("distort probe needs --subspace or --a/--b");
                std::vector<VecF> blocks;
                for (const auto& path : split_list(p_subspace))
                    blocks.push_back(vector_from_json_float(load_json_file(path)));
                const BlockSubspace sub(blocks, sp);
                const DistortionSearchResult r =
                    distortion_search(rspec, sub, opts.budget, opts.seed);
                Report rep;
                rep.columns = {"dimension", "max", "min", "ratio"};
                rep.add_row({std::to_string(sub.dimension()), fmt_g17(r.max_value),
                             fmt_g17(r.min_value), fmt_g17(r.ratio_estimate)});
                emit_report(rep, opts);
                return 0;
            }
            if (probe_kind == "asymp") {
                if (p_family.empty() || p_subspace.empty())
                    throw InvalidInput("asymp probe needs --family and --subspace");
                std::vector<VecF> members, blocks;
                for (const auto& path : split_list(p_family))
                    members.push_back(vector_from_json_float(load_json_file(path)));
                for (const auto& path : split_list(p_subspace))
                    blocks.push_back(vector_from_json_float(load_json_file(path)));
                const BlockSubspace sub(blocks, sp);
                const double dist = asymptotic_distance(members, sub, sp, opts.budget);
                Report rep;
                rep.columns = {"members", "dimension", "distance"};
                rep.add_row({std::to_string(members.size()),
                             std::to_string(sub.dimension()), fmt_g17(dist)});
                emit_report(rep, opts);
                return 0;
            }
            if (probe_kind == "seq") {
                if (p_schedule.empty()) throw InvalidInput("seq probe needs --schedule");
                CalibrationTable calib = load_or_default_calibration(opts, sp);
                LacunaritySchedule sched;
                sched.sigma = opts.scale;
                sched.max_support = opts.trunc;
                const SeqSuiteResult r =
                    seq_distortion_suite(sp, split_longs(p_schedule), sched, 0,
                                         opts.budget, opts.seed, &calib);
                Report rep;
                rep.columns = {"row", "col", "value"};
                for (std::size_t k = 0; k < r.witness_norms.size(); ++k)
                    for (std::size_t j = 0; j < r.witness_norms[k].size(); ++j)
                        rep.add_row({std::to_string(k), std::to_string(j),
                                     fmt_g17(r.witness_norms[k][j])});
                emit_report(rep, opts);
                print_rows(r.checks);
                return all_pass(r.checks) ? 0 : 1;
            }
            throw InvalidInput("unknown probe kind: " + probe_kind);
        }

        if (verify_cmd->parsed()) {
            const nlohmann::json bundle = load_json_file(v_in);
            const auto rows = verify_bundle(bundle);
            print_rows(rows);
            return all_pass(rows) ? 0 : 1;
        }

        if (cal_cmd->parsed()) {
            CalibrationTable table = load_or_default_calibration(opts, sp);
            table.space = sp.tag();
            table.p = sp.p;
            table.sigma = opts.scale;
            table.seed = opts.seed;
            if (c_decay_k > 0) {
                if (c_decay_ls.empty())
                    throw InvalidInput("decay calibration needs --decay-ls");
                LacunaritySchedule sched;
                sched.sigma = opts.scale;
                sched.max_support = opts.trunc;
                const AkVector row = make_ak(c_decay_k, sched, 0);
                std::vector<FunctionalTree> children;
                for (const auto& avg : row.ris.averages)
                    children.push_back(s_norming_functional(avg.u));
                const VecF dual = FunctionalTree::node(std::move(children)).realize();
                double first = -1.0;
                for (long l : split_longs(c_decay_ls)) {
                    const AkVector col = make_ak(l, sched, 0);
                    const double action = std::fabs(dot(dual, col.u));
                    if (first < 0) first = action;
                    if (action <= 0.5 * first) {
                        table.L.emplace_back(c_decay_k, l);
                        bool found = false;
                        for (auto& [kk, e] : table.eps)
                            if (kk == c_decay_k) { e = action; found = true; }
                        if (!found) table.eps.emplace_back(c_decay_k, action);
                        break;
                    }
                }
            } else {
                const Index after = c_after >= 0 ? c_after : c_n;
                const AnEstimate est =
                    estimate_An_constants(sp, c_n, after, opts.budget, opts.seed);
                table.C = std::max(table.C, est.c_lower);
                table.set_P(c_n, after);
                table.witnesses.push_back(est.witness);
            }
            const std::string path =
                opts.out.empty()
                    ? (opts.calib_path.empty() ? "calibration.json" : opts.calib_path)
                    : opts.out;
            save_json_file(path, table.to_json());
            std::printf("wrote %s\n", path.c_str());
            return 0;
        }

        throw InvalidInput("no subcommand given");
    } catch (const ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 2;
    } catch (const InfeasibleConstruction& e) {
        std::fprintf(stderr, "infeasible: %s (violated: %s)\n", e.what(),
                     e.violated_inequality().c_str());
        return 4;
    } catch (const MissingArtifact& e) {
        std::fprintf(stderr, "missing artifact: %s\n", e.what());
        return 5;
    } catch (const InvalidInput& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
