#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "normlab/constructions.hpp"
#include "normlab/probes.hpp"
#include "normlab/renorm.hpp"
#include "normlab/rng.hpp"

using namespace normlab;

namespace {

VecF vf(std::initializer_list<std::pair<Index, double>> entries) {
    std::vector<VecF::Entry> e(entries.begin(), entries.end());
    return VecF::from_entries(std::move(e));
}

VecF random_nonneg_unit(Rng& rng, int max_support) {
    std::vector<VecF::Entry> e;
    const int m = 1 + static_cast<int>(rng.uniform_int(0, max_support - 1));
    Index pos = rng.uniform_int(0, 4);
    double total = 0;
    for (int i = 0; i < m; ++i) {
        const double c = rng.uniform(0.01, 1.0);
        e.emplace_back(pos, c);
        total += c;
        pos += 1 + rng.uniform_int(0, 2);
    }
    return scale(VecF::from_entries(std::move(e)), 1.0 / total);
}

} // namespace

TEST_CASE("renorm evaluation") {
    RenormSpec spec;
    spec.base = SpaceParams::parse("lp:2");
    spec.form = RenormSpec::Form::Epsilon;
    spec.family = {VecF::basis(1)};
    spec.eps = 1.0;
    CHECK(eval_renorm(spec, VecF::basis(1)) == Catch::Approx(2.0));
    CHECK(eval_renorm(spec, VecF::basis(2)) == Catch::Approx(1.0));
    spec.eps = 0.5;
    CHECK(eval_renorm(spec, VecF::basis(1)) == Catch::Approx(3.0));
    spec.family.clear();
    CHECK_THROWS_AS(eval_renorm(spec, VecF::basis(1)), InvalidInput);

    // epsilon-form equivalence bracket on sampled vectors
    RenormSpec eq;
    eq.base = SpaceParams::parse("lp:2");
    eq.form = RenormSpec::Form::Epsilon;
    eq.eps = 0.25;
    eq.family = {VecF::basis(0), vf({{1, 0.5}, {2, 0.5}})};
    double M = 0.0;
    for (const auto& a : eq.family) M = std::max(M, lp_norm(a, 2.0));
    Rng rng(5);
    for (int t = 0; t < 200; ++t) {
        const VecF x = random_nonneg_unit(rng, 6);
        const double base = lp_norm(x, 2.0);
        const double v = eval_renorm(eq, x);
        REQUIRE(v >= base - 1e-12);
        REQUIRE(v <= (1.0 + M / eq.eps) * base + 1e-12);
    }
}

TEST_CASE("delta-norming checks") {
    const SpaceParams l2 = SpaceParams::parse("lp:2");
    CHECK(is_delta_norming({VecF::basis(1)}, {VecF::basis(1)}, 1.0, l2).ok);
    const auto bad = is_delta_norming({VecF::basis(1)}, {VecF::basis(2)}, 0.1, l2);
    CHECK_FALSE(bad.ok);
    CHECK(bad.violator == 0);
    // norming functionals are 1-norming for their own vectors
    Rng rng(21);
    std::vector<VecF> vecs, family;
    for (int t = 0; t < 10; ++t) {
        const VecF x = random_nonneg_unit(rng, 5);
        vecs.push_back(x);
        family.push_back(space_norming_functional(l2, x));
    }
    CHECK(is_delta_norming(family, vecs, 1.0 - 1e-9, l2).ok);
}

TEST_CASE("distortion witnesses") {
    RenormSpec spec;
    spec.base = SpaceParams::parse("lp:2");
    spec.form = RenormSpec::Form::Epsilon;
    spec.family = {VecF::basis(1)};

    for (const auto& [delta, eps] : std::vector<std::pair<double, double>>{
             {0.25, 1.0 / 16.0}, {0.5, 1.0 / 32.0}}) {
        spec.eps = eps;
        const DistortionReport rep =
            distortion_witness(VecF::basis(1), VecF::basis(2), spec, delta);
        CHECK(rep.a_large);
        CHECK(rep.b_small);
        CHECK(rep.shape_bound);
        CHECK(rep.ratio >= (delta / eps) / 2.0 - 1e-9);
    }
    spec.eps = 0.0625;
    const DistortionReport same =
        distortion_witness(VecF::basis(1), VecF::basis(1), spec, 0.25);
    CHECK(same.ratio == Catch::Approx(1.0));
    CHECK_THROWS_AS(
        distortion_witness(VecF::basis(1, 2.0), VecF::basis(2), spec, 0.25),
        InvalidInput);
}

TEST_CASE("distortion search") {
    RenormSpec spec;
    spec.base = SpaceParams::parse("lp:2");
    spec.form = RenormSpec::Form::Epsilon;
    spec.family = {VecF::basis(1)};
    spec.eps = 0.1;

    {
        const BlockSubspace line({VecF::basis(1)}, spec.base);
        const DistortionSearchResult r = distortion_search(spec, line, 16, 1);
        CHECK(r.ratio_estimate == 1.0);
    }
    {
        // closed form on the 2-d circle: max 1 + 10 |cos|, min at cos = 0
        const BlockSubspace plane({VecF::basis(1), VecF::basis(2)}, spec.base);
        const DistortionSearchResult r = distortion_search(spec, plane, 6284, 1);
        CHECK(r.max_value == Catch::Approx(11.0).margin(1e-3));
        CHECK(r.min_value == Catch::Approx(1.0).margin(1e-3));
        CHECK(r.ratio_estimate == Catch::Approx(11.0).margin(2e-2));
    }
    {
        // the base norm in tau form distorts nothing
        RenormSpec base_like;
        base_like.base = spec.base;
        base_like.form = RenormSpec::Form::Tau;
        base_like.tau = 1e-3;
        Rng rng(3);
        for (int t = 0; t < 32; ++t) {
            const double th = rng.uniform(0, 2 * M_PI);
            base_like.family.push_back(space_norming_functional(
                spec.base, vf({{3, std::cos(th)}, {4, std::sin(th)}})));
        }
        const BlockSubspace plane({VecF::basis(3), VecF::basis(4)}, spec.base);
        const DistortionSearchResult r =
            distortion_search(base_like, plane, 512, 1);
        CHECK(r.ratio_estimate == Catch::Approx(1.0).margin(5e-2));
    }
    CHECK_THROWS_AS(
        distortion_search(spec, BlockSubspace({VecF::basis(0)}, spec.base), 0, 1),
        InvalidInput);
}

TEST_CASE("asymptotic distances") {
    const SpaceParams l2 = SpaceParams::parse("lp:2");
    const BlockSubspace e1({VecF::basis(1)}, l2);
    CHECK(asymptotic_distance({VecF::basis(1)}, e1, l2, 256) ==
          Catch::Approx(0.0).margin(1e-6));
    const BlockSubspace e2({VecF::basis(2)}, l2);
    CHECK(asymptotic_distance({VecF::basis(1)}, e2, l2, 256) ==
          Catch::Approx(1.0).margin(1e-6));
    // a couple's combined vector lies in the span of its own blocks
    const Couple c = make_delta(SpaceParams::parse("t2"), 2, 1, 0, 64, 2);
    const BlockSubspace own(c.blocks, SpaceParams::parse("t2"));
    CHECK(asymptotic_distance({c.z}, own, SpaceParams::parse("t2"), 512) ==
          Catch::Approx(0.0).margin(1e-4));
    CHECK_THROWS_AS(asymptotic_distance({}, e1, l2, 16), InvalidInput);
}

TEST_CASE("F and G estimates") {
    {
        // triangle equality in the l1 oracle
        const FGEstimate est = estimate_FG(SpaceParams::parse("lp:1"), 3, 0, 32, 2);
        CHECK(est.F_lower == Catch::Approx(1.0).margin(1e-9));
    }
    {
        const FGEstimate est = estimate_FG(SpaceParams::parse("lp:2"), 3, 0, 32, 2);
        CHECK(est.F_lower == Catch::Approx(1.0).margin(1e-9));
        CHECK(est.G_lower == Catch::Approx(1.0).margin(1e-6));
    }
    {
        // asymptotically-l1 probe in t: recorded, clamped at one, reproducible
        const FGEstimate a = estimate_FG(SpaceParams::parse("t"), 2, 4, 48, 11);
        const FGEstimate b = estimate_FG(SpaceParams::parse("t"), 2, 4, 48, 11);
        CHECK(a.F_lower >= 1.0);
        CHECK(a.F_lower == b.F_lower);
        CHECK(a.witness.dump() == b.witness.dump());
    }
    CHECK_THROWS_AS(estimate_FG(SpaceParams::parse("t"), 2, 4, 0, 1), InvalidInput);
}

TEST_CASE("cut bound") {
    {
        // single part of full size: equality
        const HolderCutResult r = holder_cut_check({1.0}, {16}, 16, 2.0);
        CHECK(r.pass);
        CHECK(r.lhs == Catch::Approx(r.rhs).margin(1e-12));
    }
    {
        // equal masses: equality within 1e-12
        const long m = 4, N = 64;
        std::vector<double> duals(m, std::pow(static_cast<double>(m), -0.5));
        std::vector<long> sizes(m, N / m);
        const HolderCutResult r = holder_cut_check(duals, sizes, N, 2.0);
        CHECK(r.pass);
        CHECK(std::fabs(r.lhs - r.rhs) <= 1e-12);
    }
    {
        Rng rng(55);
        for (int t = 0; t < 1000; ++t) {
            const long m = 1 + rng.uniform_int(0, 5);
            const long N = 8 * m + rng.uniform_int(0, 32);
            std::vector<double> duals(static_cast<std::size_t>(m));
            double qsum = 0;
            for (auto& d : duals) {
                d = rng.uniform01();
                qsum += d * d;
            }
            for (auto& d : duals) d /= std::sqrt(qsum) * 1.0000001;
            std::vector<long> sizes(static_cast<std::size_t>(m));
            long left = N;
            for (auto& s : sizes) {
                s = rng.uniform_int(0, left / 2);
                left -= s;
            }
            REQUIRE(holder_cut_check(duals, sizes, N, 2.0).pass);
        }
    }
    CHECK_THROWS_AS(holder_cut_check({1.0, 1.0}, {4}, 8, 2.0), InvalidInput);
    CHECK_THROWS_AS(holder_cut_check({1.0, 1.0}, {4, 4}, 8, 2.0), InvalidInput);
}

TEST_CASE("cross actions") {
    LacunaritySchedule sched;
    sched.sigma = 1e-6;
    const AkVector a2 = make_ak(2, sched, 0);
    std::vector<FunctionalTree> kids;
    for (const auto& avg : a2.ris.averages)
        kids.push_back(s_norming_functional(avg.u));
    const VecF dual2 = FunctionalTree::node(std::move(kids)).realize();

    {
        // matched pairing telescopes to one
        const ActionMatrix m = cross_action({FamilyMember{a2.u, dual2}},
                                            {FamilyMember{a2.u, dual2}}, "A_2", "A_2");
        REQUIRE(m.matched.size() == 1);
        CHECK(m.matched[0] == Catch::Approx(1.0).margin(1e-9));
    }
    CHECK_THROWS_AS(cross_action({FamilyMember{a2.u, dual2}}, {}, "a", "b"),
                    InvalidInput);
    {
        // off-diagonal actions fall as the column level grows
        std::vector<double> actions;
        for (long l : {3L, 4L, 5L}) {
            const AkVector al = make_ak(l, sched, 0);
            const ActionMatrix m = cross_action({FamilyMember{a2.u, dual2}},
                                                {FamilyMember{al.u, {}}}, "A*_2", "A_l");
            actions.push_back(m.entries[0][0]);
        }
        CHECK(actions[0] >= actions[1]);
        CHECK(actions[1] >= actions[2]);
    }
}

TEST_CASE("product mass transfer probe") {
    const SpaceParams t2 = SpaceParams::parse("t2");
    LacunaritySchedule sched;
    sched.sigma = 1e-3;
    const GammaCouple g = make_gamma(t2, 2, {2, 4}, sched, 0, 64);

    const Lemma2Slice slice =
        lemma2_probe({{g.y, g.ystar}}, t2, {0.03, 0.1, 0.3}, 99);
    REQUIRE(slice.eps_grid.size() == 3);
    // buckets nest: curves nondecreasing in eps
    CHECK(slice.max_Ey[0] <= slice.max_Ey[1] + 1e-12);
    CHECK(slice.max_Ey[1] <= slice.max_Ey[2] + 1e-12);
    // the empty subset qualifies everywhere, so every bucket has samples
    for (long n : slice.samples) CHECK(n >= 1);
    // the full support never qualifies: ||E yy*||_1 = 1 >= every bucket
    const VecF yy = pointwise_product(g.y, g.ystar);
    CHECK(lp_norm(yy, 1.0) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("orthogonality probe") {
    const VecF t = vf({{0, 0.5}, {1, 0.5}});
    {
        const OrthogonalityResult r = orthogonality_probe(t, t);
        CHECK(r.sqrt_pairing == Catch::Approx(1.0).margin(1e-12));
        CHECK(r.l1_distance == 0.0);
        CHECK(r.bound_ok);
    }
    {
        const VecF t2 = vf({{5, 0.5}, {6, 0.5}});
        const OrthogonalityResult r = orthogonality_probe(t, t2);
        CHECK(r.sqrt_pairing == 0.0);
        CHECK(r.l1_distance == Catch::Approx(2.0));
        CHECK(r.bound_ok);
    }
    {
        const VecF a = vf({{0, 0.5}, {1, 0.5}});
        const VecF b = vf({{1, 0.5}, {2, 0.5}});
        const OrthogonalityResult r = orthogonality_probe(a, b);
        CHECK(r.sqrt_pairing == Catch::Approx(0.5).margin(1e-12));
        CHECK(r.l1_distance == Catch::Approx(1.0).margin(1e-12));
        CHECK(r.bound_ok);  // 1 >= 2 - 2 * 0.5
    }
    CHECK_THROWS_AS(orthogonality_probe(vf({{0, -1.0}}), t), InvalidInput);

    Rng rng(2718);
    for (int trial = 0; trial < 1000; ++trial) {
        const VecF x = random_nonneg_unit(rng, 8);
        const VecF y = random_nonneg_unit(rng, 8);
        REQUIRE(orthogonality_probe(x, y).bound_ok);
    }
}

TEST_CASE("moduli and the alpha cascade") {
    const SpaceParams t2 = SpaceParams::parse("t2");
    const ModulusProfile prof =
        estimate_moduli(t2, 1.5, {0.1, 0.25, 0.5, 0.75, 1.0}, 2, 32, 5);
    for (std::size_t e = 1; e < prof.eps_grid.size(); ++e) {
        CHECK(prof.delta[e] >= prof.delta[e - 1] - 1e-12);
        CHECK(prof.alpha1[e] >= prof.alpha1[e - 1] - 1e-12);
    }
    for (double d : prof.delta) CHECK(d >= 0.0);
    // cascade shape: alpha2 = C (alpha1 + eps^(1/2)) for p = q = 2
    for (std::size_t e = 0; e < prof.eps_grid.size(); ++e) {
        const double expect =
            1.5 * (prof.alpha1[e] + std::sqrt(prof.eps_grid[e]));
        CHECK(prof.alpha2[e] == Catch::Approx(expect).margin(1e-12));
    }
}

TEST_CASE("sequential distortion suite") {
    const SpaceParams t2 = SpaceParams::parse("t2");
    CalibrationTable calib;
    calib.space = "t2";
    calib.p = 2.0;
    calib.C = std::sqrt(2.0);
    LacunaritySchedule sched;
    sched.sigma = 1e-3;

    {
        const SeqSuiteResult r =
            seq_distortion_suite(t2, {1}, sched, 0, 64, 7, &calib);
        CHECK(r.witness_norms[0][0] >= 1.0 / (r.C * r.C) - 1e-9);
    }
    {
        const SeqSuiteResult r =
            seq_distortion_suite(t2, {1, 2}, sched, 0, 64, 7, &calib);
        CHECK(r.witness_norms.size() == 2);
        CHECK(r.witness_norms[0][1] < r.witness_norms[0][0]);
        CHECK(r.witness_norms[1][0] < r.witness_norms[1][1]);
        for (const auto& row : r.checks) {
            INFO(row.name << " lhs=" << row.lhs << " rhs=" << row.rhs);
            CHECK(row.pass);
        }
        // identical rerun
        const SeqSuiteResult r2 =
            seq_distortion_suite(t2, {1, 2}, sched, 0, 64, 7, &calib);
        CHECK(r2.witness_norms[0][1] == r.witness_norms[0][1]);
    }
    CHECK_THROWS_AS(seq_distortion_suite(t2, {}, sched, 0, 64, 7, &calib),
                    InvalidInput);
}
