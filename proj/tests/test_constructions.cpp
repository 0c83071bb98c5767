#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "normlab/bundle_io.hpp"
#include "normlab/constructions.hpp"
#include "normlab/schlumprecht.hpp"

using namespace normlab;

namespace {

VecF flat_at(long len, Index start, double height = 1.0) {
    std::vector<VecF::Entry> e;
    for (long i = 0; i < len; ++i) e.emplace_back(start + i, height);
    return VecF::from_entries(std::move(e));
}

} // namespace

TEST_CASE("lp equivalence measurement") {
    const SpaceParams l2 = SpaceParams::parse("lp:2");
    {
        // standard basis in the oracle space: exact identity
        const BlockSeqF basis({VecF::basis(0), VecF::basis(1), VecF::basis(2)});
        const EquivalenceCertificate c = verify_lp_equivalence(basis, 2.0, 16, l2);
        CHECK(c.d == Catch::Approx(1.0).margin(1e-9));
        CHECK(c.D == Catch::Approx(1.0).margin(1e-9));
    }
    {
        const BlockSeqF single({VecF::basis(3)});
        const EquivalenceCertificate c = verify_lp_equivalence(single, 1.0, 16, l2);
        CHECK(c.d == 1.0);
        CHECK(c.D == 1.0);
    }
    {
        // two flat pairs: D is the corner value 1, d dips below 1
        const SpaceParams s = SpaceParams::parse("s");
        std::vector<VecF> blocks = {flat_at(2, 0), flat_at(2, 2)};
        for (auto& b : blocks) b = scale(b, 1.0 / s_norm(b));
        const EquivalenceCertificate c =
            verify_lp_equivalence(BlockSeqF(blocks), 1.0, 64, s);
        CHECK(c.D == Catch::Approx(1.0).margin(1e-9));
        CHECK(c.d < 1.0);
        // cross-check against an exhaustive finer grid
        double fine = 1e9;
        for (int u = 0; u <= 512; ++u) {
            const double c1 = static_cast<double>(u) / 512.0;
            fine = std::min(fine, s_norm(add(scale(blocks[0], c1),
                                             scale(blocks[1], 1.0 - c1))));
        }
        CHECK(std::fabs(c.d - fine) <= 1e-4);
    }
    CHECK_THROWS_AS(verify_lp_equivalence(BlockSeqF{}, 1.0, 16, l2), InvalidInput);
    CHECK_THROWS_AS(
        verify_lp_equivalence(BlockSeqF({VecF::basis(0, 2.0)}), 1.0, 16, l2),
        InvalidInput);
}

TEST_CASE("l1 averages") {
    {
        // n = 1: any normalized block, trivially 1-equivalent
        const L1Average a = make_l1_average(1, 0, 4);
        CHECK(a.cert.d == Catch::Approx(1.0).margin(1e-9));
        CHECK(s_norm(a.u) == Catch::Approx(1.0).margin(1e-9));
    }
    {
        const L1Average a = make_l1_average(2, 0, 16);
        CHECK(s_norm(a.u) == Catch::Approx(1.0).margin(1e-6));
        CHECK(a.cert.d >= 0.5);
        CHECK(a.cert.d == Catch::Approx(std::log2(17.0) / std::log2(33.0)).margin(1e-9));
        CHECK(a.beta >= 1.0);
        CHECK(a.beta <= 2.0);
        // the recorded scale reassembles u from the normalized parts
        const VecF again = scale(sum_of(a.parts), a.beta / 2.0);
        CHECK(lp_norm(subtract(again, a.u), 1.0) <= 1e-9);
    }
    // short flat blocks fail 2-equivalence decisively at n = 8
    CHECK_THROWS_AS(make_l1_average(8, 0, 2), InfeasibleConstruction);
    CHECK_THROWS_AS(make_l1_average(0, 0, 4), InvalidInput);
    try {
        make_l1_average(8, 0, 2);
    } catch (const InfeasibleConstruction& e) {
        CHECK(e.violated_inequality() == "d >= 1/2");
        CHECK(std::string(e.what()).find("measured d=") != std::string::npos);
    }
}

TEST_CASE("rapidly increasing sequences") {
    {
        // length 1 at tiny sigma: the first condition is vacuous
        LacunaritySchedule sched;
        sched.sigma = 1e-9;
        const RISequence r = make_ris(1, sched, 0);
        CHECK(r.averages.size() == 1);
        CHECK(r.cert.front().pass);
    }
    {
        // explicit sizes (4, 8) pass at a small enough scale
        LacunaritySchedule sched;
        sched.sigma = 1e-3;
        sched.sizes = {4, 8};
        const RISequence r = make_ris(2, sched, 0);
        CHECK(r.sizes == std::vector<long>{4, 8});
        for (const auto& row : r.cert) CHECK(row.pass);
        CHECK(is_successive(r.averages[0].u, r.averages[1].u));
    }
    {
        // nominal scale: the first condition forces astronomically large n_1
        LacunaritySchedule sched;
        sched.sigma = 1.0;
        CHECK_THROWS_AS(make_ris(2, sched, 0), InfeasibleConstruction);
        try {
            make_ris(2, sched, 0);
        } catch (const InfeasibleConstruction& e) {
            CHECK(e.violated_inequality().find("36 k^2") != std::string::npos);
        }
    }
    CHECK_THROWS_AS(make_ris(0, LacunaritySchedule{}, 0), InvalidInput);
}

TEST_CASE("scaled sums over a sequence") {
    LacunaritySchedule sched;
    sched.sigma = 1e-3;
    {
        const AkVector a = make_ak(1, sched, 0);
        // phi(1)/1 = 1: the scaled sum is the single average itself
        CHECK(lp_norm(subtract(a.u, a.ris.averages[0].u), 1.0) <= 1e-12);
        CHECK(a.s_norm_measured == Catch::Approx(1.0).margin(1e-6));
    }
    {
        sched.sizes = {4, 8};
        const AkVector a = make_ak(2, sched, 0);
        CHECK(a.s_norm_measured > 0.0);
        CHECK(a.s_norm_measured ==
              Catch::Approx(s_norm(a.u)).margin(1e-12));
    }
    CHECK_THROWS_AS(make_ak(0, sched, 0), InvalidInput);
}

TEST_CASE("unit products") {
    {
        const ProductVector d = make_dm(1, 0, 8);
        CHECK(is_nonnegative(d.t));
        CHECK(d.t_l1 == Catch::Approx(1.0).margin(1e-9));
        // flat average times its flat functional: uniform mass profile
        const double level = 1.0 / static_cast<double>(d.t.nnz());
        for (const auto& [i, c] : d.t.entries())
            CHECK(c == Catch::Approx(level).margin(1e-9));
    }
    {
        const ProductVector d = make_dm(2, 0, 16);
        CHECK(d.t.nnz() == 32);
        CHECK(is_nonnegative(d.t));
        CHECK(d.t_l1 == Catch::Approx(1.0).margin(1e-9));
        CHECK(lp_norm(d.v.realize(), std::numeric_limits<double>::infinity()) <=
              2.0 + 1e-12);
    }
}

TEST_CASE("transfer search") {
    {
        // equal flat unit blocks: exact flat witness, zero defect
        std::vector<VecF> h;
        for (int j = 0; j < 4; ++j)
            h.push_back(scale(flat_at(4, 16 * j), 0.25));
        const auto res = transfer_search(h, 2, 0.1, 64);
        REQUIRE(res.has_value());
        CHECK(res->defect <= 1e-9);
        CHECK(res->product.avg.n == 2);
        CHECK(is_nonnegative(res->product.t));
    }
    {
        // a single input approximated by its own flat profile
        const VecF h = scale(flat_at(3, 5), 1.0 / 3.0);
        const auto res = transfer_search({h}, 1, 0.5, 8);
        REQUIRE(res.has_value());
        CHECK(res->j_lo == 1);
        CHECK(res->j_hi == 1);
        CHECK(res->defect < 0.5);
    }
    {
        // budget / feasibility exhaustion is NotFound, not an error
        const VecF h = scale(flat_at(2, 3), 0.5);
        const auto res = transfer_search({h}, 8, 1e-6, 16);
        CHECK_FALSE(res.has_value());
    }
    CHECK_THROWS_AS(transfer_search({}, 1, 0.5, 4), InvalidInput);
    CHECK_THROWS_AS(transfer_search({VecF::basis(0, 2.0)}, 1, 0.5, 4), InvalidInput);
}

TEST_CASE("couples") {
    const SpaceParams l2 = SpaceParams::parse("lp:2");
    {
        // oracle space with singleton-profile products
        const Couple c = make_delta(l2, 4, 2, 0, 64, 1);
        CHECK(c.defect < 0.5 + 1e-12);
        const VecF zz = pointwise_product(c.z, c.zstar);
        CHECK(is_nonnegative(zz));
        CHECK(lp_norm(zz, 1.0) == Catch::Approx(1.0).margin(1e-9));
        CHECK(dot(c.z, c.zstar) == Catch::Approx(1.0).margin(1e-9));
    }
    const SpaceParams t2 = SpaceParams::parse("t2");
    {
        const Couple c = make_delta(t2, 2, 1, 0, 64, 2);
        CHECK(lp_norm(pointwise_product(c.z, c.zstar), 1.0) ==
              Catch::Approx(1.0).margin(1e-9));
        CHECK(c.supported_after >= 2);
        CHECK(c.blocks.front().min_index() > c.supported_after);
        // re-verification reproduces every pass
        const auto rows = verify_couple(c);
        for (const auto& row : rows) CHECK(row.pass);
    }
    CHECK_THROWS_AS(make_delta(t2, 0, 1, 0, 64), InvalidInput);
    CHECK_THROWS_AS(make_delta(SpaceParams::parse("s"), 2, 1, 0, 64), InvalidInput);
}

TEST_CASE("gamma couples") {
    const SpaceParams t2 = SpaceParams::parse("t2");
    LacunaritySchedule sched;
    sched.sigma = 1e-3;
    {
        const GammaCouple g = make_gamma(t2, 1, {1}, sched, 0, 64);
        CHECK(g.members.size() == 1);
        CHECK(g.yy_l1 == Catch::Approx(1.0).margin(1e-9));
        CHECK(dot(g.y, g.ystar) == Catch::Approx(1.0).margin(1e-9));
    }
    {
        const GammaCouple g = make_gamma(t2, 2, {2, 8}, sched, 0, 64);
        CHECK(g.yy_l1 == Catch::Approx(1.0).margin(1e-9));
        for (const auto& row : g.ris_cert) CHECK(row.pass);
        for (const auto& m : g.members)
            CHECK(m.defect < 1.0 / static_cast<double>(m.m) + 1e-12);
        // members successive
        CHECK(is_successive(g.members[0].z, g.members[1].z));
        const auto rows = verify_gamma(g);
        for (const auto& row : rows) CHECK(row.pass);
    }
    {
        LacunaritySchedule nominal;
        nominal.sigma = 1.0;
        CHECK_THROWS_AS(make_gamma(t2, 2, {2, 8}, nominal, 0, 64),
                        InfeasibleConstruction);
    }
}

TEST_CASE("bundles round trip and re-verify") {
    {
        const L1Average a = make_l1_average(2, 0, 16);
        const nlohmann::ordered_json bundle =
            make_bundle("average", average_to_json(a), 7, 1e-3);
        const auto rows = verify_bundle(bundle);
        CHECK(all_pass(rows));
        const L1Average back = average_from_json(bundle.at("payload"));
        CHECK(back.u == a.u);
        CHECK(back.cert.d == a.cert.d);
    }
    {
        const SpaceParams t2 = SpaceParams::parse("t2");
        const Couple c = make_delta(t2, 2, 2, 0, 64, 2);
        nlohmann::ordered_json bundle = make_bundle("delta", couple_to_json(c), 7, 1e-3);
        CHECK(all_pass(verify_bundle(bundle)));
        // deserialize, re-serialize: identical bytes
        const Couple back = couple_from_json(bundle.at("payload"));
        CHECK(couple_to_json(back).dump() == couple_to_json(c).dump());
        // tampering flips the same check on re-verification
        bundle["payload"]["z"]["coords"][0][1] =
            bundle["payload"]["z"]["coords"][0][1].get<double>() * 1.5;
        CHECK_FALSE(all_pass(verify_bundle(bundle)));
    }
    {
        LacunaritySchedule sched;
        sched.sigma = 1e-3;
        sched.sizes = {4, 8};
        const RISequence r = make_ris(2, sched, 0);
        const nlohmann::ordered_json bundle =
            make_bundle("ris", ris_to_json(r), 7, 1e-3);
        CHECK(all_pass(verify_bundle(bundle)));
    }
}
