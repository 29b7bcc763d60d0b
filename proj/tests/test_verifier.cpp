#include "doctest.h"

#include <cmath>
#include <cstdlib>

#include "hypbranch/errors.hpp"
#include "hypbranch/verifier.hpp"

using namespace hypbranch;

namespace {

GroupPtr f2() { return make_group(GroupSpec::free_group(2)); }
GroupPtr fpc() { return make_group(GroupSpec::free_product_cyclic({4, 2}, {"t", "s"})); }

std::shared_ptr<const Ball> ball_of(const GroupPtr& g, int n, int margin) {
    return std::make_shared<const Ball>(Ball::enumerate(g, n, margin));
}

std::shared_ptr<const BranchSets> letters(const GroupPtr& g, int n, std::vector<Complex> eps = {},
                                          std::vector<int> levels = {}) {
    BranchFamily fam;
    fam.m = 1;
    fam.delta = 1;
    for (Letter l : g->cayley_letters()) fam.branches.push_back({g->generator(l)});
    fam.epsilon = std::move(eps);
    return std::make_shared<const BranchSets>(ball_of(g, n, 4), fam, levels);
}

std::shared_ptr<const BranchSets> fpc_family(const GroupPtr& g, int n) {
    BranchFamily fam;
    fam.m = 2;
    fam.delta = 2;
    fam.branches = {{g->parse("t s")}, {g->parse("t^-1 s")}};
    return std::make_shared<const BranchSets>(ball_of(g, n, 6), fam);
}

bool has_witness(const VerificationReport& r, const std::string& key, const std::string& value) {
    for (const auto& w : r.violations)
        if (w.body.value(key, "") == value) return true;
    return false;
}

} // namespace

TEST_CASE("geodesic lemma sweeps") {
    auto g = f2();
    auto ball = ball_of(g, 4, 0);
    auto rep = check_geodesic_lemma(*ball, g->parse("a"), 1.0);
    CHECK(rep.pass());
    CHECK(rep.cases > 1000);
    CHECK(rep.uncertified == 0);
    CHECK(rep.extremal["max_widest_distance"].get<int>() == 0);
    // g = e is never a candidate since a != e.
    CHECK(rep.details["g_candidates"].get<std::size_t>() == ball->count_within(4) / 4);

    auto h = fpc();
    auto fb = ball_of(h, 4, 0);
    auto bad = check_geodesic_lemma(*fb, h->parse("t"), 1.0);
    CHECK(!bad.pass());
    CHECK(bad.violations.front().body["g"] == "t^2");
    CHECK(bad.violations.front().body["h"] == "e");
    CHECK(!bad.notes.empty());
    auto good = check_geodesic_lemma(*fb, h->parse("t"), 2.0);
    CHECK(good.pass());
    CHECK(good.cases > 0);
}

TEST_CASE("inclusion lemma") {
    auto g = f2();
    auto rep = check_inclusion_lemma(*letters(g, 4));
    CHECK(rep.pass());
    CHECK(rep.cases > 10000);
    CHECK(rep.uncertified == 0);

    BranchFamily one;
    one.m = 1;
    one.delta = 1;
    one.branches = {{g->parse("a")}};
    auto single = check_inclusion_lemma(BranchSets(ball_of(g, 4, 4), one));
    CHECK(single.pass());
    CHECK(single.cases > 0);

    BranchFamily empty = one;
    empty.branches = {{}};
    auto none = check_inclusion_lemma(BranchSets(ball_of(g, 3, 4), empty));
    CHECK(none.cases == 0);
    CHECK(none.pass());

    auto fr = check_inclusion_lemma(*fpc_family(fpc(), 5));
    CHECK(fr.pass());
    CHECK(fr.cases > 0);
}

TEST_CASE("operator identity") {
    auto g = f2();
    auto sets = letters(g, 3);
    auto eps = sets->family().signs();
    auto pairs = eligible_identity_pairs(*sets);
    REQUIRE(pairs.size() > 100);
    auto rep = check_operator_identity(*sets, eps, pairs);
    CHECK(rep.pass());
    CHECK(rep.cases == pairs.size());
    CHECK(rep.extremal["max_deviation"].get<double>() == 0.0);
    CHECK(rep.details["exact_zero_pairs"].get<std::size_t>() == pairs.size());

    auto x = g->parse("a b");
    auto rejected = check_operator_identity(*sets, eps, {{x, x}});
    CHECK(rejected.cases == 0);
    CHECK(rejected.rejected_count == 1);

    auto h = fpc();
    auto fs = fpc_family(h, 5);
    auto sampled = sample_identity_pairs(*fs, 200, 7);
    CHECK(sampled.size() == 200);
    auto frep = check_operator_identity(*fs, {{0.6, 0.8}, {0.0, -1.0}}, sampled);
    CHECK(frep.pass());
    CHECK(frep.extremal["max_deviation"].get<double>() < 1e-12);
}

TEST_CASE("calH equals H_thick atomwise") {
    auto g = f2();
    auto sets = letters(g, 4);
    auto rep = check_habg(*sets, sets->family().signs());
    CHECK(rep.pass());
    CHECK(rep.cases == sets->ball().count_within(4) - 1);

    auto h = fpc();
    BranchFamily fam;
    fam.m = 1;
    fam.delta = 1;
    fam.branches = {{h->parse("t")}, {h->parse("t^-1")}, {h->parse("s")}};
    BranchSets thin(ball_of(h, 3, 4), fam);
    // Alternating signs would cancel on t^2, which lies in both calL_t and calL_{t^-1}.
    auto bad = check_habg(thin, {1.0, 0.5, -1.0});
    CHECK(!bad.pass());
    CHECK(has_witness(bad, "g", "t^2"));
    CHECK(check_habg(*fpc_family(h, 4), {1.0, -1.0}).pass());
}

TEST_CASE("sample coefficients") {
    auto a = sample_coefficients(Sampler::Rademacher, 9, 3, 4, 50);
    CHECK(a == sample_coefficients(Sampler::Rademacher, 9, 3, 4, 50));
    CHECK(a != sample_coefficients(Sampler::Rademacher, 9, 3, 5, 50));
    for (auto c : a) CHECK((c == Complex(1.0) || c == Complex(-1.0)));
    auto z = sample_coefficients(Sampler::RandomComplex, 9, 3, 4, 2000);
    double mean_sq = 0;
    for (auto c : z) mean_sq += std::norm(c);
    CHECK(std::abs(mean_sq / 2000 - 1) < 0.1);
    auto e = sample_coefficients(Sampler::Atoms, 0, 0, 2, 4);
    CHECK(e == std::vector<Complex>{0.0, 0.0, 1.0, 0.0});
    CHECK_THROWS_AS(parse_sampler("gauss"), InvalidInput);
}

TEST_CASE("lambda-p experiments") {
    auto g = f2();
    const Complex I(0, 1);
    std::vector<Complex> eps{{0.6, 0.8}, -I, 0.5, 1.0};
    auto sets = letters(g, 3, eps);

    LambdaOptions atoms;
    atoms.sampler = Sampler::Atoms;
    auto rep = lambda_p_experiment(*sets, eps, atoms);
    CHECK(rep.pass());
    CHECK(std::abs(rep.extremal["max_ratio"].get<double>() - 1.0) < 1e-12);
    CHECK(rep.cases == sets->ball().count_within(3) - 1);

    LambdaOptions rad;
    rad.samples = 40;
    rad.radii = {2, 3};
    rad.seed = 17;
    auto r4 = lambda_p_experiment(*sets, eps, rad);
    CHECK(r4.pass());
    CHECK(r4.extremal["bound"].get<double>() == doctest::Approx(1 + std::sqrt(2 + std::sqrt(53.0))));
    CHECK(r4.extremal["max_ratio"].get<double>() <= r4.extremal["bound"].get<double>());
    CHECK(r4.details["per_radius"].size() == 2);

    // Same config and seed give the same body; so does another worker count.
    auto again = lambda_p_experiment(*sets, eps, rad);
    CHECK(again.to_json(false).dump() == r4.to_json(false).dump());
    setenv("HYPBRANCH_WORKERS", "3", 1);
    auto threaded = lambda_p_experiment(*sets, eps, rad);
    unsetenv("HYPBRANCH_WORKERS");
    CHECK(threaded.to_json(false).dump() == r4.to_json(false).dump());

    std::vector<Complex> ones(4, 1.0);
    LambdaOptions p2;
    p2.k = 1;
    p2.samples = 30;
    p2.sampler = Sampler::RandomComplex;
    auto c2 = lambda_p_experiment(*sets, ones, p2);
    CHECK(c2.pass());
    CHECK(c2.extremal["max_ratio"].get<double>() <= 1 + 1e-9);

    LambdaOptions p8;
    p8.k = 3;
    p8.samples = 3;
    p8.radii = {2};
    auto r8 = lambda_p_experiment(*sets, eps, p8);
    CHECK(r8.extremal["bound"].is_null());
    CHECK(r8.cases == 3);
}

TEST_CASE("k-fold experiment") {
    auto g = f2();
    auto sets = letters(g, 3, {}, {1, 2});
    auto eps = sets->family().signs();
    LambdaOptions o;
    o.samples = 20;
    o.seed = 5;
    auto base = lambda_p_experiment(*sets, eps, o);
    auto fold = kfold_experiment(*sets, eps, 1, 2, o);
    CHECK(fold.details["per_radius"] == base.details["per_radius"]);
    CHECK(fold.pass());

    auto n1 = kfold_experiment(*sets, eps, 1, 1, o);
    CHECK(n1.extremal["max_ratio"].get<double>() <= 1 + 1e-9);
    CHECK(n1.params["support_multiple"] == 1);

    // L^{2δ} of neighbouring letters overlap at e-adjacent words.
    CHECK_THROWS_AS(kfold_experiment(*sets, eps, 2, 2, o), InvalidInput);
    CHECK_THROWS_AS(kfold_experiment(*sets, eps, 1, 3, o), InvalidInput);
}

TEST_CASE("commutator check") {
    auto g = f2();
    auto ball = ball_of(g, 4, 6);
    auto rep = commutator_check(ball, g->parse("a"), g->parse("b"), 1.0, {1.0, 2.0});
    CHECK(rep.pass());
    CHECK(rep.cases > 0);
    CHECK(rep.details["nonzero_action"]["max_length"].get<int>() < 3);
    CHECK(rep.details["nonzero_action"]["stable"].get<bool>());
    CHECK(rep.details["projection_difference"]["count"] == 0);
    CHECK(rep.details["remark"].size() == 2);

    auto trivial = commutator_check(ball, g->parse("a"), g->identity(), 1.0);
    CHECK(trivial.details["nonzero_action"]["count"] == 0);
    CHECK(trivial.pass());

    auto fam = commutator_family(*ball, g->parse("a"), 0.25, {});
    // δ = 1/4: the far part of the sphere is every other letter.
    CHECK(fam.branches[1].size() == 3);
    CHECK(fam.branches[2].size() == 4);
}

TEST_CASE("report serialization") {
    VerificationReport r;
    r.statement = "demo";
    auto g = f2();
    r.add_violation({{g->parse("b")}, {{"g", "b"}}});
    r.add_violation({{g->parse("a")}, {{"g", "a"}}});
    r.add_violation({{g->parse("a b")}, {{"g", "a b"}}});
    r.finalize();
    auto j = r.to_json(false);
    CHECK(!j["pass"].get<bool>());
    CHECK(j["violations"][0]["g"] == "a");
    CHECK(j["violations"][2]["g"] == "a b");
    CHECK(!j.contains("timing"));
    CHECK(r.to_json(true).contains("timing"));
    VerificationReport ok;
    CHECK(ok.to_json()["pass"].get<bool>());
}
