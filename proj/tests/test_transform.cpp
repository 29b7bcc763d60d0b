#include "doctest.h"

#include <cmath>
#include <random>

#include "hypbranch/errors.hpp"
#include "hypbranch/transform.hpp"

using namespace hypbranch;

namespace {

std::shared_ptr<const BranchSets> letter_sets(const GroupPtr& g, int n, std::vector<Complex> eps = {}) {
    BranchFamily fam;
    fam.m = 1;
    fam.delta = 1;
    for (Letter l : g->cayley_letters()) fam.branches.push_back({g->generator(l)});
    fam.epsilon = std::move(eps);
    auto ball = std::make_shared<const Ball>(Ball::enumerate(g, n, 3));
    return std::make_shared<const BranchSets>(ball, fam);
}

std::shared_ptr<const BranchSets> fpc_sets(const GroupPtr& g, int n) {
    BranchFamily fam;
    fam.m = 2;
    fam.delta = 2;
    fam.branches = {{g->parse("t s")}, {g->parse("t^-1 s")}};
    auto ball = std::make_shared<const Ball>(Ball::enumerate(g, n, 6));
    return std::make_shared<const BranchSets>(ball, fam);
}

AlgebraElement random_on(const GroupPtr& g, const std::vector<Element>& pool, std::mt19937_64& rng, int terms) {
    std::normal_distribution<double> coef;
    std::vector<std::pair<Element, Complex>> t;
    for (int i = 0; i < terms; ++i) t.emplace_back(pool[rng() % pool.size()], Complex(coef(rng), coef(rng)));
    return AlgebraElement::from_terms(g, t);
}

std::vector<Element> vertices(const Ball& b, const std::vector<std::size_t>& idx) {
    std::vector<Element> out;
    for (auto i : idx) out.push_back(b.vertex(i));
    return out;
}

} // namespace

TEST_CASE("apply on letter branches") {
    auto g = make_group(GroupSpec::free_group(2));
    auto sets = letter_sets(g, 4);
    auto T = make_transform(sets, Variant::H);
    CHECK(T.eps == std::vector<Complex>{1.0, -1.0, 1.0, -1.0});

    auto a = g->parse("a"), ai = g->parse("a^-1");
    auto x = AlgebraElement::from_terms(g, {{a, 1.0}, {ai, 1.0}});
    auto expect = AlgebraElement::from_terms(g, {{a, 1.0}, {ai, -1.0}});
    CHECK(max_deviation(apply(T, x), expect) == 0.0);
    CHECK(apply(T, AlgebraElement::atom(g, g->identity())).is_zero());

    // Elements beyond the materialized ball are classified on demand.
    auto far = AlgebraElement::atom(g, g->parse("b^-1 a^7"));
    CHECK(apply(T, far).coefficient(g->parse("b^-1 a^7")) == Complex(-1.0));
}

TEST_CASE("free Hilbert transform on the free group") {
    auto g = make_group(GroupSpec::free_group(2));
    const Complex I(0, 1);
    // -i on words starting with a positive letter, +i on a negative one.
    auto sets = letter_sets(g, 5, {-I, I, -I, I});
    auto T = make_transform(sets, Variant::CalH);
    const Ball& b = sets->ball();
    for (std::size_t v = 0; v < b.core_size(); ++v) {
        const Element& h = b.vertex(v);
        Complex expect = 0.0;
        if (!h.word.empty()) expect = letter_is_inverse(h.word[0]) ? I : -I;
        CHECK(multiplier(T, h) == expect);
    }
}

TEST_CASE("spec example on the free product") {
    auto g = make_group(GroupSpec::free_product_cyclic({4, 2}, {"t", "s"}));
    BranchFamily fam;
    fam.m = 1;
    fam.delta = 1;
    fam.branches = {{g->parse("t")}, {g->parse("t^-1")}, {g->parse("s")}};
    fam.epsilon = {{0.5, 0.25}, -1.0, {0.0, 1.0}};
    auto sets = std::make_shared<const BranchSets>(std::make_shared<const Ball>(Ball::enumerate(g, 4, 4)), fam);
    auto T = make_transform(sets, Variant::CalH);
    T.eps = fam.epsilon;
    auto ts = g->parse("t s"), s = g->parse("s");
    auto x = AlgebraElement::from_terms(g, {{ts, 1.0}, {s, 1.0}});
    auto expect = AlgebraElement::from_terms(g, {{ts, fam.epsilon[0]}, {s, fam.epsilon[2]}});
    CHECK(max_deviation(apply(T, x), expect) == 0.0);
}

TEST_CASE("adjoint identity") {
    auto g = make_group(GroupSpec::free_group(2));
    const Complex I(0, 1);
    auto sets = letter_sets(g, 4, {{0.6, 0.8}, -I, 1.0, {-0.3, 0.1}});
    const Ball& b = sets->ball();
    std::vector<Element> pool;
    for (std::size_t v = 0; v < b.core_size(); ++v) pool.push_back(b.vertex(v));
    std::mt19937_64 rng(11);
    for (Variant v : {Variant::H, Variant::CalH, Variant::HThick, Variant::HDelta}) {
        auto T = make_transform(sets, v);
        T.eps = sets->family().epsilon;
        for (int i = 0; i < 50; ++i) CHECK(adjoint_identity_deviation(T, random_on(g, pool, rng, 12)) < 1e-12);
        for (const auto& h : pool) CHECK(adjoint_identity_deviation(T, AlgebraElement::atom(g, h, {2.0, -1.0})) == 0.0);
    }
    // Self-adjoint with real signs: both sides coincide termwise.
    auto T = make_transform(sets, Variant::CalH);
    auto ab = g->parse("a b");
    auto x = AlgebraElement::from_terms(g, {{ab, 1.0}, {g->invert(ab), 1.0}});
    CHECK(max_deviation(apply(T, x).adjoint(), apply(T.with(Variant::CalH, Direction::Circ), x)) == 0.0);
}

TEST_CASE("calH equals H_thick on the union of branches") {
    auto g = make_group(GroupSpec::free_group(2));
    auto sets = letter_sets(g, 5);
    auto T = make_transform(sets, Variant::CalH);
    const Ball& b = sets->ball();
    for (std::size_t v = 1; v < b.core_size(); ++v)
        CHECK(calh_thick_deviation(T, AlgebraElement::atom(g, b.vertex(v))) == 0.0);
    CHECK(calh_thick_deviation(T, AlgebraElement(g)) == 0.0);
    CHECK_THROWS_AS(calh_thick_deviation(T, AlgebraElement::atom(g, g->identity())), InvalidInput);

    auto h = make_group(GroupSpec::free_product_cyclic({4, 2}, {"t", "s"}));
    auto fs = fpc_sets(h, 5);
    auto F = make_transform(fs, Variant::CalH);
    auto pool = vertices(fs->ball(), fs->union_members(SetKind::CalL));
    REQUIRE(!pool.empty());
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        auto x = random_on(h, pool, rng, 8);
        CHECK(calh_thick_deviation(F, x) < 1e-12);
        const double n_cal = lp_even_norm(apply(F, x), 2);
        const double n_thick = lp_even_norm(apply(F.with(Variant::HThick, Direction::Forward), x), 2);
        CHECK(std::abs(n_cal - n_thick) <= 1e-9 * n_cal);
    }
    CHECK_THROWS_AS(calh_thick_deviation(F, AlgebraElement::atom(h, h->parse("t"))), InvalidInput);
}

TEST_CASE("projection algebra on disjoint branches") {
    auto g = make_group(GroupSpec::free_group(2));
    auto sets = letter_sets(g, 4, {{0.6, 0.8}, {0.0, -1.0}, 0.5, {-0.3, 0.1}});
    auto T = make_transform(sets, Variant::CalH);
    T.eps = sets->family().epsilon;
    const Ball& b = sets->ball();
    std::vector<Element> pool;
    for (std::size_t v = 0; v < b.core_size(); ++v) pool.push_back(b.vertex(v));
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i) {
        auto x = random_on(g, pool, rng, 15);
        AlgebraElement squared(g);
        for (std::size_t k = 0; k < T.eps.size(); ++k)
            squared = squared + x.project([&](const Element& h) { return sets->contains(k, SetKind::CalL, h); })
                                    .scaled(T.eps[k] * T.eps[k]);
        CHECK(max_deviation(apply(T, apply(T, x)), squared) < 1e-12);
        CHECK(apply(T, x).l2_norm() <= x.l2_norm() * (1 + 1e-12));
    }
}

TEST_CASE("radius too small") {
    auto g = make_group(GroupSpec::dehn({"a", "b", "c", "d"}, {"a b a^-1 b^-1 c d c^-1 d^-1"}));
    BranchFamily fam;
    fam.m = 1;
    fam.delta = 1;
    fam.branches = {{g->parse("a")}};
    auto sets = std::make_shared<const BranchSets>(std::make_shared<const Ball>(Ball::enumerate(g, 2, 1)), fam);
    auto T = make_transform(sets, Variant::CalH);
    auto far = g->parse("a b a b a");
    try {
        apply(T, AlgebraElement::atom(g, far));
        FAIL("expected Uncertified");
    } catch (const Uncertified& e) {
        const std::string msg = e.what();
        CHECK(msg.find("radius too small") != std::string::npos);
        CHECK(msg.find(g->format(far)) != std::string::npos);
    }
}

TEST_CASE("certified constant") {
    auto g = make_group(GroupSpec::free_group(2));
    auto c = certified_constant(g, 1, 1.0);
    CHECK(c.reach == 3);
    CHECK(c.ball_count == 53);
    CHECK(std::abs(c.value - (1 + std::sqrt(2 + std::sqrt(53.0)))) < 1e-12);
    CHECK(std::abs(c.value - 4.0463) < 1e-4);
    CHECK(c.derivation.find("53") != std::string::npos);

    auto tiny = certified_constant(g, 0, 1e-9);
    CHECK(tiny.ball_count == 1);
    CHECK(std::abs(tiny.value - (1 + std::sqrt(3.0))) < 1e-12);

    double prev = 0;
    for (double d : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        auto cc = certified_constant(g, 1, d);
        CHECK(cc.value >= prev);
        prev = cc.value;
    }
    CHECK_THROWS_AS(certified_constant(g, -1, 1.0), InvalidInput);
}
