#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <random>

#include "hypbranch/algebra.hpp"
#include "hypbranch/errors.hpp"

using namespace hypbranch;

namespace {

GroupPtr f2() { return make_group(GroupSpec::free_group(2)); }

AlgebraElement atoms(const GroupPtr& g, std::initializer_list<std::pair<const char*, Complex>> list) {
    std::vector<std::pair<Element, Complex>> t;
    for (const auto& [w, c] : list) t.emplace_back(g->parse(w), c);
    return AlgebraElement::from_terms(g, t);
}

AlgebraElement random_element(const GroupPtr& g, std::mt19937_64& rng, int terms, int max_len) {
    std::uniform_int_distribution<int> len(0, max_len), gen(0, g->generator_count() - 1);
    std::normal_distribution<double> coef;
    std::vector<std::pair<Element, Complex>> t;
    for (int i = 0; i < terms; ++i) {
        std::string raw;
        for (int n = len(rng); n > 0; --n) raw.push_back(make_letter(gen(rng), rng() & 1));
        t.emplace_back(g->normalize(raw), Complex(coef(rng), coef(rng)));
    }
    return AlgebraElement::from_terms(g, t);
}

// Closed walks of length n on the 2r-regular tree: words in r free letters
// that reduce to the empty word, counted by brute force.
long closed_walks(int r, int n) {
    long count = 0;
    const long total = static_cast<long>(std::pow(2 * r, n));
    for (long code = 0; code < total; ++code) {
        std::string stack;
        long c = code;
        for (int i = 0; i < n; ++i) {
            char l = static_cast<char>(c % (2 * r));
            c /= 2 * r;
            if (!stack.empty() && stack.back() == (l ^ 1))
                stack.pop_back();
            else
                stack.push_back(l);
        }
        if (stack.empty()) ++count;
    }
    return count;
}

// ±1 sequences of length n summing to zero.
long balanced_sequences(int n) {
    long count = 0;
    for (long bits = 0; bits < (1L << n); ++bits) count += __builtin_popcountl(static_cast<unsigned long>(bits)) * 2 == n;
    return count;
}

} // namespace

TEST_CASE("convolution basics") {
    auto g = f2();
    auto a = AlgebraElement::atom(g, g->parse("a"));
    auto ai = AlgebraElement::atom(g, g->parse("a^-1"));
    auto e = AlgebraElement::atom(g, g->identity());
    auto prod = convolve(a, ai);
    REQUIRE(prod.support_size() == 1);
    CHECK(prod.trace() == Complex(1.0));

    auto x = atoms(g, {{"a", 1.0}, {"b", 1.0}});
    auto xx = convolve(x.adjoint(), x);
    auto expect = atoms(g, {{"e", 2.0}, {"a^-1 b", 1.0}, {"b^-1 a", 1.0}});
    CHECK(max_deviation(xx, expect) == 0.0);
    CHECK(max_deviation(convolve(x, e), x) == 0.0);

    auto z = atoms(g, {{"a", {2.0, 1.0}}});
    auto zs = z.adjoint();
    CHECK(zs.coefficient(g->parse("a^-1")) == Complex(2.0, -1.0));
    CHECK(zs.support_size() == 1);
    CHECK((x - x).is_zero());
    CHECK_THROWS_AS(convolve(x, x, 3), CapExceeded);
}

TEST_CASE("trace and moments") {
    auto g = f2();
    CHECK(AlgebraElement::atom(g, g->identity()).trace() == Complex(1.0));
    auto a = g->parse("a"), b = g->parse("b");
    CHECK(convolve(AlgebraElement::atom(g, a), AlgebraElement::atom(g, g->invert(a))).trace() == Complex(1.0));
    CHECK(convolve(AlgebraElement::atom(g, a), AlgebraElement::atom(g, b)).trace() == Complex(0.0));

    auto x = atoms(g, {{"a", 1.0}, {"a^-1", 1.0}});
    auto x2 = convolve(x, x);
    auto x4 = convolve(x2, x2);
    CHECK(std::abs(x4.trace() - Complex(static_cast<double>(balanced_sequences(4)))) < 1e-12);
    CHECK(std::abs(lp_even_norm(x, 2) - std::pow(6.0, 0.25)) < 1e-12);

    auto s = atoms(g, {{"a", 1.0}, {"a^-1", 1.0}, {"b", 1.0}, {"b^-1", 1.0}});
    for (int k = 1; k <= 4; ++k) {
        const double walks = static_cast<double>(closed_walks(2, 2 * k));
        CHECK(std::abs(std::pow(lp_even_norm(s, k), 2 * k) - walks) < 1e-9 * walks);
    }

    for (const char* w : {"e", "a", "ab^-1a"})
        for (int k : {1, 2, 4}) CHECK(std::abs(lp_even_norm(AlgebraElement::atom(g, g->parse(w)), k) - 1.0) < 1e-15);
    CHECK(std::abs(lp_even_norm(AlgebraElement::atom(g, g->identity(), {3.0, 4.0}), 3) - 5.0) < 1e-12);
}

TEST_CASE("norm identities on random elements") {
    auto g = f2();
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        auto x = random_element(g, rng, 6, 4);
        auto y = random_element(g, rng, 6, 4);
        const double n2 = x.l2_norm();
        CHECK(std::abs(convolve(x.adjoint(), x).trace().real() - n2 * n2) < 1e-9 * (1 + n2 * n2));
        CHECK(std::abs(lp_even_norm(x, 1) - n2) < 1e-9 * (1 + n2));
        const double n4 = lp_even_norm(x, 2), n8 = lp_even_norm(x, 4);
        CHECK(n2 <= n4 * (1 + 1e-9));
        CHECK(n4 <= n8 * (1 + 1e-9));
        CHECK(convolve(x, y).l2_norm() <= n4 * lp_even_norm(y, 2) * (1 + 1e-9));
        CHECK(std::abs(convolve(x, y).trace() - convolve(y, x).trace()) < 1e-12 * (1 + n2 * y.l2_norm()));
        CHECK(std::abs(trace_of_product(x, y) - convolve(x, y).trace()) < 1e-12 * (1 + n2 * y.l2_norm()));
        CHECK(max_deviation(x.adjoint().adjoint(), x) == 0.0);
        auto z = random_element(g, rng, 3, 3);
        CHECK(max_deviation(convolve(convolve(x, y), z), convolve(x, convolve(y, z))) < 1e-12 * (1 + n2 * 50));

        // Naive (x* x)^3 against the shortcut used for odd k.
        auto xx = convolve(x.adjoint(), x);
        const double m6 = convolve(convolve(xx, xx), xx).trace().real();
        CHECK(std::abs(std::pow(lp_even_norm(x, 3), 6) - m6) < 1e-9 * (1 + m6));
    }
}

TEST_CASE("projections") {
    auto g = f2();
    auto x = atoms(g, {{"a", 1.0}, {"b", 1.0}, {"a b", 2.0}});
    auto starts_a = [&](const Element& e) { return !e.word.empty() && e.word[0] == g->parse("a").word[0]; };
    auto p = x.project(starts_a);
    CHECK(max_deviation(p, atoms(g, {{"a", 1.0}, {"a b", 2.0}})) == 0.0);
    CHECK(max_deviation(p.project(starts_a), p) == 0.0);
    CHECK(x.project([](const Element&) { return false; }).is_zero());
    CHECK(max_deviation(x.project([](const Element&) { return true; }), x) == 0.0);
    CHECK(p.l2_norm() <= x.l2_norm());
    // Σ_{g ∈ E} |c_g|^2 <= |E| max |c_g|^2.
    CHECK(p.l2_norm() * p.l2_norm() <= 2 * x.max_abs() * x.max_abs());
}

TEST_CASE("serialization round trip") {
    auto g = make_group(GroupSpec::free_product_cyclic({4, 2}, {"t", "s"}));
    auto x = AlgebraElement::from_terms(g, {{g->parse("t^2 s t^-1"), {0.1, -3.25}}, {g->parse("s"), {1e-17, 2.0}}});
    auto y = AlgebraElement::from_triples(g, x.to_triples());
    CHECK(max_deviation(x, y) == 0.0);
    CHECK(x.to_triples() == y.to_triples());
}

TEST_CASE("convolution does not depend on the worker count") {
    auto g = f2();
    std::mt19937_64 rng(9);
    auto x = random_element(g, rng, 300, 6);
    auto y = random_element(g, rng, 200, 6);
    setenv("HYPBRANCH_WORKERS", "1", 1);
    auto one = convolve(x, y);
    setenv("HYPBRANCH_WORKERS", "4", 1);
    auto four = convolve(x, y);
    unsetenv("HYPBRANCH_WORKERS");
    CHECK(one.to_triples() == four.to_triples());
}

TEST_CASE("spectral estimator") {
    auto g = f2();
    std::mt19937_64 rng(4);
    auto x = random_element(g, rng, 5, 2);
    auto p2 = spectral_lp_estimate(x, 2.0, 4);
    CHECK(std::abs(p2.value - x.l2_norm()) < 1e-9);

    auto h = atoms(g, {{"a", 1.0}, {"a^-1", 1.0}});
    auto p4 = spectral_lp_estimate(h, 4.0, 8);
    CHECK(std::abs(p4.value / std::pow(6.0, 0.25) - 1) < 0.02);
    CHECK(p4.dimension == 13121);

    auto e = AlgebraElement::atom(g, g->identity());
    for (double p : {1.5, 3.0, 7.0}) {
        CHECK(std::abs(spectral_lp_estimate(e, p, 3).value - 1) < 1e-12);
        SpectralOptions dense;
        dense.mode = SpectralMode::Normalized;
        CHECK(std::abs(spectral_lp_estimate(e, p, 2, dense).value - 1) < 1e-12);
    }

    // Non-dyadic p sits between the neighbouring dyadic norms.
    auto s = atoms(g, {{"a", 1.0}, {"a^-1", 1.0}, {"b", 1.0}, {"b^-1", 1.0}});
    auto p3 = spectral_lp_estimate(s, 3.0, 7);
    CHECK(p3.value >= lp_even_norm(s, 1) - 1e-9);
    CHECK(p3.value <= lp_even_norm(s, 2) + 1e-9);
    CHECK(std::abs(p3.value - p3.previous_radius_value) < 0.05);
}
