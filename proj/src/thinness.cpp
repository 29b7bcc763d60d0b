#include "hypbranch/thinness.hpp"

#include <algorithm>
#include <array>
#include <random>

#include "hypbranch/errors.hpp"
#include "hypbranch/geodesic.hpp"
#include "hypbranch/parallel.hpp"

namespace hypbranch {

namespace {

struct Side {
    std::vector<Element> nodes;
    GeodesicDag dag;
};

struct TriangleResult {
    int defect = -1;
    int side = -1;
    Element p;
};

std::optional<Side> make_side(const Ball& ball, const Element& from, const Element& to) {
    auto inv = ball.invert(from);
    if (!inv) return std::nullopt;
    auto rel = ball.multiply(*inv, to);
    if (!rel || !ball.length(*rel)) return std::nullopt;
    Side s;
    s.dag = geodesic_dag(ball, *rel);
    for (const auto& node : s.dag.nodes) {
        auto moved = ball.multiply(from, node);
        if (!moved) return std::nullopt;
        s.nodes.push_back(std::move(*moved));
    }
    // Distances are measured on the translated side.
    s.dag.nodes = s.nodes;
    return s;
}

std::optional<TriangleResult> triangle_defect(const Ball& ball, const Element& y, const Element& z) {
    const Element o = ball.group().identity();
    std::array<std::optional<Side>, 3> sides{make_side(ball, o, y), make_side(ball, o, z), make_side(ball, y, z)};
    for (const auto& s : sides)
        if (!s) return std::nullopt;
    TriangleResult out;
    for (int k = 0; k < 3; ++k) {
        const Side& here = *sides[static_cast<std::size_t>(k)];
        const Side& a = *sides[static_cast<std::size_t>((k + 1) % 3)];
        const Side& b = *sides[static_cast<std::size_t>((k + 2) % 3)];
        for (const auto& p : here.nodes) {
            auto wa = widest_distance(ball, a.dag, p);
            auto wb = widest_distance(ball, b.dag, p);
            if (!wa || !wb) return std::nullopt;
            const int d = std::min(*wa, *wb);
            if (d > out.defect) {
                out.defect = d;
                out.side = k;
                out.p = p;
            }
        }
    }
    return out;
}

} // namespace

DeltaEstimate estimate_delta(const Ball& ball, const DeltaOptions& options) {
    DeltaEstimate est;
    est.exhaustive = options.exhaustive;
    est.radius = options.radius < 0 ? ball.radius() : options.radius;
    if (est.radius > ball.working_radius())
        throw InvalidInput("triangle radius " + std::to_string(est.radius) + " exceeds the working radius " +
                           std::to_string(ball.working_radius()));
    const std::size_t n = ball.count_within(est.radius);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    if (options.exhaustive) {
        const std::size_t total = n * (n - 1) / 2;
        if (total > options.triangle_cap)
            throw CapExceeded("exhaustive thinness check needs " + std::to_string(total) + " triangles (cap " +
                              std::to_string(options.triangle_cap) + "); use sampled mode");
        pairs.reserve(total);
        for (std::size_t i = 1; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    } else {
        std::mt19937_64 rng(options.seed);
        for (std::size_t k = 0; k < options.samples && n > 1; ++k) {
            std::size_t i = rng() % n, j = rng() % n;
            pairs.emplace_back(std::min(i, j), std::max(i, j));
        }
    }

    std::vector<std::optional<TriangleResult>> results(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t k) {
        results[k] = triangle_defect(ball, ball.vertex(pairs[k].first), ball.vertex(pairs[k].second));
    });

    for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (!results[k]) {
            ++est.uncertified;
            continue;
        }
        ++est.triangles;
        if (est.witness_side < 0 || results[k]->defect > est.value) {
            est.value = results[k]->defect;
            est.witness_y = ball.vertex(pairs[k].first);
            est.witness_z = ball.vertex(pairs[k].second);
            est.witness_side = results[k]->side;
            est.witness_p = results[k]->p;
        }
    }
    return est;
}

} // namespace hypbranch
