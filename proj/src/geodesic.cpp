#include "hypbranch/geodesic.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "hypbranch/errors.hpp"

namespace hypbranch {

int strict_ball_reach(double r) {
    if (!(r > 0)) return -1;
    return static_cast<int>(std::ceil(r)) - 1;
}

std::optional<std::size_t> GeodesicDag::find(const Element& g) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i] == g) return i;
    return std::nullopt;
}

GeodesicDag geodesic_dag(const Ball& ball, const Element& x) {
    const Group& group = ball.group();
    auto len = ball.length(x);
    if (!len)
        throw Uncertified("length unknown at this radius: " + group.format(x) + " lies outside the working ball");
    const int top = *len;

    std::vector<std::vector<Element>> by_level(static_cast<std::size_t>(top) + 1);
    std::unordered_map<std::string, char> seen;
    by_level[static_cast<std::size_t>(top)].push_back(x);
    seen.emplace(x.word, 1);
    for (int k = top; k > 0; --k) {
        for (const Element& y : by_level[static_cast<std::size_t>(k)]) {
            for (Letter l : group.cayley_letters()) {
                auto z = ball.step(y, l);
                if (!z) continue;
                auto lz = ball.length(*z);
                if (!lz || *lz != k - 1) continue;
                if (seen.emplace(z->word, 1).second) by_level[static_cast<std::size_t>(k - 1)].push_back(std::move(*z));
            }
        }
    }

    GeodesicDag dag;
    dag.target = x;
    std::unordered_map<std::string, std::uint32_t> index;
    for (int k = 0; k <= top; ++k) {
        auto& layer = by_level[static_cast<std::size_t>(k)];
        std::sort(layer.begin(), layer.end(), [](const Element& a, const Element& b) { return shortlex_less(a, b); });
        for (auto& e : layer) {
            index.emplace(e.word, static_cast<std::uint32_t>(dag.nodes.size()));
            dag.nodes.push_back(std::move(e));
            dag.level.push_back(k);
        }
    }
    dag.successors.resize(dag.nodes.size());
    for (std::size_t i = 0; i < dag.nodes.size(); ++i) {
        if (dag.level[i] == top) continue;
        for (Letter l : group.cayley_letters()) {
            auto z = ball.step(dag.nodes[i], l);
            if (!z) continue;
            auto it = index.find(z->word);
            if (it == index.end() || dag.level[it->second] != dag.level[i] + 1) continue;
            auto& succ = dag.successors[i];
            if (std::find(succ.begin(), succ.end(), it->second) == succ.end()) succ.push_back(it->second);
        }
        std::sort(dag.successors[i].begin(), dag.successors[i].end());
    }
    return dag;
}

double count_geodesics(const GeodesicDag& dag) {
    std::vector<double> paths(dag.size(), 0.0);
    paths[0] = 1.0;
    for (std::size_t i = 0; i < dag.size(); ++i)
        for (auto s : dag.successors[i]) paths[s] += paths[i];
    return paths.back();
}

namespace {
std::vector<char> mark_members(const GeodesicDag& dag, std::span<const Element> set) {
    std::vector<char> marked(dag.size(), 0);
    for (std::size_t i = 0; i < dag.size(); ++i)
        marked[i] = std::find(set.begin(), set.end(), dag.nodes[i]) != set.end();
    return marked;
}
} // namespace

bool some_geodesic_through(const GeodesicDag& dag, std::span<const Element> set) {
    auto marked = mark_members(dag, set);
    return some_geodesic_through(dag, [&](std::size_t i) { return marked[i] != 0; });
}

bool every_geodesic_through(const GeodesicDag& dag, std::span<const Element> set) {
    auto marked = mark_members(dag, set);
    return every_geodesic_through(dag, [&](std::size_t i) { return marked[i] != 0; });
}

bool every_geodesic_through_ball(const Ball& ball, const GeodesicDag& dag, const Element& a, double r) {
    const int reach = strict_ball_reach(r);
    std::vector<char> marked(dag.size(), 0);
    if (reach >= 0) {
        auto la = ball.length(a);
        for (std::size_t i = 0; i < dag.size(); ++i) {
            if (la && std::abs(dag.level[i] - *la) > reach) continue;
            auto d = ball.exact_distance(dag.nodes[i], a);
            if (!d)
                throw Uncertified("distance from " + ball.group().format(dag.nodes[i]) + " to " +
                                  ball.group().format(a) + " is not certified; increase margin");
            marked[i] = *d <= reach;
        }
    }
    return every_geodesic_through(dag, [&](std::size_t i) { return marked[i] != 0; });
}

std::optional<int> widest_distance(const Ball& ball, const GeodesicDag& dag, const Element& p) {
    const std::size_t n = dag.size();
    std::vector<int> w(n), best(n, INT_MIN);
    for (std::size_t i = 0; i < n; ++i) {
        auto d = ball.exact_distance(p, dag.nodes[i]);
        if (!d) return std::nullopt;
        w[i] = *d;
    }
    best[0] = w[0];
    for (std::size_t i = 0; i < n; ++i) {
        if (best[i] == INT_MIN) continue;
        for (auto s : dag.successors[i]) best[s] = std::max(best[s], std::min(best[i], w[s]));
    }
    return best[n - 1];
}

} // namespace hypbranch
