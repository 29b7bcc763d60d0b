#pragma once

#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hypbranch/ball.hpp"

namespace hypbranch {

// Every vertex lying on some geodesic from the identity o to target, graded
// by distance from o. Node 0 is o and the last node is the target.
struct GeodesicDag {
    Element target;
    std::vector<Element> nodes;
    std::vector<int> level;
    std::vector<std::vector<std::uint32_t>> successors;

    std::size_t size() const { return nodes.size(); }
    std::size_t target_node() const { return nodes.size() - 1; }
    std::optional<std::size_t> find(const Element& g) const;
};

// Throws Uncertified when the geodesic structure of x is not determined by
// the ball (Dehn presentations beyond the working radius).
GeodesicDag geodesic_dag(const Ball& ball, const Element& x);

// Number of distinct geodesics from o to the target.
double count_geodesics(const GeodesicDag& dag);

// x ≳ A: some geodesic from o to x meets the marked nodes.
template <class NodePredicate>
    requires std::predicate<NodePredicate&, std::size_t>
bool some_geodesic_through(const GeodesicDag& dag, NodePredicate&& marked) {
    for (std::size_t i = 0; i < dag.size(); ++i)
        if (marked(i)) return true;
    return false;
}

// x ≥ A: every geodesic from o to x meets the marked nodes, i.e. the target
// is unreachable from o once marked nodes are deleted.
template <class NodePredicate>
    requires std::predicate<NodePredicate&, std::size_t>
bool every_geodesic_through(const GeodesicDag& dag, NodePredicate&& marked) {
    const std::size_t n = dag.size();
    if (marked(0) || marked(n - 1)) return true;
    if (n == 1) return false;
    std::vector<char> reach(n, 0);
    reach[0] = 1;
    // Nodes are sorted by level, so one forward sweep suffices.
    for (std::size_t i = 0; i < n; ++i) {
        if (!reach[i]) continue;
        for (auto s : dag.successors[i])
            if (!reach[s] && !marked(s)) reach[s] = 1;
    }
    return !reach[n - 1];
}

bool some_geodesic_through(const GeodesicDag& dag, std::span<const Element> set);
bool every_geodesic_through(const GeodesicDag& dag, std::span<const Element> set);

// x ≥ B_r(a) with the strict ball B_r(a) = {y : d(y, a) < r}.
bool every_geodesic_through_ball(const Ball& ball, const GeodesicDag& dag, const Element& a, double r);

// Largest integer distance strictly below r, or -1 when B_r is empty.
int strict_ball_reach(double r);

// Largest over geodesics of the smallest distance from p to a vertex on the
// geodesic. Every geodesic meets B_r(p) iff the value is at most
// strict_ball_reach(r). nullopt when some distance is not certified.
std::optional<int> widest_distance(const Ball& ball, const GeodesicDag& dag, const Element& p);

} // namespace hypbranch
