#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "hypbranch/ball.hpp"
#include "hypbranch/geodesic.hpp"

namespace hypbranch {

using Complex = std::complex<double>;

// Branches A_i inside the closed ball of radius m, the hyperbolicity
// constant δ used for thickenings, and the signs ε_i.
struct BranchFamily {
    int m = 1;
    std::vector<std::vector<Element>> branches;
    double delta = 1.0;
    std::vector<Complex> epsilon;

    std::size_t size() const { return branches.size(); }
    // Checks |a| <= m for every branch point, |ε_i| <= 1 and δ > 0.
    void validate(const Ball& ball) const;
    // Alternating +1, -1, ... when no signs were given.
    std::vector<Complex> signs() const;
};

// Element sets attached to a branch A. Thickened kinds take a multiple r of δ:
//   L        every geodesic from o meets A
//   CalL     some geodesic from o meets A
//   LBall    L^{rδ}_A: for some a in A every geodesic meets B_{rδ}(a)
//   LThick   L_{A^{rδ}}: every geodesic meets the thickened set A^{rδ}
//   CalLThick  𝓛_{A^{rδ}}
// Multiple 0 means A itself (and B_0(a) = {a}).
enum class SetKind : std::uint8_t { L, CalL, LBall, LThick, CalLThick };

class BranchSets;

// Membership bits of one element across all branches and set kinds.
class Membership {
public:
    Membership() = default;
    explicit Membership(std::vector<std::uint32_t> bits) : bits_(std::move(bits)) {}

    bool has(std::size_t branch, SetKind kind, std::size_t level_slot = 0) const {
        return (bits_[branch] >> bit_index(kind, level_slot)) & 1u;
    }
    std::uint32_t raw(std::size_t branch) const { return bits_[branch]; }

    static unsigned bit_index(SetKind kind, std::size_t level_slot) {
        switch (kind) {
        case SetKind::L: return 0;
        case SetKind::CalL: return 1;
        case SetKind::LBall: return static_cast<unsigned>(2 + 3 * level_slot);
        case SetKind::LThick: return static_cast<unsigned>(3 + 3 * level_slot);
        case SetKind::CalLThick: return static_cast<unsigned>(4 + 3 * level_slot);
        }
        return 0;
    }

private:
    std::vector<std::uint32_t> bits_;
};

struct ChainViolation {
    std::size_t vertex;
    std::size_t branch;
    // 0: L ⊄ 𝓛, 1: 𝓛 ⊄ L^δ, 2: L^δ ⊄ L_{A^δ}
    int inclusion;
};

// Branch sets materialized for every ball vertex with |g| <= radius, with
// on-demand classification of other elements whose geodesics are certified.
class BranchSets {
public:
    static constexpr std::size_t kMaxLevels = 9;

    BranchSets(std::shared_ptr<const Ball> ball, BranchFamily family, std::vector<int> thickenings = {});

    const Ball& ball() const { return *ball_; }
    const std::shared_ptr<const Ball>& ball_ptr() const { return ball_; }
    const BranchFamily& family() const { return family_; }
    std::size_t branch_count() const { return family_.size(); }
    const std::vector<int>& levels() const { return levels_; }
    std::size_t level_slot(int multiple) const;

    Membership classify(const Element& g) const;
    // Core vertices read the materialized bits; other elements are
    // classified once and memoized.
    Membership lookup(const Element& g) const;
    // Classifies the given elements in parallel and memoizes them. Elements
    // that cannot be certified are skipped and left for lookup to report.
    void prefetch(const std::vector<Element>& elements) const;
    Membership at(std::size_t vertex) const;

    bool contains(std::size_t branch, SetKind kind, const Element& g, int multiple = 1) const;

    // Core vertex indices (|g| <= radius) of one branch set, ascending.
    std::vector<std::size_t> members(std::size_t branch, SetKind kind, int multiple = 1) const;
    // Core vertices in some 𝓛_{A_i^{rδ}} (r = 0: some 𝓛_{A_i}).
    std::vector<std::size_t> union_members(SetKind kind, int multiple = 1) const;
    // Core vertices outside every 𝓛_i, optionally restricted to |g| <= r.
    std::size_t complement_size(int within_radius = -1) const;

    std::size_t chain_checked() const { return chain_checked_; }
    const std::vector<ChainViolation>& chain_violations() const { return chain_violations_; }
    std::size_t chain_violation_count() const { return chain_violation_count_; }

private:
    std::vector<std::uint32_t> classify_bits(const GeodesicDag& dag) const;

    std::shared_ptr<const Ball> ball_;
    BranchFamily family_;
    std::vector<int> levels_;
    std::vector<int> reach_;
    int max_reach_ = 0;
    std::vector<std::vector<int>> branch_lengths_;
    std::vector<std::uint32_t> core_bits_;
    std::size_t chain_checked_ = 0;
    std::size_t chain_violation_count_ = 0;
    std::vector<ChainViolation> chain_violations_;

    static constexpr std::size_t kMemoCap = 8'000'000;
    mutable std::shared_mutex memo_mutex_;
    mutable std::unordered_map<std::string, std::vector<std::uint32_t>> memo_;
};

struct DisjointnessReport {
    int level = 1;
    struct Overlap {
        std::size_t i;
        std::size_t j;
        std::vector<std::size_t> vertices;
    };
    std::vector<Overlap> overlaps;
    // dist(A_i, A_j); diagonal is 0.
    std::vector<std::vector<int>> branch_distance;
    // dist(A_i, A_j) >= 4δ for all i != j.
    bool separation_condition = true;
    bool disjoint() const { return overlaps.empty(); }
};

// Pairwise intersections of L^{rδ}_{A_i} over the materialized vertices.
DisjointnessReport check_branch_disjointness(const BranchSets& sets, int multiple = 1);

} // namespace hypbranch
