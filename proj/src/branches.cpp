#include "hypbranch/branches.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <optional>

#include "hypbranch/errors.hpp"
#include "hypbranch/parallel.hpp"

namespace hypbranch {

namespace {
constexpr std::size_t kMaxStoredWitnesses = 100;
constexpr int kFar = INT_MAX / 4;
} // namespace

void BranchFamily::validate(const Ball& ball) const {
    if (!(delta > 0) || !std::isfinite(delta))
        throw InvalidInput("delta must be a positive real, got " + std::to_string(delta));
    if (m < 0) throw InvalidInput("m must be >= 0, got " + std::to_string(m));
    for (std::size_t i = 0; i < branches.size(); ++i) {
        for (const auto& a : branches[i]) {
            auto len = ball.length(a);
            if (!len) throw Uncertified("branch point " + ball.group().format(a) + " lies outside the ball");
            if (*len > m)
                throw InvalidInput("branch " + std::to_string(i) + " point " + ball.group().format(a) + " has length " +
                                   std::to_string(*len) + " > m = " + std::to_string(m));
        }
    }
    if (!epsilon.empty() && epsilon.size() != branches.size())
        throw InvalidInput("epsilon has " + std::to_string(epsilon.size()) + " entries for " +
                           std::to_string(branches.size()) + " branches");
    for (std::size_t i = 0; i < epsilon.size(); ++i)
        if (std::abs(epsilon[i]) > 1.0 + 1e-12)
            throw InvalidInput("epsilon[" + std::to_string(i) + "] has modulus " + std::to_string(std::abs(epsilon[i])) +
                               " > 1");
}

std::vector<Complex> BranchFamily::signs() const {
    if (!epsilon.empty()) return epsilon;
    std::vector<Complex> out;
    for (std::size_t i = 0; i < branches.size(); ++i) out.emplace_back(i % 2 == 0 ? 1.0 : -1.0, 0.0);
    return out;
}

BranchSets::BranchSets(std::shared_ptr<const Ball> ball, BranchFamily family, std::vector<int> thickenings)
    : ball_(std::move(ball)), family_(std::move(family)) {
    family_.validate(*ball_);
    thickenings.push_back(1);
    for (int r : thickenings)
        if (r < 0) throw InvalidInput("thickening multiples must be >= 0, got " + std::to_string(r));
    std::sort(thickenings.begin(), thickenings.end());
    thickenings.erase(std::unique(thickenings.begin(), thickenings.end()), thickenings.end());
    if (thickenings.size() > kMaxLevels)
        throw InvalidInput("at most " + std::to_string(kMaxLevels) + " thickening levels are supported");
    levels_ = thickenings;
    for (int r : levels_) {
        reach_.push_back(r == 0 ? 0 : strict_ball_reach(r * family_.delta));
        max_reach_ = std::max(max_reach_, reach_.back());
    }
    for (const auto& branch : family_.branches) {
        std::vector<int> lens;
        for (const auto& a : branch) lens.push_back(*ball_->length(a));
        branch_lengths_.push_back(std::move(lens));
    }

    const std::size_t core = ball_->core_size();
    const std::size_t nb = family_.size();
    core_bits_.assign(core * nb, 0);
    parallel_for(core, [&](std::size_t v) {
        auto bits = classify_bits(geodesic_dag(*ball_, ball_->vertex(v)));
        std::copy(bits.begin(), bits.end(), core_bits_.begin() + static_cast<std::ptrdiff_t>(v * nb));
    });

    const std::size_t slot = level_slot(1);
    for (std::size_t v = 0; v < core; ++v) {
        Membership mem = at(v);
        for (std::size_t i = 0; i < nb; ++i) {
            ++chain_checked_;
            const bool l = mem.has(i, SetKind::L), cl = mem.has(i, SetKind::CalL);
            const bool ld = mem.has(i, SetKind::LBall, slot), lt = mem.has(i, SetKind::LThick, slot);
            int broken = -1;
            if (l && !cl)
                broken = 0;
            else if (cl && !ld)
                broken = 1;
            else if (ld && !lt)
                broken = 2;
            if (broken >= 0) {
                ++chain_violation_count_;
                if (chain_violations_.size() < kMaxStoredWitnesses) chain_violations_.push_back({v, i, broken});
            }
        }
    }
}

std::size_t BranchSets::level_slot(int multiple) const {
    auto it = std::find(levels_.begin(), levels_.end(), multiple);
    if (it == levels_.end())
        throw InvalidInput("thickening multiple " + std::to_string(multiple) + " was not materialized");
    return static_cast<std::size_t>(it - levels_.begin());
}

std::vector<std::uint32_t> BranchSets::classify_bits(const GeodesicDag& dag) const {
    const Ball& ball = *ball_;
    const std::size_t n = dag.size();
    std::vector<std::uint32_t> out(family_.size(), 0);
    std::vector<int> dist;
    std::vector<int> nearest(n);
    std::vector<char> mark(n);
    for (std::size_t b = 0; b < family_.size(); ++b) {
        const auto& A = family_.branches[b];
        const auto& lens = branch_lengths_[b];
        const std::size_t na = A.size();
        dist.assign(n * na, kFar);
        std::fill(nearest.begin(), nearest.end(), kFar);
        for (std::size_t y = 0; y < n; ++y) {
            for (std::size_t k = 0; k < na; ++k) {
                if (std::abs(dag.level[y] - lens[k]) > max_reach_) continue;
                auto d = ball.exact_distance(dag.nodes[y], A[k]);
                if (!d)
                    throw Uncertified("distance from " + ball.group().format(dag.nodes[y]) + " to branch point " +
                                      ball.group().format(A[k]) + " is not certified; increase margin");
                dist[y * na + k] = *d;
                nearest[y] = std::min(nearest[y], *d);
            }
        }
        std::uint32_t bits = 0;
        auto marked = [&](std::size_t i) { return mark[i] != 0; };
        for (std::size_t y = 0; y < n; ++y) mark[y] = nearest[y] == 0;
        if (every_geodesic_through(dag, marked)) bits |= 1u << Membership::bit_index(SetKind::L, 0);
        if (some_geodesic_through(dag, marked)) bits |= 1u << Membership::bit_index(SetKind::CalL, 0);
        for (std::size_t j = 0; j < levels_.size(); ++j) {
            const int reach = reach_[j];
            for (std::size_t y = 0; y < n; ++y) mark[y] = nearest[y] <= reach;
            if (some_geodesic_through(dag, marked)) bits |= 1u << Membership::bit_index(SetKind::CalLThick, j);
            if (!every_geodesic_through(dag, marked)) continue;
            bits |= 1u << Membership::bit_index(SetKind::LThick, j);
            for (std::size_t k = 0; k < na; ++k) {
                for (std::size_t y = 0; y < n; ++y) mark[y] = dist[y * na + k] <= reach;
                if (every_geodesic_through(dag, marked)) {
                    bits |= 1u << Membership::bit_index(SetKind::LBall, j);
                    break;
                }
            }
        }
        out[b] = bits;
    }
    return out;
}

Membership BranchSets::classify(const Element& g) const { return Membership(classify_bits(geodesic_dag(*ball_, g))); }

Membership BranchSets::at(std::size_t vertex) const {
    const std::size_t nb = family_.size();
    auto first = core_bits_.begin() + static_cast<std::ptrdiff_t>(vertex * nb);
    return Membership(std::vector<std::uint32_t>(first, first + static_cast<std::ptrdiff_t>(nb)));
}

Membership BranchSets::lookup(const Element& g) const {
    if (auto i = ball_->find(g); i && *i < ball_->core_size()) return at(*i);
    {
        std::shared_lock lock(memo_mutex_);
        if (auto it = memo_.find(g.word); it != memo_.end()) return Membership(it->second);
    }
    auto bits = classify_bits(geodesic_dag(*ball_, g));
    std::unique_lock lock(memo_mutex_);
    if (memo_.size() < kMemoCap) memo_.emplace(g.word, bits);
    return Membership(std::move(bits));
}

void BranchSets::prefetch(const std::vector<Element>& elements) const {
    std::vector<const Element*> todo;
    {
        std::shared_lock lock(memo_mutex_);
        for (const auto& g : elements) {
            if (auto i = ball_->find(g); i && *i < ball_->core_size()) continue;
            if (!memo_.count(g.word)) todo.push_back(&g);
        }
    }
    std::vector<std::optional<std::vector<std::uint32_t>>> bits(todo.size());
    parallel_for(todo.size(), [&](std::size_t k) {
        try {
            bits[k] = classify_bits(geodesic_dag(*ball_, *todo[k]));
        } catch (const Uncertified&) {
        }
    });
    std::unique_lock lock(memo_mutex_);
    for (std::size_t k = 0; k < todo.size() && memo_.size() < kMemoCap; ++k)
        if (bits[k]) memo_.emplace(todo[k]->word, std::move(*bits[k]));
}

bool BranchSets::contains(std::size_t branch, SetKind kind, const Element& g, int multiple) const {
    return lookup(g).has(branch, kind, level_slot(multiple));
}

std::vector<std::size_t> BranchSets::members(std::size_t branch, SetKind kind, int multiple) const {
    const std::size_t slot = (kind == SetKind::L || kind == SetKind::CalL) ? 0 : level_slot(multiple);
    const std::uint32_t mask = 1u << Membership::bit_index(kind, slot);
    std::vector<std::size_t> out;
    const std::size_t nb = family_.size();
    for (std::size_t v = 0; v < ball_->core_size(); ++v)
        if (core_bits_[v * nb + branch] & mask) out.push_back(v);
    return out;
}

std::vector<std::size_t> BranchSets::union_members(SetKind kind, int multiple) const {
    const std::size_t slot = (kind == SetKind::L || kind == SetKind::CalL) ? 0 : level_slot(multiple);
    const std::uint32_t mask = 1u << Membership::bit_index(kind, slot);
    std::vector<std::size_t> out;
    const std::size_t nb = family_.size();
    for (std::size_t v = 0; v < ball_->core_size(); ++v) {
        for (std::size_t b = 0; b < nb; ++b) {
            if (core_bits_[v * nb + b] & mask) {
                out.push_back(v);
                break;
            }
        }
    }
    return out;
}

std::size_t BranchSets::complement_size(int within_radius) const {
    const std::size_t limit = within_radius < 0 ? ball_->core_size()
                                                : std::min(ball_->core_size(), ball_->count_within(within_radius));
    const std::uint32_t mask = 1u << Membership::bit_index(SetKind::CalL, 0);
    const std::size_t nb = family_.size();
    std::size_t count = 0;
    for (std::size_t v = 0; v < limit; ++v) {
        bool inside = false;
        for (std::size_t b = 0; b < nb && !inside; ++b) inside = (core_bits_[v * nb + b] & mask) != 0;
        if (!inside) ++count;
    }
    return count;
}

DisjointnessReport check_branch_disjointness(const BranchSets& sets, int multiple) {
    DisjointnessReport report;
    report.level = multiple;
    const std::size_t nb = sets.branch_count();
    const Ball& ball = sets.ball();
    const auto& fam = sets.family();

    std::vector<std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < nb; ++i) members.push_back(sets.members(i, SetKind::LBall, multiple));
    for (std::size_t i = 0; i < nb; ++i) {
        for (std::size_t j = i + 1; j < nb; ++j) {
            std::vector<std::size_t> both;
            std::set_intersection(members[i].begin(), members[i].end(), members[j].begin(), members[j].end(),
                                  std::back_inserter(both));
            if (!both.empty()) report.overlaps.push_back({i, j, std::move(both)});
        }
    }

    report.branch_distance.assign(nb, std::vector<int>(nb, 0));
    for (std::size_t i = 0; i < nb; ++i) {
        for (std::size_t j = i + 1; j < nb; ++j) {
            int best = kFar;
            for (const auto& a : fam.branches[i])
                for (const auto& b : fam.branches[j]) {
                    auto d = ball.exact_distance(a, b);
                    if (!d) throw Uncertified("distance between branch points is not certified");
                    best = std::min(best, *d);
                }
            report.branch_distance[i][j] = report.branch_distance[j][i] = best;
            if (best < 4.0 * fam.delta) report.separation_condition = false;
        }
    }
    return report;
}

} // namespace hypbranch
