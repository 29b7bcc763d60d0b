#include "hypbranch/transform.hpp"

#include <cmath>
#include <cstdio>

#include "hypbranch/errors.hpp"
#include "hypbranch/geodesic.hpp"

namespace hypbranch {

namespace {

SetKind kind_of(Variant v) {
    switch (v) {
    case Variant::H: return SetKind::L;
    case Variant::CalH: return SetKind::CalL;
    case Variant::HThick: return SetKind::LThick;
    case Variant::HDelta: return SetKind::LBall;
    }
    return SetKind::L;
}

Membership membership_or_throw(const BranchSets& sets, const Element& g) {
    try {
        return sets.lookup(g);
    } catch (const Uncertified& err) {
        throw Uncertified("radius too small: cannot classify " + sets.ball().group().format(g) + " (" + err.what() +
                          ")");
    }
}

} // namespace

const char* variant_name(Variant v) {
    switch (v) {
    case Variant::H: return "H";
    case Variant::CalH: return "calH";
    case Variant::HThick: return "H_thick";
    case Variant::HDelta: return "H_delta";
    }
    return "?";
}

Variant parse_variant(const std::string& name) {
    for (Variant v : {Variant::H, Variant::CalH, Variant::HThick, Variant::HDelta})
        if (name == variant_name(v)) return v;
    throw InvalidInput("unknown transform variant '" + name + "' (expected H, calH, H_thick or H_delta)");
}

TransformSpec make_transform(std::shared_ptr<const BranchSets> sets, Variant variant, Direction direction, int level) {
    if (!sets) throw InvalidInput("transform needs branch sets");
    TransformSpec spec;
    spec.eps = sets->family().signs();
    spec.sets = std::move(sets);
    spec.variant = variant;
    spec.direction = direction;
    spec.level = level;
    if (variant == Variant::HThick || variant == Variant::HDelta) spec.sets->level_slot(level);
    return spec;
}

Complex multiplier(const TransformSpec& spec, const Element& g) {
    const BranchSets& sets = *spec.sets;
    if (spec.eps.size() != sets.branch_count())
        throw InvalidInput("transform has " + std::to_string(spec.eps.size()) + " signs for " +
                           std::to_string(sets.branch_count()) + " branches");
    const SetKind kind = kind_of(spec.variant);
    const std::size_t slot =
        (kind == SetKind::L || kind == SetKind::CalL) ? 0 : sets.level_slot(spec.level);
    const bool circ = spec.direction == Direction::Circ;
    Element probe = g;
    if (circ) {
        auto inv = sets.ball().invert(g);
        if (!inv) throw Uncertified("radius too small: cannot invert " + sets.ball().group().format(g));
        probe = std::move(*inv);
    }
    const Membership mem = membership_or_throw(sets, probe);
    Complex out = 0.0;
    for (std::size_t i = 0; i < sets.branch_count(); ++i)
        if (mem.has(i, kind, slot)) out += circ ? std::conj(spec.eps[i]) : spec.eps[i];
    return out;
}

AlgebraElement apply(const TransformSpec& spec, const AlgebraElement& x) {
    if (x.group().tag() != spec.sets->ball().group().tag())
        throw InvalidInput("transform and element belong to different groups");
    std::vector<std::pair<Element, Complex>> out;
    out.reserve(x.support_size());
    for (const auto& [g, c] : x.terms()) {
        const Complex k = multiplier(spec, g);
        if (k != Complex(0.0)) out.emplace_back(g, k * c);
    }
    return AlgebraElement::from_terms(x.group_ptr(), std::move(out));
}

double adjoint_identity_deviation(const TransformSpec& spec, const AlgebraElement& x) {
    const TransformSpec fwd = spec.with(spec.variant, Direction::Forward);
    const TransformSpec circ = spec.with(spec.variant, Direction::Circ);
    return max_deviation(apply(fwd, x).adjoint(), apply(circ, x.adjoint()));
}

bool in_union_calL(const BranchSets& sets, const Element& g) {
    const Membership mem = membership_or_throw(sets, g);
    for (std::size_t i = 0; i < sets.branch_count(); ++i)
        if (mem.has(i, SetKind::CalL)) return true;
    return false;
}

double calh_thick_deviation(const TransformSpec& spec, const AlgebraElement& x) {
    for (const auto& [g, c] : x.terms())
        if (!in_union_calL(*spec.sets, g))
            throw InvalidInput("element " + x.group().format(g) + " lies outside every 𝓛_i");
    const TransformSpec cal = spec.with(Variant::CalH, spec.direction);
    const TransformSpec thick = spec.with(Variant::HThick, spec.direction);
    return max_deviation(apply(cal, x), apply(thick, x));
}

CertifiedConstant certified_constant(const GroupPtr& group, int m, double delta, std::size_t vertex_cap) {
    if (m < 0) throw InvalidInput("m must be non-negative");
    if (!(delta >= 0) || !std::isfinite(delta)) throw InvalidInput("delta must be finite and non-negative");
    CertifiedConstant out;
    out.m = m;
    out.delta = delta;
    const double r = 2.0 * m + 2.0 * delta;
    // E_{<r} is {e} as r -> 0+.
    out.reach = std::max(0, strict_ball_reach(r));
    const Ball ball = Ball::enumerate(group, out.reach, 0, vertex_cap);
    out.ball_count = ball.size();
    out.c = std::sqrt(static_cast<double>(out.ball_count));
    out.value = 1.0 + std::sqrt(2.0 + out.c);
    char buf[256];
    std::snprintf(buf, sizeof buf, "|E_{<%g}| = |{|g| <= %d}| = %zu, c = sqrt(%zu) = %.6f, C = 1 + sqrt(2 + c) = %.6f",
                  r, out.reach, out.ball_count, out.ball_count, out.c, out.value);
    out.derivation = buf;
    return out;
}

} // namespace hypbranch
