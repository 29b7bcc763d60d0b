#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hypbranch/algebra.hpp"
#include "hypbranch/branches.hpp"

namespace hypbranch {

// H uses L_i, CalH uses 𝓛_i, HThick uses L_{A_i^{rδ}} and HDelta uses
// L^{rδ}_{A_i}.
enum class Variant { H, CalH, HThick, HDelta };
// Circ applies conj(ε_i) P(set_i^{-1}).
enum class Direction { Forward, Circ };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct TransformSpec {
    std::shared_ptr<const BranchSets> sets;
    std::vector<Complex> eps;
    Variant variant = Variant::CalH;
    Direction direction = Direction::Forward;
    // Thickening multiple for HThick and HDelta.
    int level = 1;

    TransformSpec with(Variant v, Direction d) const {
        TransformSpec s = *this;
        s.variant = v;
        s.direction = d;
        return s;
    }
};

TransformSpec make_transform(std::shared_ptr<const BranchSets> sets, Variant variant = Variant::CalH,
                             Direction direction = Direction::Forward, int level = 1);

// Σ_i ε_i P(set_i) x, or Σ_i conj(ε_i) P(set_i^{-1}) x for Circ. Elements whose
// membership the ball cannot decide raise Uncertified ("radius too small").
AlgebraElement apply(const TransformSpec& spec, const AlgebraElement& x);

// Same sum on a single atom: the multiplier of λ_g.
Complex multiplier(const TransformSpec& spec, const Element& g);

// max |(T x)* - T°(x*)| coefficientwise.
double adjoint_identity_deviation(const TransformSpec& spec, const AlgebraElement& x);

// max |𝓗 x - H_thick x| for x supported on ∪𝓛_i; other support is rejected.
double calh_thick_deviation(const TransformSpec& spec, const AlgebraElement& x);

// True when g lies in some 𝓛_i.
bool in_union_calL(const BranchSets& sets, const Element& g);

struct CertifiedConstant {
    int m = 0;
    double delta = 0;
    // E_{<2m+2δ} = {g : |g| <= reach}.
    int reach = 0;
    std::size_t ball_count = 0;
    double c = 0;
    double value = 0;
    std::string derivation;
};

// C = 1 + sqrt(2 + c) with c = sqrt(|E_{<2m+2δ}|), the positive root bound of
// t^2 <= (c + 1) + 2t.
CertifiedConstant certified_constant(const GroupPtr& group, int m, double delta,
                                     std::size_t vertex_cap = Ball::kDefaultVertexCap);

} // namespace hypbranch
