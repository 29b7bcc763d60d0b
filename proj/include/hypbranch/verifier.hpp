#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hypbranch/algebra.hpp"
#include "hypbranch/branches.hpp"
#include "hypbranch/transform.hpp"

namespace hypbranch {

using Json = nlohmann::ordered_json;

struct Witness {
    // Sort key, compared elementwise in shortlex order.
    std::vector<Element> key;
    Json body;
};

struct VerificationReport {
    static constexpr std::size_t kMaxWitnesses = 100;

    std::string statement;
    Json params = Json::object();
    std::size_t cases = 0;
    std::size_t uncertified = 0;
    std::size_t violation_count = 0;
    std::vector<Witness> violations;
    std::size_t rejected_count = 0;
    std::vector<Witness> rejected;
    Json extremal = Json::object();
    Json details = Json::object();
    std::vector<std::string> notes;
    double elapsed_seconds = 0;

    bool pass() const { return violation_count == 0; }
    void add_violation(Witness w);
    void add_rejection(Witness w);
    // Sorts witnesses by key and keeps the first kMaxWitnesses.
    void finalize();
    Json to_json(bool with_timing = true) const;
};

Json describe_group(const Group& g);
Json describe_family(const Group& g, const BranchFamily& fam);
std::vector<std::string> format_all(const Group& g, const std::vector<Element>& xs);

// For every g ≳ a and h in the ball with |gh| >= |h| - |g| + 2|a| + 2δ,
// checks that every geodesic from o to gh meets B_δ(a).
VerificationReport check_geodesic_lemma(const Ball& ball, const Element& a, double delta);

// For g in 𝓛_i and h in (𝓛_j)^{-1} with |gh| >= 2m + 2δ, checks
// gh ∈ L^δ_i ∪ (L^δ_j)^{-1}.
VerificationReport check_inclusion_lemma(const BranchSets& sets);

// Ordered pairs g, h in ∪𝓛_i with |g|, |h| <= radius and |gh^{-1}| >= 2m + 2δ.
std::vector<std::pair<Element, Element>> eligible_identity_pairs(const BranchSets& sets, int radius = -1);
std::vector<std::pair<Element, Element>> sample_identity_pairs(const BranchSets& sets, std::size_t count,
                                                               std::uint64_t seed, int radius = -1);

// The three expressions of the operator identity for each pair, compared
// coefficientwise. Pairs outside the hypothesis are rejected.
VerificationReport check_operator_identity(const BranchSets& sets, const std::vector<Complex>& eps,
                                           const std::vector<std::pair<Element, Element>>& pairs,
                                           Variant thick = Variant::HThick, double tolerance = 1e-12);

// 𝓗(λ_g) = H_thick(λ_g) and 𝓗°(λ_{g^-1}) = H_thick°(λ_{g^-1}) for every
// g ∈ ∪𝓛_i with |g| <= radius.
VerificationReport check_habg(const BranchSets& sets, const std::vector<Complex>& eps, int radius = -1,
                              Variant thick = Variant::HThick, double tolerance = 1e-12);

// Chain inclusions and pairwise disjointness of L^{rδ} for the given multiples.
VerificationReport check_branches(const BranchSets& sets, const std::vector<int>& multiples = {1});

enum class Sampler { Atoms, RandomComplex, Rademacher };
const char* sampler_name(Sampler s);
Sampler parse_sampler(const std::string& name);

struct LambdaOptions {
    // p = 2^k.
    int k = 2;
    Sampler sampler = Sampler::Rademacher;
    std::uint64_t seed = 1;
    std::size_t samples = 200;
    // Support radii; empty means the materialized radius.
    std::vector<int> radii;
    double stability = 0.05;
    std::size_t product_cap = AlgebraElement::kDefaultProductCap;
    Variant variant = Variant::CalH;
};

// Coefficients of one sample on the given support, reproducible from
// (sampler, seed, radius, sample).
std::vector<Complex> sample_coefficients(Sampler sampler, std::uint64_t seed, int radius, std::size_t sample,
                                         std::size_t support);

// Ratios ‖𝓗x‖_p / ‖x‖_p over samples supported on ∪𝓛_i ∩ B̄_radius. The bound
// is max|ε_i| at p = 2 and the certified constant at p = 4.
VerificationReport lambda_p_experiment(const BranchSets& sets, const std::vector<Complex>& eps,
                                       const LambdaOptions& options);

// p = 2^n with samples supported on ∪𝓛_{A_i^{(k+1-n)δ}}. Refuses when the
// L^{kδ} sets are not pairwise disjoint.
VerificationReport kfold_experiment(const BranchSets& sets, const std::vector<Complex>& eps, int k, int n,
                                    LambdaOptions options);

// Branch family used by commutator_check: {a}, S_m - B_{4δ}(a), and for each
// r in remark_radii the sets S_m - Ḃ_r(a) (punctured) and S_m - B_r(a).
BranchFamily commutator_family(const Ball& ball, const Element& a, double delta,
                               const std::vector<double>& remark_radii);

// (P°_{B_δ(a)} λ_g - λ_g P°_{B_δ(a)}) λ_{h^-1} = 0 for h ∈ 𝓛_{a} ∪ 𝓛_{S_m - B_{4δ}(a)}
// with |h| >= |g| + m + δ, plus the finite-rank surrogates.
VerificationReport commutator_check(std::shared_ptr<const Ball> ball, const Element& a, const Element& g,
                                    double delta, std::vector<double> remark_radii = {});

} // namespace hypbranch
