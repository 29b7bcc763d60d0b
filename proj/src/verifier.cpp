#include "hypbranch/verifier.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <unordered_map>

#include "hypbranch/errors.hpp"
#include "hypbranch/geodesic.hpp"
#include "hypbranch/parallel.hpp"

namespace hypbranch {

namespace {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

bool witness_less(const Witness& x, const Witness& y) {
    const std::size_t n = std::min(x.key.size(), y.key.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (shortlex_less(x.key[i], y.key[i])) return true;
        if (shortlex_less(y.key[i], x.key[i])) return false;
    }
    return x.key.size() < y.key.size();
}

void trim(std::vector<Witness>& ws, std::size_t keep) {
    std::stable_sort(ws.begin(), ws.end(), witness_less);
    if (ws.size() > keep) ws.resize(keep);
}

const char* note_theorem =
    "statement is a theorem: a violation means an implementation bug or a delta below the strict-ball "
    "hyperbolicity constant of this Cayley graph";

Element must_invert(const Ball& ball, const Element& g) {
    auto inv = ball.invert(g);
    if (!inv) throw Uncertified("radius too small: cannot invert " + ball.group().format(g));
    return *inv;
}

bool any_calL(const Membership& mem, std::size_t nb) {
    for (std::size_t i = 0; i < nb; ++i)
        if (mem.has(i, SetKind::CalL)) return true;
    return false;
}

// Core vertices with |g| <= radius lying in some set of the given kind.
std::vector<Element> union_support(const BranchSets& sets, SetKind kind, int level, int radius) {
    const Ball& ball = sets.ball();
    if (radius > ball.radius())
        throw InvalidInput("support radius " + std::to_string(radius) + " exceeds the materialized radius " +
                           std::to_string(ball.radius()));
    const std::size_t slot = (kind == SetKind::L || kind == SetKind::CalL) ? 0 : sets.level_slot(level);
    std::vector<Element> out;
    const std::size_t limit = ball.count_within(radius);
    for (std::size_t v = 0; v < limit; ++v) {
        Membership mem = sets.at(v);
        for (std::size_t i = 0; i < sets.branch_count(); ++i)
            if (mem.has(i, kind, slot)) {
                out.push_back(ball.vertex(v));
                break;
            }
    }
    return out;
}

Json complex_json(Complex c) { return Json::array({c.real(), c.imag()}); }

double max_abs(const std::vector<Complex>& eps) {
    double m = 0;
    for (auto e : eps) m = std::max(m, std::abs(e));
    return m;
}

Json base_params(const BranchSets& sets, const std::vector<Complex>& eps) {
    const Group& g = sets.ball().group();
    Json p;
    p["group"] = describe_group(g);
    p["N"] = sets.ball().radius();
    p["margin"] = sets.ball().working_radius() - sets.ball().radius();
    p["branches"] = describe_family(g, sets.family());
    Json e = Json::array();
    for (auto c : eps) e.push_back(complex_json(c));
    p["epsilon"] = e;
    return p;
}

} // namespace

void VerificationReport::add_violation(Witness w) {
    ++violation_count;
    violations.push_back(std::move(w));
    if (violations.size() > 4 * kMaxWitnesses) trim(violations, kMaxWitnesses);
}

void VerificationReport::add_rejection(Witness w) {
    ++rejected_count;
    rejected.push_back(std::move(w));
    if (rejected.size() > 4 * kMaxWitnesses) trim(rejected, kMaxWitnesses);
}

void VerificationReport::finalize() {
    trim(violations, kMaxWitnesses);
    trim(rejected, kMaxWitnesses);
}

Json VerificationReport::to_json(bool with_timing) const {
    Json j;
    j["statement"] = statement;
    j["params"] = params;
    j["pass"] = pass();
    j["cases"] = cases;
    j["uncertified"] = uncertified;
    j["violation_count"] = violation_count;
    Json v = Json::array();
    for (const auto& w : violations) v.push_back(w.body);
    j["violations"] = v;
    j["rejected_count"] = rejected_count;
    Json r = Json::array();
    for (const auto& w : rejected) r.push_back(w.body);
    j["rejected"] = r;
    j["extremal"] = extremal;
    j["details"] = details;
    j["notes"] = notes;
    if (with_timing) j["timing"] = {{"elapsed_seconds", elapsed_seconds}};
    return j;
}

Json describe_group(const Group& g) {
    const GroupSpec& s = g.spec();
    Json j;
    switch (s.family) {
    case Family::Free: j["family"] = "free"; break;
    case Family::FreeProductCyclic: j["family"] = "free_product_cyclic"; break;
    case Family::Dehn: j["family"] = "dehn"; break;
    }
    j["generators"] = s.generators;
    if (s.family == Family::FreeProductCyclic) j["orders"] = s.orders;
    if (s.family == Family::Dehn) j["relators"] = s.relators;
    return j;
}

std::vector<std::string> format_all(const Group& g, const std::vector<Element>& xs) {
    std::vector<std::string> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(g.format(x));
    return out;
}

Json describe_family(const Group& g, const BranchFamily& fam) {
    Json j;
    j["m"] = fam.m;
    j["delta"] = fam.delta;
    Json b = Json::array();
    for (const auto& branch : fam.branches) b.push_back(format_all(g, branch));
    j["sets"] = b;
    return j;
}

VerificationReport check_geodesic_lemma(const Ball& ball, const Element& a, double delta) {
    Stopwatch clock;
    const Group& G = ball.group();
    if (!(delta > 0) || !std::isfinite(delta)) throw InvalidInput("delta must be positive and finite");
    auto la = ball.length(a);
    if (!la) throw Uncertified("radius too small: point " + G.format(a) + " lies outside the ball");

    VerificationReport rep;
    rep.statement = "geodesic-lemma";
    rep.params["group"] = describe_group(G);
    rep.params["N"] = ball.radius();
    rep.params["margin"] = ball.working_radius() - ball.radius();
    rep.params["a"] = G.format(a);
    rep.params["delta"] = delta;
    const int reach = strict_ball_reach(delta);
    const std::size_t core = ball.core_size();

    std::vector<std::size_t> gs;
    std::size_t uncertified_g = 0;
    for (std::size_t v = 0; v < core; ++v) {
        auto d = ball.exact_distance(a, ball.vertex(v));
        if (!d)
            ++uncertified_g;
        else if (*la + *d == ball.layer(v))
            gs.push_back(v);
    }

    struct Partial {
        std::vector<std::pair<std::uint32_t, Element>> cases;
        std::size_t uncertified = 0;
    };
    std::vector<Partial> parts(gs.size());
    parallel_for(gs.size(), [&](std::size_t k) {
        const Element& g = ball.vertex(gs[k]);
        const int lg = ball.layer(gs[k]);
        Partial& out = parts[k];
        for (std::size_t v = 0; v < core; ++v) {
            auto gh = ball.multiply(g, ball.vertex(v));
            std::optional<int> len = gh ? ball.length(*gh) : std::nullopt;
            if (!len) {
                ++out.uncertified;
                continue;
            }
            if (*len < ball.layer(v) - lg + 2 * *la + 2 * delta) continue;
            out.cases.emplace_back(static_cast<std::uint32_t>(v), std::move(*gh));
        }
    });

    std::unordered_map<std::string, std::size_t> index;
    std::vector<const Element*> distinct;
    for (const auto& p : parts)
        for (const auto& [v, gh] : p.cases)
            if (index.emplace(gh.word, distinct.size()).second) distinct.push_back(&gh);
    std::vector<std::optional<int>> widest(distinct.size());
    parallel_for(distinct.size(), [&](std::size_t k) {
        try {
            widest[k] = widest_distance(ball, geodesic_dag(ball, *distinct[k]), a);
        } catch (const Uncertified&) {
        }
    });

    int worst = -1;
    Json worst_pair;
    for (std::size_t k = 0; k < gs.size(); ++k) {
        const Element& g = ball.vertex(gs[k]);
        rep.uncertified += parts[k].uncertified;
        for (const auto& [v, gh] : parts[k].cases) {
            const auto& w = widest[index.at(gh.word)];
            if (!w) {
                ++rep.uncertified;
                continue;
            }
            ++rep.cases;
            const Element& h = ball.vertex(v);
            if (*w > worst) {
                worst = *w;
                worst_pair = {{"g", G.format(g)}, {"h", G.format(h)}, {"gh", G.format(gh)}};
            }
            if (*w > reach) {
                Json body = {{"g", G.format(g)},
                             {"h", G.format(h)},
                             {"gh", G.format(gh)},
                             {"len_g", ball.layer(gs[k])},
                             {"len_h", ball.layer(v)},
                             {"len_gh", *ball.length(gh)},
                             {"widest_distance_to_a", *w}};
                rep.add_violation({{g, h}, std::move(body)});
            }
        }
    }
    rep.uncertified += uncertified_g;
    rep.details["g_candidates"] = gs.size();
    rep.details["distinct_products"] = distinct.size();
    rep.extremal["ball_reach"] = reach;
    if (worst >= 0) {
        rep.extremal["max_widest_distance"] = worst;
        rep.extremal["margin"] = reach - worst;
        rep.extremal["at"] = worst_pair;
    }
    if (rep.violation_count) rep.notes.push_back(note_theorem);
    rep.finalize();
    rep.elapsed_seconds = clock.seconds();
    return rep;
}

VerificationReport check_inclusion_lemma(const BranchSets& sets) {
    Stopwatch clock;
    const Ball& ball = sets.ball();
    const Group& G = ball.group();
    const BranchFamily& fam = sets.family();
    const std::size_t nb = sets.branch_count();
    const std::size_t slot = sets.level_slot(1);
    const double threshold = 2.0 * fam.m + 2.0 * fam.delta;

    VerificationReport rep;
    rep.statement = "inclusion-lemma";
    rep.params = base_params(sets, fam.signs());
    rep.params.erase("epsilon");

    std::vector<std::size_t> U;
    for (std::size_t v = 0; v < ball.core_size(); ++v)
        if (any_calL(sets.at(v), nb)) U.push_back(v);
    std::vector<Element> inv(U.size());
    for (std::size_t k = 0; k < U.size(); ++k) inv[k] = must_invert(ball, ball.vertex(U[k]));

    struct Partial {
        std::vector<std::pair<std::uint32_t, Element>> products;
        std::size_t uncertified = 0;
    };
    std::vector<Partial> parts(U.size());
    parallel_for(U.size(), [&](std::size_t a) {
        const Element& g = ball.vertex(U[a]);
        for (std::size_t b = 0; b < U.size(); ++b) {
            auto p = ball.multiply(g, inv[b]);
            std::optional<int> len = p ? ball.length(*p) : std::nullopt;
            if (!len) {
                ++parts[a].uncertified;
                continue;
            }
            if (*len >= threshold) parts[a].products.emplace_back(static_cast<std::uint32_t>(b), std::move(*p));
        }
    });

    {
        std::unordered_map<std::string, char> seen;
        std::vector<Element> todo;
        for (const auto& part : parts)
            for (const auto& [b, p] : part.products)
                if (seen.emplace(p.word, 1).second) todo.push_back(p);
        const std::size_t n = todo.size();
        for (std::size_t k = 0; k < n; ++k)
            if (auto pi = ball.invert(todo[k]); pi && seen.emplace(pi->word, 1).second) todo.push_back(*pi);
        sets.prefetch(todo);
        rep.details["distinct_products"] = n;
    }

    struct Tally {
        std::size_t cases = 0, uncertified = 0, in_i = 0, in_j = 0, both = 0;
        std::vector<Witness> bad;
    };
    std::vector<Tally> tallies(U.size());
    parallel_for(U.size(), [&](std::size_t a) {
        const Element& g = ball.vertex(U[a]);
        const Membership mg = sets.at(U[a]);
        Tally& t = tallies[a];
        for (const auto& [b, p] : parts[a].products) {
            const Membership mk = sets.at(U[b]);
            Membership mp, mpi;
            try {
                mp = sets.lookup(p);
                mpi = sets.lookup(must_invert(ball, p));
            } catch (const Uncertified&) {
                ++t.uncertified;
                continue;
            }
            for (std::size_t i = 0; i < nb; ++i) {
                if (!mg.has(i, SetKind::CalL)) continue;
                for (std::size_t j = 0; j < nb; ++j) {
                    if (!mk.has(j, SetKind::CalL)) continue;
                    ++t.cases;
                    const bool li = mp.has(i, SetKind::LBall, slot), lj = mpi.has(j, SetKind::LBall, slot);
                    t.in_i += li;
                    t.in_j += lj;
                    t.both += li && lj;
                    if (li || lj) continue;
                    Json body = {{"i", i},          {"j", j},
                                 {"g", G.format(g)}, {"h", G.format(inv[b])},
                                 {"gh", G.format(p)}, {"len_gh", *ball.length(p)}};
                    t.bad.push_back({{g, inv[b]}, std::move(body)});
                }
            }
        }
    });

    std::size_t in_i = 0, in_j = 0, both = 0;
    for (std::size_t a = 0; a < U.size(); ++a) {
        rep.uncertified += parts[a].uncertified + tallies[a].uncertified;
        rep.cases += tallies[a].cases;
        in_i += tallies[a].in_i;
        in_j += tallies[a].in_j;
        both += tallies[a].both;
        for (auto& w : tallies[a].bad) rep.add_violation(std::move(w));
    }
    rep.details["union_calL_size"] = U.size();
    rep.details["threshold"] = threshold;
    rep.extremal = {{"cases_in_L_delta_i", in_i}, {"cases_in_inverse_L_delta_j", in_j}, {"cases_in_both", both}};
    if (rep.violation_count) rep.notes.push_back(note_theorem);
    rep.finalize();
    rep.elapsed_seconds = clock.seconds();
    return rep;
}

std::vector<std::pair<Element, Element>> eligible_identity_pairs(const BranchSets& sets, int radius) {
    const Ball& ball = sets.ball();
    if (radius < 0) radius = ball.radius();
    auto U = union_support(sets, SetKind::CalL, 0, radius);
    const double threshold = 2.0 * sets.family().m + 2.0 * sets.family().delta;
    std::vector<Element> inv;
    for (const auto& h : U) inv.push_back(must_invert(ball, h));
    std::vector<std::vector<std::pair<Element, Element>>> rows(U.size());
    parallel_for(U.size(), [&](std::size_t a) {
        for (std::size_t b = 0; b < U.size(); ++b) {
            auto p = ball.multiply(U[a], inv[b]);
            std::optional<int> len = p ? ball.length(*p) : std::nullopt;
            if (len && *len >= threshold) rows[a].emplace_back(U[a], U[b]);
        }
    });
    std::vector<std::pair<Element, Element>> out;
    for (auto& r : rows) out.insert(out.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    return out;
}

std::vector<std::pair<Element, Element>> sample_identity_pairs(const BranchSets& sets, std::size_t count,
                                                               std::uint64_t seed, int radius) {
    const Ball& ball = sets.ball();
    if (radius < 0) radius = ball.radius();
    auto U = union_support(sets, SetKind::CalL, 0, radius);
    const double threshold = 2.0 * sets.family().m + 2.0 * sets.family().delta;
    std::vector<std::pair<Element, Element>> out;
    if (U.empty()) return out;
    std::mt19937_64 rng(seed);
    for (std::size_t attempts = 0; out.size() < count && attempts < 1000 * count; ++attempts) {
        const Element& g = U[rng() % U.size()];
        const Element& h = U[rng() % U.size()];
        auto hi = ball.invert(h);
        auto p = hi ? ball.multiply(g, *hi) : std::nullopt;
        auto len = p ? ball.length(*p) : std::nullopt;
        if (len && *len >= threshold) out.emplace_back(g, h);
    }
    return out;
}

VerificationReport check_operator_identity(const BranchSets& sets, const std::vector<Complex>& eps,
                                           const std::vector<std::pair<Element, Element>>& pairs, Variant thick,
                                           double tolerance) {
    Stopwatch clock;
    const Ball& ball = sets.ball();
    const Group& G = ball.group();
    const BranchFamily& fam = sets.family();
    const double threshold = 2.0 * fam.m + 2.0 * fam.delta;
    const GroupPtr& gp = ball.group_ptr();

    VerificationReport rep;
    rep.statement = "operator-identity";
    rep.params = base_params(sets, eps);
    rep.params["thick_variant"] = variant_name(thick);
    rep.params["tolerance"] = tolerance;
    rep.params["pairs"] = pairs.size();

    auto base = make_transform(std::shared_ptr<const BranchSets>(std::shared_ptr<const BranchSets>{}, &sets));
    base.eps = eps;
    const TransformSpec T = base.with(thick, Direction::Forward), Tc = base.with(thick, Direction::Circ);
    const TransformSpec C = base.with(Variant::CalH, Direction::Forward), Cc = base.with(Variant::CalH, Direction::Circ);

    {
        std::vector<Element> todo;
        for (const auto& [g, h] : pairs) {
            auto hi = ball.invert(h);
            if (!hi) continue;
            todo.push_back(*hi);
            if (auto p = ball.multiply(g, *hi)) {
                todo.push_back(*p);
                if (auto pi = ball.invert(*p)) todo.push_back(*pi);
            }
        }
        sets.prefetch(todo);
    }

    struct Outcome {
        enum Kind { Evaluated, Rejected, Uncertain } kind = Evaluated;
        std::string reason;
        double deviation = 0;
        Complex coefficient = 0;
    };
    std::vector<Outcome> out(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t k) {
        const auto& [g, h] = pairs[k];
        Outcome& o = out[k];
        try {
            if (!in_union_calL(sets, g) || !in_union_calL(sets, h)) {
                o.kind = Outcome::Rejected;
                o.reason = "g or h lies outside every calL_i";
                return;
            }
            const Element hi = must_invert(ball, h);
            auto p = ball.multiply(g, hi);
            auto len = p ? ball.length(*p) : std::nullopt;
            if (!len) throw Uncertified("product outside the ball");
            if (*len < threshold) {
                o.kind = Outcome::Rejected;
                o.reason = "|gh^-1| = " + std::to_string(*len) + " < 2m + 2delta";
                return;
            }
            const auto lg = AlgebraElement::atom(gp, g), lhi = AlgebraElement::atom(gp, hi);
            const auto e1 = convolve(apply(T, lg), apply(Tc, lhi));
            const auto e2 = convolve(apply(C, lg), apply(Cc, lhi));
            const auto e3 = apply(T, convolve(lg, apply(Tc, lhi))) + apply(Tc, convolve(apply(T, lg), lhi)) -
                            apply(Tc, apply(T, convolve(lg, lhi)));
            o.deviation = std::max({max_deviation(e1, e2), max_deviation(e2, e3), max_deviation(e1, e3)});
            o.coefficient = e2.coefficient(*p);
        } catch (const Uncertified& err) {
            o.kind = Outcome::Uncertain;
            o.reason = err.what();
        }
    });

    double worst = 0;
    std::size_t worst_at = pairs.size(), exact_zero = 0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto& [g, h] = pairs[k];
        const Outcome& o = out[k];
        if (o.kind == Outcome::Uncertain) {
            ++rep.uncertified;
            continue;
        }
        if (o.kind == Outcome::Rejected) {
            rep.add_rejection({{g, h}, {{"g", G.format(g)}, {"h", G.format(h)}, {"reason", o.reason}}});
            continue;
        }
        ++rep.cases;
        exact_zero += o.deviation == 0.0;
        if (worst_at == pairs.size() || o.deviation > worst) {
            worst = o.deviation;
            worst_at = k;
        }
        if (!(o.deviation < tolerance))
            rep.add_violation({{g, h},
                               {{"g", G.format(g)},
                                {"h", G.format(h)},
                                {"deviation", o.deviation},
                                {"calH_product_coefficient", complex_json(o.coefficient)}}});
    }
    rep.extremal["max_deviation"] = worst;
    if (worst_at < pairs.size())
        rep.extremal["at"] = {{"g", G.format(pairs[worst_at].first)}, {"h", G.format(pairs[worst_at].second)}};
    rep.details["exact_zero_pairs"] = exact_zero;
    const bool disjoint = check_branch_disjointness(sets, 1).disjoint();
    rep.details["L_delta_disjoint"] = disjoint;
    if (!disjoint) rep.notes.push_back("hypothesis fails: the L^delta sets are not pairwise disjoint in the ball");
    if (rep.violation_count && disjoint) rep.notes.push_back(note_theorem);
    rep.finalize();
    rep.elapsed_seconds = clock.seconds();
    return rep;
}

VerificationReport check_habg(const BranchSets& sets, const std::vector<Complex>& eps, int radius, Variant thick,
                              double tolerance) {
    Stopwatch clock;
    const Ball& ball = sets.ball();
    const Group& G = ball.group();
    if (radius < 0) radius = ball.radius();

    VerificationReport rep;
    rep.statement = "calH-equals-H-thick";
    rep.params = base_params(sets, eps);
    rep.params["radius"] = radius;
    rep.params["thick_variant"] = variant_name(thick);
    rep.params["tolerance"] = tolerance;

    auto base = make_transform(std::shared_ptr<const BranchSets>(std::shared_ptr<const BranchSets>{}, &sets));
    base.eps = eps;
    const TransformSpec T = base.with(thick, Direction::Forward), Tc = base.with(thick, Direction::Circ);
    const TransformSpec C = base.with(Variant::CalH, Direction::Forward), Cc = base.with(Variant::CalH, Direction::Circ);

    auto U = union_support(sets, SetKind::CalL, 0, radius);
    std::vector<Element> inv(U.size());
    for (std::size_t k = 0; k < U.size(); ++k) inv[k] = must_invert(ball, U[k]);
    sets.prefetch(inv);
    std::vector<std::optional<std::pair<double, double>>> dev(U.size());
    parallel_for(U.size(), [&](std::size_t k) {
        try {
            const double forward = std::abs(multiplier(C, U[k]) - multiplier(T, U[k]));
            const double circ = std::abs(multiplier(Cc, inv[k]) - multiplier(Tc, inv[k]));
            dev[k] = {forward, circ};
        } catch (const Uncertified&) {
        }
    });
    double worst = 0;
    for (std::size_t k = 0; k < U.size(); ++k) {
        if (!dev[k]) {
            ++rep.uncertified;
            continue;
        }
        ++rep.cases;
        const auto [f, c] = *dev[k];
        worst = std::max({worst, f, c});
        if (!(f < tolerance) || !(c < tolerance)) {
            Json body = {{"g", G.format(U[k])},
                         {"calH", complex_json(multiplier(C, U[k]))},
                         {"H_thick", complex_json(multiplier(T, U[k]))},
                         {"forward_deviation", f},
                         {"circ_deviation", c}};
            rep.add_violation({{U[k]}, std::move(body)});
        }
    }
    rep.extremal["max_deviation"] = worst;
    const bool disjoint = check_branch_disjointness(sets, 1).disjoint();
    rep.details["L_delta_disjoint"] = disjoint;
    if (!disjoint) rep.notes.push_back("hypothesis fails: the L^delta sets are not pairwise disjoint in the ball");
    rep.finalize();
    rep.elapsed_seconds = clock.seconds();
    return rep;
}

VerificationReport check_branches(const BranchSets& sets, const std::vector<int>& multiples) {
    Stopwatch clock;
    const Ball& ball = sets.ball();
    const Group& G = ball.group();
    VerificationReport rep;
    rep.statement = "branch-sets";
    rep.params = base_params(sets, sets.family().signs());
    rep.params.erase("epsilon");
    rep.params["multiples"] = multiples;

    static const char* inclusion_names[] = {"L in calL", "calL in L^delta", "L^delta in L_{A^delta}"};
    rep.cases = sets.chain_checked();
    for (const auto& v : sets.chain_violations())
        rep.add_violation({{ball.vertex(v.vertex)},
                           {{"g", G.format(ball.vertex(v.vertex))},
                            {"branch", v.branch},
                            {"inclusion", inclusion_names[v.inclusion]}}});
    rep.violation_count = sets.chain_violation_count();

    Json sizes = Json::array();
    for (std::size_t i = 0; i < sets.branch_count(); ++i) {
        Json s;
        s["L"] = sets.members(i, SetKind::L).size();
        s["calL"] = sets.members(i, SetKind::CalL).size();
        for (int r : multiples) {
            const std::string tag = "r=" + std::to_string(r);
            s["L^r_A"][tag] = sets.members(i, SetKind::LBall, r).size();
            s["L_{A^r}"][tag] = sets.members(i, SetKind::LThick, r).size();
            s["calL_{A^r}"][tag] = sets.members(i, SetKind::CalLThick, r).size();
        }
        sizes.push_back(s);
    }
    rep.details["core_vertices"] = ball.core_size();
    rep.details["set_sizes"] = sizes;
    rep.details["complement_of_union_calL"] = {{"radius", ball.radius()}, {"count", sets.complement_size()}};
    if (ball.radius() > 0)
        rep.details["complement_of_union_calL_previous_radius"] = {{"radius", ball.radius() - 1},
                                                                   {"count", sets.complement_size(ball.radius() - 1)}};

    Json disj = Json::array();
    for (int r : multiples) {
        auto d = check_branch_disjointness(sets, r);
        Json o;
        o["multiple"] = r;
        o["disjoint"] = d.disjoint();
        Json overlaps = Json::array();
        for (const auto& ov : d.overlaps) {
            std::vector<Element> xs;
            for (std::size_t k = 0; k < std::min<std::size_t>(ov.vertices.size(), 5); ++k)
                xs.push_back(ball.vertex(ov.vertices[k]));
            overlaps.push_back({{"i", ov.i}, {"j", ov.j}, {"count", ov.vertices.size()}, {"first", format_all(G, xs)}});
        }
        o["overlaps"] = overlaps;
        o["branch_distance"] = d.branch_distance;
        o["separation_4delta"] = d.separation_condition;
        disj.push_back(o);
    }
    rep.details["disjointness"] = disj;
    rep.finalize();
    rep.elapsed_seconds = clock.seconds();
    return rep;
}

const char* sampler_name(Sampler s) {
    switch (s) {
    case Sampler::Atoms: return "atoms";
    case Sampler::RandomComplex: return "random-complex";
    case Sampler::Rademacher: return "rademacher";
    }
    return "?";
}

Sampler parse_sampler(const std::string& name) {
    for (Sampler s : {Sampler::Atoms, Sampler::RandomComplex, Sampler::Rademacher})
        if (name == sampler_name(s)) return s;
    throw InvalidInput("unknown sampler '" + name + "' (expected atoms, random-complex or rademacher)");
}

std::vector<Complex> sample_coefficients(Sampler sampler, std::uint64_t seed, int radius, std::size_t sample,
                                         std::size_t support) {
    std::vector<Complex> c(support, 0.0);
    if (sampler == Sampler::Atoms) {
        if (sample < support) c[sample] = 1.0;
        return c;
    }
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(radius), static_cast<std::uint32_t>(sample),
                      static_cast<std::uint32_t>(static_cast<std::uint64_t>(sample) >> 32)};
    std::mt19937_64 rng(seq);
    // Uniform in (0, 1] from the top 53 bits.
    auto uniform = [&] { return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53; };
    for (auto& x : c) {
        if (sampler == Sampler::Rademacher) {
            x = (rng() >> 63) ? 1.0 : -1.0;
        } else {
            const double r = std::sqrt(-std::log(uniform())), t = 2 * std::numbers::pi * uniform();
            x = Complex(r * std::cos(t), r * std::sin(t));
        }
    }
    return c;
}

namespace {

struct RatioSetup {
    SetKind kind = SetKind::CalL;
    int level = 0;
    // p = 2^n
    int n = 2;
    std::optional<double> bound;
    std::string bound_source;
};

void run_ratios(const BranchSets& sets, const std::vector<Complex>& eps, const LambdaOptions& options,
                const RatioSetup& setup, VerificationReport& rep) {
    const Ball& ball = sets.ball();
    const Group& G = ball.group();
    const GroupPtr& gp = ball.group_ptr();
    const int kk = 1 << (setup.n - 1);
    auto T = make_transform(std::shared_ptr<const BranchSets>(std::shared_ptr<const BranchSets>{}, &sets),
                            options.variant);
    T.eps = eps;

    std::vector<int> radii = options.radii;
    if (radii.empty()) radii.push_back(ball.radius());
    Json per_radius = Json::array();
    std::vector<double> maxima;
    for (int radius : radii) {
        auto support = union_support(sets, setup.kind, setup.level, radius);
        const std::size_t count = options.sampler == Sampler::Atoms ? support.size() : options.samples;
        std::vector<double> ratio(count, std::nan(""));
        parallel_for(count, [&](std::size_t s) {
            auto c = sample_coefficients(options.sampler, options.seed, radius, s, support.size());
            std::vector<std::pair<Element, Complex>> terms;
            for (std::size_t i = 0; i < support.size(); ++i)
                if (c[i] != Complex(0.0)) terms.emplace_back(support[i], c[i]);
            auto x = AlgebraElement::from_terms(gp, std::move(terms));
            const double nx = lp_even_norm(x, kk, options.product_cap);
            if (nx > 0) ratio[s] = lp_even_norm(apply(T, x), kk, options.product_cap) / nx;
        });
        double mx = 0, sum = 0;
        std::size_t used = 0, arg = 0;
        for (std::size_t s = 0; s < count; ++s) {
            if (std::isnan(ratio[s])) continue;
            ++used;
            ++rep.cases;
            sum += ratio[s];
            if (ratio[s] > mx) {
                mx = ratio[s];
                arg = s;
            }
            if (setup.bound && ratio[s] > *setup.bound + 1e-9) {
                Json body = {{"radius", radius},
                             {"sample", s},
                             {"sampler", sampler_name(options.sampler)},
                             {"seed", options.seed},
                             {"ratio", ratio[s]},
                             {"bound", *setup.bound}};
                if (options.sampler == Sampler::Atoms) body["g"] = G.format(support[s]);
                // Decimal strings in shortlex order sort numerically.
                rep.add_violation({{Element{std::to_string(radius), 0}, Element{std::to_string(s), 0}}, std::move(body)});
            }
        }
        maxima.push_back(mx);
        Json r = {{"radius", radius},
                  {"support_size", support.size()},
                  {"samples", used},
                  {"max_ratio", mx},
                  {"mean_ratio", used ? sum / static_cast<double>(used) : 0.0},
                  {"argmax_sample", arg}};
        if (options.sampler == Sampler::Atoms && used) r["argmax_g"] = G.format(support[arg]);
        per_radius.push_back(r);
        rep.extremal["max_ratio"] = std::max(rep.extremal.value("max_ratio", 0.0), mx);
    }
    rep.details["per_radius"] = per_radius;
    Json changes = Json::array();
    bool stable = true;
    for (std::size_t i = 1; i < maxima.size(); ++i) {
        const double rel = maxima[i - 1] > 0 ? (maxima[i] - maxima[i - 1]) / maxima[i - 1] : 0.0;
        changes.push_back(rel);
        stable = stable && std::abs(rel) <= options.stability;
    }
    rep.details["max_ratio_relative_change"] = changes;
    rep.details["stable"] = stable;
    rep.details["stability_tolerance"] = options.stability;
    if (setup.bound) {
        rep.extremal["bound"] = *setup.bound;
        rep.extremal["bound_source"] = setup.bound_source;
        rep.extremal["margin"] = *setup.bound - rep.extremal.value("max_ratio", 0.0);
    } else {
        rep.extremal["bound"] = nullptr;
        rep.notes.push_back("no explicit constant at this exponent; ratios are reported only");
    }
}

Json lambda_params(const BranchSets& sets, const std::vector<Complex>& eps, const LambdaOptions& o) {
    Json p = base_params(sets, eps);
    p["k"] = o.k;
    p["sampler"] = sampler_name(o.sampler);
    p["seed"] = o.seed;
    p["samples"] = o.samples;
    p["radii"] = o.radii;
    p["variant"] = variant_name(o.variant);
    p["stability"] = o.stability;
    return p;
}

} // namespace

VerificationReport lambda_p_experiment(const BranchSets& sets, const std::vector<Complex>& eps,
                                       const LambdaOptions& options) {
    Stopwatch clock;
    if (options.k < 1 || options.k > 6) throw InvalidInput("lambda-p needs 1 <= k <= 6 (p = 2^k)");
    if (eps.size() != sets.branch_count()) throw InvalidInput("epsilon count does not match the branch count");
    VerificationReport rep;
    rep.statement = "lambda-p";
    rep.params = lambda_params(sets, eps, options);
    rep.params["p"] = 1 << options.k;

    RatioSetup setup;
    setup.n = options.k;
    if (options.k == 1) {
        setup.bound = max_abs(eps);
        setup.bound_source = "max |epsilon_i| (disjoint coordinate projections on L^2)";
    } else if (options.k == 2) {
        auto c = certified_constant(sets.ball().group_ptr(), sets.family().m, sets.family().delta);
        setup.bound = c.value;
        setup.bound_source = c.derivation;
    }
    run_ratios(sets, eps, options, setup, rep);
    rep.finalize();
    rep.elapsed_seconds = clock.seconds();
    return rep;
}

VerificationReport kfold_experiment(const BranchSets& sets, const std::vector<Complex>& eps, int k, int n,
                                    LambdaOptions options) {
    Stopwatch clock;
    if (k < 1) throw InvalidInput("k-fold needs k >= 1");
    if (n < 1 || n > k + 1) throw InvalidInput("k-fold needs 1 <= n <= k + 1");
    if (eps.size() != sets.branch_count()) throw InvalidInput("epsilon count does not match the branch count");
    auto disjoint = check_branch_disjointness(sets, k);
    if (!disjoint.disjoint()) {
        const auto& ov = disjoint.overlaps.front();
        throw InvalidInput("k-fold hypothesis fails: L^{" + std::to_string(k) + "delta} of branches " +
                           std::to_string(ov.i) + " and " + std::to_string(ov.j) + " share " +
                           sets.ball().group().format(sets.ball().vertex(ov.vertices.front())));
    }
    options.k = n;
    VerificationReport rep;
    rep.statement = "k-fold";
    rep.params = lambda_params(sets, eps, options);
    rep.params.erase("k");
    rep.params["fold_k"] = k;
    rep.params["n"] = n;
    rep.params["p"] = 1 << n;

    RatioSetup setup;
    setup.n = n;
    setup.level = k + 1 - n;
    setup.kind = setup.level == 0 ? SetKind::CalL : SetKind::CalLThick;
    rep.params["support_multiple"] = setup.level;
    if (n == 1) {
        setup.bound = max_abs(eps);
        setup.bound_source = "max |epsilon_i| (disjoint coordinate projections on L^2)";
    } else if (n == 2 && setup.level == 0) {
        auto c = certified_constant(sets.ball().group_ptr(), sets.family().m, sets.family().delta);
        setup.bound = c.value;
        setup.bound_source = c.derivation;
    }
    run_ratios(sets, eps, options, setup, rep);
    rep.finalize();
    rep.elapsed_seconds = clock.seconds();
    return rep;
}

BranchFamily commutator_family(const Ball& ball, const Element& a, double delta,
                               const std::vector<double>& remark_radii) {
    auto la = ball.length(a);
    if (!la) throw Uncertified("radius too small: point " + ball.group().format(a) + " lies outside the ball");
    if (*la > ball.radius()) throw InvalidInput("point a must lie inside the ball");
    if (!(delta > 0)) throw InvalidInput("delta must be positive");
    std::vector<std::pair<Element, int>> sphere;
    for (std::size_t v = 0; v < ball.core_size(); ++v) {
        if (ball.layer(v) != *la) continue;
        auto d = ball.exact_distance(ball.vertex(v), a);
        if (!d) throw Uncertified("distance on the sphere is not certified");
        sphere.emplace_back(ball.vertex(v), *d);
    }
    auto outside = [&](double r, bool punctured) {
        std::vector<Element> out;
        const int reach = strict_ball_reach(r);
        for (const auto& [x, d] : sphere)
            if (d > reach || (punctured && d == 0)) out.push_back(x);
        return out;
    };
    BranchFamily fam;
    fam.m = *la;
    fam.delta = delta;
    fam.branches.push_back({a});
    fam.branches.push_back(outside(4 * delta, false));
    fam.branches.push_back(outside(4 * delta, true));
    for (double r : remark_radii) {
        fam.branches.push_back(outside(r, true));
        fam.branches.push_back(outside(r, false));
    }
    return fam;
}

VerificationReport commutator_check(std::shared_ptr<const Ball> ball_ptr, const Element& a, const Element& g,
                                    double delta, std::vector<double> remark_radii) {
    Stopwatch clock;
    const Ball& ball = *ball_ptr;
    const Group& G = ball.group();
    BranchSets sets(ball_ptr, commutator_family(ball, a, delta, remark_radii));
    const std::size_t slot = sets.level_slot(1);
    const int m = sets.family().m;
    auto lg = ball.length(g);
    if (!lg) throw Uncertified("radius too small: " + G.format(g) + " lies outside the ball");
    const Element ginv = must_invert(ball, g);
    const double h_min = *lg + m + delta;
    const int N = ball.radius();

    VerificationReport rep;
    rep.statement = "commutator";
    rep.params["group"] = describe_group(G);
    rep.params["N"] = N;
    rep.params["margin"] = ball.working_radius() - N;
    rep.params["a"] = G.format(a);
    rep.params["g"] = G.format(g);
    rep.params["m"] = m;
    rep.params["delta"] = delta;
    rep.params["remark_radii"] = remark_radii;

    const std::size_t core = ball.core_size();
    std::vector<Element> shifted(core);
    for (std::size_t v = 0; v < core; ++v) {
        auto p = ball.multiply(ball.vertex(v), ginv);
        if (p) shifted[v] = *p;
    }
    sets.prefetch(shifted);

    // 0: zero action, 1: nonzero, 2: uncertified
    std::vector<char> action(core, 0);
    parallel_for(core, [&](std::size_t v) {
        try {
            if (!ball.multiply(ball.vertex(v), ginv)) throw Uncertified("product outside the ball");
            const bool before = sets.at(v).has(0, SetKind::LThick, slot);
            const bool after = sets.lookup(shifted[v]).has(0, SetKind::LThick, slot);
            action[v] = before != after;
        } catch (const Uncertified&) {
            action[v] = 2;
        }
    });

    std::vector<Element> nonzero;
    std::size_t nonzero_prev = 0;
    for (std::size_t v = 0; v < core; ++v) {
        const Element& h = ball.vertex(v);
        if (action[v] == 2) {
            ++rep.uncertified;
            continue;
        }
        if (action[v] == 1) {
            nonzero.push_back(h);
            nonzero_prev += ball.layer(v) < N;
        }
        const Membership mem = sets.at(v);
        const bool eligible = (mem.has(0, SetKind::CalL) || mem.has(1, SetKind::CalL)) && ball.layer(v) >= h_min;
        if (!eligible) continue;
        ++rep.cases;
        if (action[v] == 1)
            rep.add_violation({{h},
                               {{"h", G.format(h)},
                                {"h_g_inverse", G.format(shifted[v])},
                                {"h_in_L_B_delta_a", sets.at(v).has(0, SetKind::LThick, slot)}}});
    }
    if (rep.violation_count) rep.notes.push_back(note_theorem);

    int longest = -1;
    for (const auto& h : nonzero) longest = std::max(longest, *ball.length(h));
    std::vector<Element> listed(nonzero.begin(), nonzero.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(
                                                                       nonzero.size(), 1000)));
    rep.details["eligible_min_length"] = h_min;
    rep.details["nonzero_action"] = {{"count", nonzero.size()},
                                     {"count_previous_radius", nonzero_prev},
                                     {"stable", nonzero_prev == nonzero.size()},
                                     {"max_length", longest},
                                     {"elements", format_all(G, listed)}};
    rep.extremal["nonzero_action_max_length"] = longest;

    // 𝓛_{a} Δ L_{B_δ(a)}: index set of 𝓟°_{B_δ(a)} - 𝓟°_{a} after inversion.
    std::size_t diff = 0, diff_prev = 0, clash = 0;
    for (std::size_t v = 0; v < core; ++v) {
        const Membership mem = sets.at(v);
        if (mem.has(0, SetKind::CalL) != mem.has(0, SetKind::LThick, slot)) {
            ++diff;
            diff_prev += ball.layer(v) < N;
        }
        clash += mem.has(0, SetKind::CalLThick, slot) && mem.has(1, SetKind::CalL);
    }
    rep.details["projection_difference"] = {
        {"count", diff}, {"count_previous_radius", diff_prev}, {"stable", diff == diff_prev}};
    rep.details["calL_ball_meets_far_sphere"] = clash;

    auto complement = [&](std::size_t branch, int radius) {
        std::size_t c = 0;
        for (std::size_t v = 0; v < ball.count_within(radius); ++v) c += !sets.at(v).has(branch, SetKind::CalL);
        return c;
    };
    auto complement_json = [&](std::size_t branch) {
        const std::size_t now = complement(branch, N), prev = N > 0 ? complement(branch, N - 1) : now;
        return Json{{"count", now}, {"count_previous_radius", prev}, {"growing", now > prev}};
    };
    rep.details["complement_punctured_4delta"] = complement_json(2);

    Json remark = Json::array();
    for (std::size_t k = 0; k < remark_radii.size(); ++k) {
        Json entry = {{"r", remark_radii[k]}};
        for (int punct = 0; punct < 2; ++punct) {
            const std::size_t branch = 3 + 2 * k + static_cast<std::size_t>(punct);
            std::size_t meet = 0;
            for (std::size_t v = 0; v < core; ++v) {
                const Membership mem = sets.at(v);
                meet += mem.has(0, SetKind::LThick, slot) && mem.has(branch, SetKind::LBall, slot);
            }
            Json c = complement_json(branch);
            c["L_B_delta_a_meets_L_delta"] = meet;
            c["predicate_holds_in_ball"] = meet == 0 && !c["growing"].get<bool>();
            entry[punct == 0 ? "punctured" : "unpunctured"] = c;
        }
        remark.push_back(entry);
    }
    rep.details["remark"] = remark;
    rep.finalize();
    rep.elapsed_seconds = clock.seconds();
    return rep;
}

} // namespace hypbranch
