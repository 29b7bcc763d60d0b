#include "hypbranch/config.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "hypbranch/algebra.hpp"
#include "hypbranch/errors.hpp"
#include "hypbranch/parallel.hpp"
#include "hypbranch/thinness.hpp"

namespace hypbranch {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void bad(const std::string& field, const Json& value, const std::string& why) {
    throw InvalidInput(field + " = " + value.dump() + ": " + why);
}

void check_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) bad(path, obj, "must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) bad(path + "." + it.key(), it.value(), "unknown field");
    }
}

long long get_int(const Json& obj, const std::string& key, const std::string& path, std::optional<long long> def,
                  long long lo, long long hi) {
    const std::string field = path + "." + key;
    if (!obj.contains(key) || obj.at(key).is_null()) {
        if (!def) throw InvalidInput(field + " is required");
        return *def;
    }
    const Json& v = obj.at(key);
    if (!v.is_number_integer()) bad(field, v, "must be an integer");
    const long long x = v.get<long long>();
    if (x < lo || x > hi) bad(field, v, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
}

double get_real(const Json& obj, const std::string& key, const std::string& path, std::optional<double> def,
                double lo, double hi, bool open_lo = false) {
    const std::string field = path + "." + key;
    if (!obj.contains(key) || obj.at(key).is_null()) {
        if (!def) throw InvalidInput(field + " is required");
        return *def;
    }
    const Json& v = obj.at(key);
    if (!v.is_number()) bad(field, v, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x) || x > hi || x < lo || (open_lo && x == lo))
        bad(field, v, std::string("must lie in ") + (open_lo ? "(" : "[") + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
    return x;
}

std::string get_string(const Json& obj, const std::string& key, const std::string& path,
                       std::optional<std::string> def) {
    const std::string field = path + "." + key;
    if (!obj.contains(key) || obj.at(key).is_null()) {
        if (!def) throw InvalidInput(field + " is required");
        return *def;
    }
    if (!obj.at(key).is_string()) bad(field, obj.at(key), "must be a string");
    return obj.at(key).get<std::string>();
}

bool get_bool(const Json& obj, const std::string& key, const std::string& path, bool def) {
    if (!obj.contains(key) || obj.at(key).is_null()) return def;
    if (!obj.at(key).is_boolean()) bad(path + "." + key, obj.at(key), "must be true or false");
    return obj.at(key).get<bool>();
}

std::vector<std::string> get_strings(const Json& v, const std::string& field) {
    if (!v.is_array()) bad(field, v, "must be a list of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string()) bad(field + "[" + std::to_string(i) + "]", v[i], "must be a string");
        out.push_back(v[i].get<std::string>());
    }
    return out;
}

std::string canonical_word(const Group& G, const Json& v, const std::string& field) {
    if (!v.is_string()) bad(field, v, "must be a word string");
    try {
        return G.format(G.parse(v.get<std::string>()));
    } catch (const InvalidInput& e) {
        bad(field, v, e.what());
    }
}

Complex parse_complex(const Json& v, const std::string& field) {
    if (v.is_number()) return v.get<double>();
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    bad(field, v, "must be a number or a [re, im] pair");
}

const std::vector<std::string> kTaskTypes = {"ball",          "delta",          "branches",    "check-geodesic-lemma",
                                             "check-inclusion", "check-identity", "check-habg", "lambda-p",
                                             "kfold",         "commutator",     "export-dot"};

bool needs_branches(const std::string& type) {
    return type != "ball" && type != "delta" && type != "check-geodesic-lemma" && type != "commutator";
}

Json normalize_lambda(const Json& t, const std::string& path, const Json& out_root, int N, Json& o) {
    o["sampler"] = get_string(t, "sampler", path, "rademacher");
    parse_sampler(o["sampler"].get<std::string>());
    o["samples"] = get_int(t, "samples", path, 200, 1, 1'000'000);
    o["seed"] = t.contains("seed") ? Json(get_int(t, "seed", path, 0, 0, INT64_MAX)) : out_root["seed"];
    Json radii = Json::array();
    if (t.contains("radii") && !t.at("radii").is_null()) {
        if (!t.at("radii").is_array() || t.at("radii").empty()) bad(path + ".radii", t.at("radii"), "must be a non-empty list");
        for (std::size_t i = 0; i < t.at("radii").size(); ++i) {
            Json holder = {{"r", t.at("radii")[i]}};
            radii.push_back(get_int(holder, "r", path + ".radii[" + std::to_string(i) + "]", std::nullopt, 0, N));
        }
    } else {
        radii.push_back(N);
    }
    o["radii"] = radii;
    o["stability"] = get_real(t, "stability", path, 0.05, 0, 10);
    o["variant"] = get_string(t, "variant", path, "calH");
    parse_variant(o["variant"].get<std::string>());
    o["product_cap"] = get_int(t, "product_cap", path, static_cast<long long>(AlgebraElement::kDefaultProductCap), 1,
                               INT64_MAX);
    return o;
}

Json normalize_task(const Json& t, std::size_t index, const Json& out_root, const GroupPtr& G) {
    const std::string path = "tasks[" + std::to_string(index) + "]";
    if (!t.is_object()) bad(path, t, "must be an object");
    const std::string type = get_string(t, "type", path, std::nullopt);
    if (std::find(kTaskTypes.begin(), kTaskTypes.end(), type) == kTaskTypes.end())
        bad(path + ".type", t.at("type"), "unknown task type");
    if (needs_branches(type) && !out_root.contains("branches"))
        bad(path + ".type", t.at("type"), "task needs a branches block");
    const int N = out_root["geometry"]["N"].get<int>();
    const double delta = out_root["geometry"]["delta"].get<double>();
    Json o;
    o["type"] = type;
    if (type == "ball") {
        check_keys(t, path, {"type"});
    } else if (type == "delta") {
        check_keys(t, path, {"type", "exhaustive", "samples", "radius", "triangle_cap", "seed"});
        o["exhaustive"] = get_bool(t, "exhaustive", path, true);
        o["samples"] = get_int(t, "samples", path, 2000, 1, 100'000'000);
        o["radius"] = get_int(t, "radius", path, N, 0, N);
        o["triangle_cap"] = get_int(t, "triangle_cap", path, 2'000'000, 1, INT64_MAX);
        o["seed"] = t.contains("seed") ? Json(get_int(t, "seed", path, 0, 0, INT64_MAX)) : out_root["seed"];
    } else if (type == "branches") {
        check_keys(t, path, {"type", "multiples"});
        Json m = Json::array();
        if (t.contains("multiples")) {
            if (!t.at("multiples").is_array()) bad(path + ".multiples", t.at("multiples"), "must be a list");
            for (std::size_t i = 0; i < t.at("multiples").size(); ++i) {
                Json holder = {{"r", t.at("multiples")[i]}};
                m.push_back(get_int(holder, "r", path + ".multiples[" + std::to_string(i) + "]", std::nullopt, 0,
                                    static_cast<long long>(BranchSets::kMaxLevels)));
            }
        } else {
            m = out_root["branches"]["thickenings"];
        }
        o["multiples"] = m;
    } else if (type == "check-geodesic-lemma") {
        check_keys(t, path, {"type", "a", "delta"});
        Json def_a = out_root.contains("branches") && !out_root["branches"]["sets"].empty() &&
                             !out_root["branches"]["sets"][0].empty()
                         ? out_root["branches"]["sets"][0][0]
                         : Json();
        if (!t.contains("a") && def_a.is_null()) throw InvalidInput(path + ".a is required");
        o["a"] = canonical_word(*G, t.contains("a") ? t.at("a") : def_a, path + ".a");
        o["delta"] = get_real(t, "delta", path, delta, 0, 1e6, true);
    } else if (type == "check-inclusion") {
        check_keys(t, path, {"type"});
    } else if (type == "check-identity") {
        check_keys(t, path, {"type", "radius", "pairs", "variant", "tolerance", "seed"});
        o["radius"] = get_int(t, "radius", path, N, 0, N);
        if (!t.contains("pairs") || (t.at("pairs").is_string() && t.at("pairs") == "all"))
            o["pairs"] = "all";
        else
            o["pairs"] = get_int(t, "pairs", path, std::nullopt, 1, 100'000'000);
        o["variant"] = get_string(t, "variant", path, "H_thick");
        parse_variant(o["variant"].get<std::string>());
        o["tolerance"] = get_real(t, "tolerance", path, 1e-12, 0, 1, true);
        o["seed"] = t.contains("seed") ? Json(get_int(t, "seed", path, 0, 0, INT64_MAX)) : out_root["seed"];
    } else if (type == "check-habg") {
        check_keys(t, path, {"type", "radius", "variant", "tolerance"});
        o["radius"] = get_int(t, "radius", path, N, 0, N);
        o["variant"] = get_string(t, "variant", path, "H_thick");
        parse_variant(o["variant"].get<std::string>());
        o["tolerance"] = get_real(t, "tolerance", path, 1e-12, 0, 1, true);
    } else if (type == "lambda-p") {
        check_keys(t, path, {"type", "k", "p", "sampler", "samples", "seed", "radii", "stability", "variant",
                             "product_cap"});
        if (t.contains("p")) {
            const long long p = get_int(t, "p", path, std::nullopt, 2, 64);
            if (p & (p - 1)) bad(path + ".p", t.at("p"), "must be a power of two");
            int k = 0;
            while ((1LL << k) < p) ++k;
            o["k"] = k;
        } else {
            o["k"] = get_int(t, "k", path, 2, 1, 6);
        }
        normalize_lambda(t, path, out_root, N, o);
    } else if (type == "kfold") {
        check_keys(t, path, {"type", "k", "n", "sampler", "samples", "seed", "radii", "stability", "variant",
                             "product_cap"});
        o["k"] = get_int(t, "k", path, 1, 1, static_cast<long long>(BranchSets::kMaxLevels) - 1);
        o["n"] = get_int(t, "n", path, 2, 1, o["k"].get<long long>() + 1);
        normalize_lambda(t, path, out_root, N, o);
    } else if (type == "commutator") {
        check_keys(t, path, {"type", "a", "g", "N", "delta", "remark_radii"});
        o["a"] = canonical_word(*G, t.contains("a") ? t.at("a") : Json(), path + ".a");
        o["g"] = canonical_word(*G, t.contains("g") ? t.at("g") : Json(), path + ".g");
        o["N"] = get_int(t, "N", path, N, 0, 64);
        o["delta"] = get_real(t, "delta", path, delta, 0, 1e6, true);
        Json r = Json::array();
        if (t.contains("remark_radii")) {
            if (!t.at("remark_radii").is_array()) bad(path + ".remark_radii", t.at("remark_radii"), "must be a list");
            for (std::size_t i = 0; i < t.at("remark_radii").size(); ++i) {
                Json holder = {{"r", t.at("remark_radii")[i]}};
                r.push_back(get_real(holder, "r", path + ".remark_radii[" + std::to_string(i) + "]", std::nullopt, 0,
                                     1e6, true));
            }
        }
        o["remark_radii"] = r;
    } else if (type == "export-dot") {
        check_keys(t, path, {"type", "radius", "file"});
        o["radius"] = get_int(t, "radius", path, N, 0, N);
        o["file"] = get_string(t, "file", path, "");
    }
    return o;
}

std::set<int> needed_levels(const Json& cfg) {
    std::set<int> levels{1};
    if (cfg.contains("branches"))
        for (const auto& r : cfg["branches"]["thickenings"]) levels.insert(r.get<int>());
    for (const auto& t : cfg["tasks"]) {
        const std::string type = t["type"];
        if (type == "branches")
            for (const auto& r : t["multiples"]) levels.insert(r.get<int>());
        if (type == "kfold") {
            const int k = t["k"], n = t["n"];
            levels.insert(k);
            if (k + 1 - n > 0) levels.insert(k + 1 - n);
        }
    }
    return levels;
}

std::string hex64(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

BranchFamily family_from(const Group& G, const Json& b, double delta) {
    BranchFamily fam;
    fam.m = b["m"].get<int>();
    fam.delta = delta;
    for (const auto& set : b["sets"]) {
        std::vector<Element> branch;
        for (const auto& w : set) branch.push_back(G.parse(w.get<std::string>()));
        fam.branches.push_back(std::move(branch));
    }
    for (const auto& e : b["epsilon"]) fam.epsilon.emplace_back(e[0].get<double>(), e[1].get<double>());
    return fam;
}

LambdaOptions lambda_from(const Json& t) {
    LambdaOptions o;
    o.k = t.value("k", 2);
    o.sampler = parse_sampler(t["sampler"]);
    o.seed = t["seed"].get<std::uint64_t>();
    o.samples = t["samples"].get<std::size_t>();
    o.radii = t["radii"].get<std::vector<int>>();
    o.stability = t["stability"];
    o.variant = parse_variant(t["variant"]);
    o.product_cap = t["product_cap"].get<std::size_t>();
    return o;
}

VerificationReport ball_report(const Ball& ball) {
    VerificationReport rep;
    rep.statement = "ball";
    rep.params["group"] = describe_group(ball.group());
    rep.params["N"] = ball.radius();
    rep.params["margin"] = ball.working_radius() - ball.radius();
    rep.cases = ball.core_size();
    rep.details["layer_sizes"] = ball.layer_sizes();
    rep.details["core_vertices"] = ball.core_size();
    rep.details["working_radius"] = ball.working_radius();
    rep.details["working_vertices"] = ball.size();
    return rep;
}

VerificationReport delta_report(const Ball& ball, const Json& t, double delta) {
    DeltaOptions o;
    o.exhaustive = t["exhaustive"];
    o.samples = t["samples"];
    o.radius = t["radius"];
    o.triangle_cap = t["triangle_cap"];
    o.seed = t["seed"];
    const auto start = std::chrono::steady_clock::now();
    auto est = estimate_delta(ball, o);
    const Group& G = ball.group();
    VerificationReport rep;
    rep.statement = "slimness";
    rep.params["group"] = describe_group(G);
    rep.params["N"] = ball.radius();
    rep.params["delta"] = delta;
    rep.params["exhaustive"] = o.exhaustive;
    rep.params["samples"] = o.samples;
    rep.params["seed"] = o.seed;
    rep.params["radius"] = est.radius;
    rep.cases = est.triangles;
    rep.uncertified = est.uncertified;
    rep.extremal["slimness"] = est.value;
    rep.extremal["strict_ball_reach_of_delta"] = strict_ball_reach(delta);
    if (est.witness_side >= 0) {
        rep.extremal["triangle"] = {{"y", G.format(est.witness_y)},
                                    {"z", G.format(est.witness_z)},
                                    {"side", est.witness_side},
                                    {"p", G.format(est.witness_p)}};
    }
    rep.notes.push_back("measured slimness is a lower bound for the constant of the whole Cayley graph");
    if (est.value > strict_ball_reach(delta)) {
        rep.add_violation({{est.witness_y, est.witness_z},
                           {{"y", G.format(est.witness_y)},
                            {"z", G.format(est.witness_z)},
                            {"p", G.format(est.witness_p)},
                            {"slimness", est.value}}});
        rep.notes.push_back("configured delta does not exceed the measured slimness; strict balls B_delta miss "
                            "the far point");
    }
    rep.finalize();
    rep.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

void write_file(const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << body;
}

} // namespace

GroupSpec group_spec_from(const Json& g) {
    const std::string family = g.at("family");
    if (family == "free") {
        GroupSpec s;
        s.family = Family::Free;
        s.generators = g.at("generators").get<std::vector<std::string>>();
        return s;
    }
    if (family == "free_product_cyclic")
        return GroupSpec::free_product_cyclic(g.at("orders").get<std::vector<int>>(),
                                              g.at("generators").get<std::vector<std::string>>());
    return GroupSpec::dehn(g.at("generators").get<std::vector<std::string>>(),
                           g.at("relators").get<std::vector<std::string>>());
}

Json normalize_config(const Json& raw) {
    check_keys(raw, "config", {"group", "geometry", "branches", "seed", "tasks", "output"});
    Json out;

    if (!raw.contains("group")) throw InvalidInput("group is required");
    const Json& g = raw.at("group");
    const std::string family = get_string(g, "family", "group", std::nullopt);
    Json ng;
    ng["family"] = family;
    if (family == "free") {
        check_keys(g, "group", {"family", "rank", "generators"});
        if (g.contains("generators")) {
            ng["generators"] = get_strings(g.at("generators"), "group.generators");
        } else {
            ng["generators"] =
                GroupSpec::free_group(static_cast<int>(get_int(g, "rank", "group", std::nullopt, 1, 26))).generators;
        }
    } else if (family == "free_product_cyclic") {
        check_keys(g, "group", {"family", "orders", "generators"});
        if (!g.contains("orders") || !g.at("orders").is_array()) bad("group.orders", g.value("orders", Json()), "must be a list");
        std::vector<int> orders;
        for (std::size_t i = 0; i < g.at("orders").size(); ++i) {
            Json holder = {{"o", g.at("orders")[i]}};
            orders.push_back(static_cast<int>(get_int(holder, "o", "group.orders[" + std::to_string(i) + "]",
                                                      std::nullopt, 0, 1'000'000)));
        }
        ng["orders"] = orders;
        ng["generators"] = g.contains("generators") ? get_strings(g.at("generators"), "group.generators")
                                                    : GroupSpec::free_product_cyclic(orders).generators;
    } else if (family == "dehn") {
        check_keys(g, "group", {"family", "generators", "relators"});
        if (!g.contains("generators")) throw InvalidInput("group.generators is required");
        if (!g.contains("relators")) throw InvalidInput("group.relators is required");
        ng["generators"] = get_strings(g.at("generators"), "group.generators");
        ng["relators"] = get_strings(g.at("relators"), "group.relators");
    } else {
        bad("group.family", g.at("family"), "expected free, free_product_cyclic or dehn");
    }
    GroupPtr G;
    try {
        G = make_group(group_spec_from(ng));
    } catch (const InvalidInput& e) {
        bad("group", g, e.what());
    }
    out["group"] = ng;

    if (!raw.contains("geometry")) throw InvalidInput("geometry is required");
    const Json& geo = raw.at("geometry");
    check_keys(geo, "geometry", {"N", "margin", "delta", "vertex_cap"});
    Json ngeo;
    ngeo["N"] = get_int(geo, "N", "geometry", std::nullopt, 0, 64);
    ngeo["delta"] = get_real(geo, "delta", "geometry", 1.0, 0, 1e6, true);
    ngeo["vertex_cap"] = get_int(geo, "vertex_cap", "geometry", static_cast<long long>(Ball::kDefaultVertexCap), 1,
                                 INT64_MAX);
    out["geometry"] = ngeo;

    if (raw.contains("branches") && !raw.at("branches").is_null()) {
        const Json& b = raw.at("branches");
        check_keys(b, "branches", {"m", "sets", "epsilon", "thickenings"});
        if (!b.contains("sets") || !b.at("sets").is_array() || b.at("sets").empty())
            bad("branches.sets", b.value("sets", Json()), "must be a non-empty list of word lists");
        Json sets = Json::array();
        int longest = 0;
        for (std::size_t i = 0; i < b.at("sets").size(); ++i) {
            const std::string field = "branches.sets[" + std::to_string(i) + "]";
            const Json& set = b.at("sets")[i];
            if (!set.is_array()) bad(field, set, "must be a list of words");
            Json words = Json::array();
            for (std::size_t k = 0; k < set.size(); ++k) {
                const std::string w = canonical_word(*G, set[k], field + "[" + std::to_string(k) + "]");
                if (auto len = G->closed_form_length(G->parse(w))) longest = std::max(longest, *len);
                words.push_back(w);
            }
            sets.push_back(words);
        }
        Json nb;
        nb["m"] = get_int(b, "m", "branches", longest, 0, 64);
        if (nb["m"].get<int>() < longest)
            bad("branches.m", b.at("m"), "smaller than the longest branch point (" + std::to_string(longest) + ")");
        nb["sets"] = sets;
        Json eps = Json::array();
        if (b.contains("epsilon") && !b.at("epsilon").is_null()) {
            const Json& e = b.at("epsilon");
            if (!e.is_array() || e.size() != sets.size())
                bad("branches.epsilon", e, "must list one value per branch (" + std::to_string(sets.size()) + ")");
            for (std::size_t i = 0; i < e.size(); ++i) {
                const std::string field = "branches.epsilon[" + std::to_string(i) + "]";
                const Complex c = parse_complex(e[i], field);
                if (!std::isfinite(c.real()) || !std::isfinite(c.imag()) || std::abs(c) > 1 + 1e-12)
                    bad(field, e[i], "|epsilon| must be <= 1");
                eps.push_back(Json::array({c.real(), c.imag()}));
            }
        } else {
            for (std::size_t i = 0; i < sets.size(); ++i) eps.push_back(Json::array({i % 2 ? -1.0 : 1.0, 0.0}));
        }
        nb["epsilon"] = eps;
        Json th = Json::array({1});
        if (b.contains("thickenings")) {
            if (!b.at("thickenings").is_array()) bad("branches.thickenings", b.at("thickenings"), "must be a list");
            std::set<long long> levels{1};
            for (std::size_t i = 0; i < b.at("thickenings").size(); ++i) {
                Json holder = {{"r", b.at("thickenings")[i]}};
                levels.insert(get_int(holder, "r", "branches.thickenings[" + std::to_string(i) + "]", std::nullopt, 0,
                                      static_cast<long long>(BranchSets::kMaxLevels)));
            }
            th = Json(std::vector<long long>(levels.begin(), levels.end()));
        }
        nb["thickenings"] = th;
        out["branches"] = nb;
    }

    out["seed"] = raw.contains("seed") ? Json(get_int(raw, "seed", "config", 1, 0, INT64_MAX)) : Json(1);

    Json tasks = Json::array();
    if (raw.contains("tasks")) {
        if (!raw.at("tasks").is_array()) bad("tasks", raw.at("tasks"), "must be a list");
        for (std::size_t i = 0; i < raw.at("tasks").size(); ++i)
            tasks.push_back(normalize_task(raw.at("tasks")[i], i, out, G));
    }
    out["tasks"] = tasks;

    // Margin default: W = N + 2m + ceil(max multiple * delta).
    const int m = out.contains("branches") ? out["branches"]["m"].get<int>() : 0;
    const auto levels = needed_levels(out);
    if (levels.size() > BranchSets::kMaxLevels)
        throw InvalidInput("at most " + std::to_string(BranchSets::kMaxLevels) + " thickening multiples may be used");
    const int default_margin =
        2 * m + static_cast<int>(std::ceil(*levels.rbegin() * out["geometry"]["delta"].get<double>()));
    out["geometry"]["margin"] = get_int(geo, "margin", "geometry", default_margin, 0, 128);

    Json output;
    output["dir"] = "hypbranch-out";
    if (raw.contains("output")) {
        check_keys(raw.at("output"), "output", {"dir"});
        output["dir"] = get_string(raw.at("output"), "dir", "output", "hypbranch-out");
    }
    out["output"] = output;
    return out;
}

void apply_override(Json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidInput("override '" + assignment + "' must be key=value");
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    Json* node = &config;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw InvalidInput("override key '" + key + "' has an empty component");
        Json* next = nullptr;
        if (node->is_array()) {
            std::size_t idx = 0;
            try {
                idx = std::stoul(part);
            } catch (...) {
                throw InvalidInput("override key '" + key + "': '" + part + "' is not an index");
            }
            if (idx >= node->size()) throw InvalidInput("override key '" + key + "': index " + part + " out of range");
            next = &(*node)[idx];
        } else {
            if (!node->is_object() && !node->is_null())
                throw InvalidInput("override key '" + key + "': '" + part + "' addresses into a scalar");
            next = &(*node)[part];
        }
        if (dot == std::string::npos) {
            *next = value;
            return;
        }
        node = next;
        start = dot + 1;
    }
}

std::uint64_t config_hash(const Json& normalized) {
    // nlohmann::json keeps object keys sorted, so key order in the file does not matter.
    nlohmann::json copy = nlohmann::json::parse(normalized.dump());
    copy.erase("output");
    return fnv1a64(copy.dump());
}

std::string export_dot(const BranchSets& sets, int radius) {
    static const char* palette[] = {"firebrick", "royalblue", "forestgreen", "darkorange", "purple",
                                    "turquoise4", "goldenrod", "deeppink3",   "sienna",     "olivedrab"};
    const Ball& ball = sets.ball();
    const Group& G = ball.group();
    const std::size_t n = ball.count_within(std::min(radius, ball.radius()));
    std::size_t overlaps = 0;
    std::vector<int> color(n, -1);
    for (std::size_t v = 0; v < n; ++v) {
        const Membership mem = sets.at(v);
        int hits = 0;
        for (std::size_t i = 0; i < sets.branch_count(); ++i)
            if (mem.has(i, SetKind::CalL)) {
                if (color[v] < 0) color[v] = static_cast<int>(i);
                ++hits;
            }
        overlaps += hits > 1;
    }
    std::ostringstream os;
    os << "// " << n << " vertices with |g| <= " << radius << "\n";
    os << "// overlaps: " << overlaps << " vertices lie in more than one calL set; the first listed branch colors them\n";
    os << "digraph cayley {\n  node [style=filled, fontname=\"Helvetica\"];\n";
    for (std::size_t i = 0; i < sets.branch_count(); ++i)
        os << "  // branch " << i << ": " << palette[i % std::size(palette)] << "\n";
    for (std::size_t v = 0; v < n; ++v) {
        os << "  n" << v << " [label=\"" << G.format(ball.vertex(v)) << "\", fillcolor="
           << (color[v] < 0 ? "gray80" : palette[static_cast<std::size_t>(color[v]) % std::size(palette)]) << "];\n";
    }
    for (std::size_t v = 0; v < n; ++v) {
        for (Letter l : G.cayley_letters()) {
            const int w = ball.neighbor(v, l);
            if (w < 0 || static_cast<std::size_t>(w) >= n) continue;
            const bool involution = std::find(G.cayley_letters().begin(), G.cayley_letters().end(),
                                              formal_inverse(l)) == G.cayley_letters().end();
            if (letter_is_inverse(l) && !involution) continue;
            if (involution && static_cast<std::size_t>(w) < v) continue;
            os << "  n" << v << " -> n" << w << " [label=\"" << G.format_word(std::string(1, l)) << "\"";
            if (involution) os << ", dir=none";
            os << "];\n";
        }
    }
    os << "}\n";
    return os.str();
}

RunResult run_config(const Json& cfg, std::ostream& log) {
    const auto run_start = std::chrono::steady_clock::now();
    const fs::path dir = cfg["output"]["dir"].get<std::string>();
    fs::create_directories(dir);

    GroupPtr G = make_group(group_spec_from(cfg["group"]));
    const int N = cfg["geometry"]["N"], margin = cfg["geometry"]["margin"];
    const double delta = cfg["geometry"]["delta"];
    const std::size_t cap = cfg["geometry"]["vertex_cap"];
    const auto levels_set = needed_levels(cfg);
    const std::vector<int> levels(levels_set.begin(), levels_set.end());

    std::shared_ptr<const Ball> ball;
    std::shared_ptr<const BranchSets> sets;
    auto get_ball = [&] {
        if (!ball) ball = std::make_shared<const Ball>(Ball::enumerate(G, N, margin, cap));
        return ball;
    };
    auto get_sets = [&] {
        if (!sets) sets = std::make_shared<const BranchSets>(get_ball(), family_from(*G, cfg["branches"], delta), levels);
        return sets;
    };
    auto eps = [&] { return get_sets()->family().signs(); };

    RunResult result;
    Json entries = Json::array();
    const auto& tasks = cfg["tasks"];
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const Json& t = tasks[i];
        const std::string type = t["type"];
        std::ostringstream stem;
        stem << std::setw(2) << std::setfill('0') << i + 1 << "-" << type;
        Json entry = {{"index", i + 1}, {"type", type}};
        const auto start = std::chrono::steady_clock::now();
        try {
            std::optional<VerificationReport> rep;
            if (type == "ball") {
                rep = ball_report(*get_ball());
            } else if (type == "delta") {
                rep = delta_report(*get_ball(), t, delta);
            } else if (type == "branches") {
                rep = check_branches(*get_sets(), t["multiples"].get<std::vector<int>>());
            } else if (type == "check-geodesic-lemma") {
                rep = check_geodesic_lemma(*get_ball(), G->parse(t["a"].get<std::string>()), t["delta"]);
            } else if (type == "check-inclusion") {
                rep = check_inclusion_lemma(*get_sets());
            } else if (type == "check-identity") {
                auto s = get_sets();
                auto pairs = t["pairs"].is_string()
                                 ? eligible_identity_pairs(*s, t["radius"])
                                 : sample_identity_pairs(*s, t["pairs"].get<std::size_t>(), t["seed"], t["radius"]);
                rep = check_operator_identity(*s, eps(), pairs, parse_variant(t["variant"]), t["tolerance"]);
                rep->params["pair_selection"] = t["pairs"];
                rep->params["pair_radius"] = t["radius"];
                rep->params["seed"] = t["seed"];
            } else if (type == "check-habg") {
                rep = check_habg(*get_sets(), eps(), t["radius"], parse_variant(t["variant"]), t["tolerance"]);
            } else if (type == "lambda-p") {
                rep = lambda_p_experiment(*get_sets(), eps(), lambda_from(t));
            } else if (type == "kfold") {
                rep = kfold_experiment(*get_sets(), eps(), t["k"], t["n"], lambda_from(t));
            } else if (type == "commutator") {
                const Element a = G->parse(t["a"].get<std::string>());
                const int n = t["N"];
                const double d = t["delta"];
                const Element g = G->parse(t["g"].get<std::string>());
                auto len = [&](const Element& x) {
                    auto l = G->closed_form_length(x);
                    if (!l) l = get_ball()->length(x);
                    if (!l) throw Uncertified("radius too small: cannot measure " + G->format(x));
                    return *l;
                };
                const int cm = std::max(margin, len(g) + 2 * len(a) + static_cast<int>(std::ceil(d)));
                auto b = n == N && margin >= cm ? get_ball()
                                                : std::make_shared<const Ball>(Ball::enumerate(G, n, cm, cap));
                rep = commutator_check(b, a, g, d,
                                       t["remark_radii"].get<std::vector<double>>());
            } else if (type == "export-dot") {
                const std::string file = t["file"].get<std::string>().empty() ? stem.str() + ".dot" : t["file"].get<std::string>();
                write_file(dir / file, export_dot(*get_sets(), t["radius"]));
                entry["file"] = file;
                entry["status"] = "done";
            }
            if (rep) {
                const std::string file = stem.str() + ".json";
                write_file(dir / file, rep->to_json(true).dump(2) + "\n");
                entry["file"] = file;
                entry["status"] = rep->pass() ? "pass" : "fail";
                entry["cases"] = rep->cases;
                entry["uncertified"] = rep->uncertified;
                entry["violations"] = rep->violation_count;
                if (!rep->pass()) result.exit_status = 1;
            }
        } catch (const std::exception& e) {
            entry["status"] = "error";
            entry["error"] = e.what();
            result.exit_status = 1;
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        entry["elapsed_seconds"] = secs;
        log << "[" << entry["status"].get<std::string>() << "] " << stem.str();
        if (entry.contains("cases"))
            log << ": " << entry["cases"].get<std::size_t>() << " cases, " << entry["violations"].get<std::size_t>()
                << " violations, " << entry["uncertified"].get<std::size_t>() << " uncertified";
        if (entry.contains("error")) log << ": " << entry["error"].get<std::string>();
        log << " (" << std::fixed << std::setprecision(2) << secs << " s)\n" << std::defaultfloat;
        entries.push_back(entry);
    }

    Json manifest;
    manifest["tool"] = "hypbranch";
    manifest["versions"] = {{"hypbranch", kVersion},
                            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                            {"eigen", linear_algebra_version()},
                            {"compiler", __VERSION__}};
    manifest["config_hash"] = hex64(config_hash(cfg));
    manifest["config"] = cfg;
    manifest["workers"] = worker_count();
    manifest["tasks"] = entries;
    manifest["exit_status"] = result.exit_status;
    manifest["timing"] = {
        {"elapsed_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start).count()}};
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    result.manifest = std::move(manifest);
    return result;
}

Json config_schema() {
    static const char* text = R"schema({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "hypbranch run configuration",
  "type": "object",
  "required": ["group", "geometry"],
  "additionalProperties": false,
  "properties": {
    "group": {
      "type": "object",
      "required": ["family"],
      "properties": {
        "family": {"enum": ["free", "free_product_cyclic", "dehn"]},
        "rank": {"type": "integer", "minimum": 1, "description": "free: number of generators"},
        "generators": {"type": "array", "items": {"type": "string"}},
        "orders": {"type": "array", "items": {"type": "integer", "minimum": 0},
                   "description": "free_product_cyclic: order of each factor, 0 for infinite"},
        "relators": {"type": "array", "items": {"type": "string"}, "description": "dehn: relator words"}
      }
    },
    "geometry": {
      "type": "object",
      "required": ["N"],
      "properties": {
        "N": {"type": "integer", "minimum": 0, "description": "radius of the materialized ball"},
        "margin": {"type": ["integer", "null"], "minimum": 0,
                   "description": "extra layers; default 2m + ceil(max multiple * delta)"},
        "delta": {"type": "number", "exclusiveMinimum": 0, "default": 1},
        "vertex_cap": {"type": "integer", "minimum": 1, "default": 4000000}
      }
    },
    "branches": {
      "type": "object",
      "required": ["sets"],
      "properties": {
        "m": {"type": "integer", "minimum": 0, "description": "default: longest branch point"},
        "sets": {"type": "array", "items": {"type": "array", "items": {"type": "string"}}},
        "epsilon": {"type": "array", "items": {"oneOf": [{"type": "number"},
                    {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}]},
                    "description": "one value per branch, |epsilon| <= 1; default alternating +1, -1"},
        "thickenings": {"type": "array", "items": {"type": "integer", "minimum": 0, "maximum": 9}}
      }
    },
    "seed": {"type": "integer", "minimum": 0, "default": 1},
    "tasks": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["type"],
        "properties": {
          "type": {"enum": ["ball", "delta", "branches", "check-geodesic-lemma", "check-inclusion",
                            "check-identity", "check-habg", "lambda-p", "kfold", "commutator", "export-dot"]},
          "a": {"type": "string"}, "g": {"type": "string"},
          "delta": {"type": "number"}, "N": {"type": "integer"},
          "radius": {"type": "integer"}, "radii": {"type": "array", "items": {"type": "integer"}},
          "multiples": {"type": "array", "items": {"type": "integer"}},
          "pairs": {"oneOf": [{"const": "all"}, {"type": "integer", "minimum": 1}]},
          "variant": {"enum": ["H", "calH", "H_thick", "H_delta"]},
          "tolerance": {"type": "number"},
          "k": {"type": "integer"}, "n": {"type": "integer"}, "p": {"type": "integer"},
          "sampler": {"enum": ["atoms", "random-complex", "rademacher"]},
          "samples": {"type": "integer"}, "seed": {"type": "integer"},
          "stability": {"type": "number"}, "product_cap": {"type": "integer"},
          "exhaustive": {"type": "boolean"}, "triangle_cap": {"type": "integer"},
          "remark_radii": {"type": "array", "items": {"type": "number"}},
          "file": {"type": "string"}
        }
      }
    },
    "output": {"type": "object", "properties": {"dir": {"type": "string", "default": "hypbranch-out"}}}
  }
})schema";
    return Json::parse(text);
}

} // namespace hypbranch
