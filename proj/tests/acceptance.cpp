// Acceptance run: one PASS/FAIL line per criterion. Usage:
//   acceptance <path to hypbranch CLI> <config>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "hypbranch/config.hpp"
#include "hypbranch/errors.hpp"

using namespace hypbranch;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << detail << std::endl;
    failures += !ok;
}

void criterion(int id, const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
    const auto start = std::chrono::steady_clock::now();
    std::pair<bool, std::string> r;
    try {
        r = body();
    } catch (const std::exception& e) {
        r = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream os;
    os << r.second << " (" << std::fixed << std::setprecision(1) << secs << " s)";
    report(id, name, r.first, os.str());
}

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(6) << x;
    return os.str();
}

GroupPtr f2() { return make_group(GroupSpec::free_group(2)); }
GroupPtr fpc() { return make_group(GroupSpec::free_product_cyclic({4, 2}, {"t", "s"})); }

std::shared_ptr<const BranchSets> letters(const GroupPtr& g, int n, std::vector<Complex> eps = {}) {
    BranchFamily fam;
    fam.m = 1;
    fam.delta = 1;
    for (Letter l : g->cayley_letters()) fam.branches.push_back({g->generator(l)});
    fam.epsilon = std::move(eps);
    return std::make_shared<const BranchSets>(std::make_shared<const Ball>(Ball::enumerate(g, n, 4)), fam);
}

std::shared_ptr<const BranchSets> fpc_family(const GroupPtr& g, int n) {
    BranchFamily fam;
    fam.m = 2;
    fam.delta = 2;
    fam.branches = {{g->parse("t s")}, {g->parse("t^-1 s")}};
    return std::make_shared<const BranchSets>(std::make_shared<const Ball>(Ball::enumerate(g, n, 6)), fam);
}

std::string counts(const VerificationReport& r) {
    return std::to_string(r.cases) + " cases, " + std::to_string(r.violation_count) + " violations, " +
           std::to_string(r.uncertified) + " uncertified";
}

bool clean(const VerificationReport& r) { return r.pass() && r.uncertified == 0 && r.cases > 0; }

void strip_timing(nlohmann::json& j) {
    if (j.is_object()) {
        j.erase("timing");
        j.erase("elapsed_seconds");
        for (auto& [k, v] : j.items()) strip_timing(v);
    } else if (j.is_array()) {
        for (auto& v : j) strip_timing(v);
    }
}

nlohmann::json load_stripped(const fs::path& p) {
    std::ifstream in(p);
    auto j = nlohmann::json::parse(in);
    strip_timing(j);
    return j;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::cerr << "usage: acceptance <hypbranch CLI> <config>\n";
        return 2;
    }
    const std::string cli = argv[1], config = argv[2];

    criterion(1, "geodesic lemma sweep", [] {
        auto g = f2();
        const auto start = std::chrono::steady_clock::now();
        Ball ball = Ball::enumerate(g, 6, 0);
        auto free_rep = check_geodesic_lemma(ball, g->parse("a"), 1.0);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        auto h = fpc();
        auto fpc_rep = check_geodesic_lemma(Ball::enumerate(h, 5, 0), h->parse("t"), 2.0);
        return std::pair{clean(free_rep) && secs < 120 && clean(fpc_rep),
                         "F2 N=6 a=a delta=1: " + counts(free_rep) + " in " + fmt(secs) +
                             " s; FPC(4,2) N=5 a=t delta=2: " + counts(fpc_rep)};
    });

    criterion(2, "inclusion lemma sweep", [] {
        auto a = check_inclusion_lemma(*letters(f2(), 6));
        auto b = check_inclusion_lemma(*fpc_family(fpc(), 5));
        return std::pair{clean(a) && clean(b), "F2 letters N=6: " + counts(a) + "; FPC {ts},{t^-1 s} N=5: " + counts(b)};
    });

    criterion(3, "operator identity over all eligible pairs", [] {
        auto sets = letters(f2(), 5);
        auto pairs = eligible_identity_pairs(*sets);
        auto r = check_operator_identity(*sets, sets->family().signs(), pairs);
        const double dev = r.extremal["max_deviation"];
        return std::pair{clean(r) && r.cases >= 10000 && dev < 1e-12,
                         std::to_string(r.cases) + " pairs, max deviation " + fmt(dev) + " (< 1e-12, >= 1e4 pairs)"};
    });

    criterion(4, "calH = H_thick atomwise on the union of calL", [] {
        auto sets = letters(f2(), 5);
        auto r = check_habg(*sets, sets->family().signs());
        const double dev = r.extremal["max_deviation"];
        return std::pair{clean(r) && dev < 1e-12, counts(r) + ", max deviation " + fmt(dev)};
    });

    criterion(5, "exact moments", [] {
        auto g = f2();
        auto x = AlgebraElement::atom(g, g->parse("a")) + AlgebraElement::atom(g, g->parse("a^-1"));
        auto x2 = convolve(x, x);
        const double tau = trace_of_product(x2, x2).real();
        bool ok = std::abs(tau - 6.0) <= 1e-12;
        double worst = 0;
        for (const char* w : {"e", "a", "b^-1 a^3", "a b a^-1 b^-1"})
            for (int kk : {1, 2, 4})
                worst = std::max(worst, std::abs(lp_even_norm(AlgebraElement::atom(g, g->parse(w)), kk) - 1.0));
        ok = ok && worst <= 1e-12;
        return std::pair{ok, "tau((l_a + l_a^-1)^4) = " + fmt(tau) + ", max | ||l_g||_p - 1 | over p in {2,4,8} = " +
                                 fmt(worst)};
    });

    criterion(6, "certified L4 bound", [] {
        auto g = f2();
        auto c = certified_constant(g, 1, 1.0);
        const double expected = 1 + std::sqrt(2 + std::sqrt(53.0));
        auto sets = letters(g, 5);
        LambdaOptions o;
        o.k = 2;
        o.sampler = Sampler::Rademacher;
        o.samples = 200;
        o.seed = 1;
        o.radii = {4, 5};
        auto r = lambda_p_experiment(*sets, sets->family().signs(), o);
        const double change = r.details["max_ratio_relative_change"][0];
        const bool ok = c.ball_count == 53 && std::abs(c.value - expected) < 1e-12 && clean(r) &&
                        std::abs(change) <= 0.05;
        return std::pair{ok, "C = " + fmt(c.value) + " from |E| = " + std::to_string(c.ball_count) + "; max ratio " +
                                 fmt(r.extremal["max_ratio"].get<double>()) + " over " + std::to_string(r.cases) +
                                 " samples; radius 4 -> 5 change " + fmt(100 * change) + "% (within 5%)"};
    });

    criterion(7, "p = 2 contraction with unit signs", [] {
        auto g = f2();
        auto sets = letters(g, 5, std::vector<Complex>(4, 1.0));
        // The calL sets of distinct letters are disjoint in a free group.
        std::size_t overlap = 0;
        for (std::size_t v = 0; v < sets->ball().core_size(); ++v) {
            int hits = 0;
            for (std::size_t i = 0; i < 4; ++i) hits += sets->at(v).has(i, SetKind::CalL);
            overlap += hits > 1;
        }
        LambdaOptions o;
        o.k = 1;
        o.sampler = Sampler::RandomComplex;
        o.samples = 200;
        o.radii = {3, 4, 5};
        auto r = lambda_p_experiment(*sets, std::vector<Complex>(4, 1.0), o);
        const double mx = r.extremal["max_ratio"];
        return std::pair{clean(r) && overlap == 0 && mx <= 1 + 1e-9,
                         std::to_string(r.cases) + " samples, max ratio " + fmt(mx) + " (<= 1 + 1e-9)"};
    });

    criterion(8, "commutator vanishing", [] {
        auto g = f2();
        auto run = [&](int n) {
            return commutator_check(std::make_shared<const Ball>(Ball::enumerate(g, n, 6)), g->parse("a"),
                                    g->parse("b"), 1.0);
        };
        auto r5 = run(5), r6 = run(6);
        const auto& s5 = r5.details["nonzero_action"]["elements"];
        const auto& s6 = r6.details["nonzero_action"]["elements"];
        return std::pair{clean(r5) && clean(r6) && s5 == s6,
                         "N=5: " + counts(r5) + "; N=6: " + counts(r6) + "; nonzero-action sets of size " +
                             std::to_string(s5.size()) + " and " + std::to_string(s6.size()) +
                             (s5 == s6 ? " agree" : " differ")};
    });

    criterion(9, "spectral estimator", [] {
        auto g = f2();
        auto y = AlgebraElement::from_terms(g, {{g->parse("a"), {1.0, 2.0}},
                                                {g->parse("b^-1"), -0.5},
                                                {g->parse("a b"), {0.0, 1.0}},
                                                {g->identity(), 0.25}});
        const double d2 = std::abs(spectral_lp_estimate(y, 2.0, 4).value - y.l2_norm());
        auto x = AlgebraElement::atom(g, g->parse("a")) + AlgebraElement::atom(g, g->parse("a^-1"));
        const double p4 = spectral_lp_estimate(x, 4.0, 8).value;
        const double rel = std::abs(p4 / std::pow(6.0, 0.25) - 1);
        return std::pair{d2 <= 1e-9 && rel <= 0.02, "p=2 deviation " + fmt(d2) + " (<= 1e-9); p=4 at radius 8: " +
                                                        fmt(p4) + " vs 6^(1/4), relative error " + fmt(100 * rel) +
                                                        "% (<= 2%)"};
    });

    criterion(10, "reproducible reports", [&] {
        const fs::path base = fs::temp_directory_path() / "hypbranch-acceptance";
        fs::remove_all(base);
        int status = 0;
        for (const char* run : {"run1", "run2"}) {
            const std::string cmd = "\"" + cli + "\" run \"" + config + "\" --set output.dir=" +
                                    (base / run).string() + " 2> " + (base.string() + "-" + run + ".log");
            fs::create_directories(base);
            status |= std::system(cmd.c_str());
        }
        std::size_t files = 0, same = 0;
        for (const auto& entry : fs::directory_iterator(base / "run1")) {
            const auto name = entry.path().filename();
            const fs::path other = base / "run2" / name;
            if (!fs::exists(other)) continue;
            ++files;
            if (name.extension() == ".json") {
                auto a = load_stripped(entry.path()), b = load_stripped(other);
                if (name == "manifest.json") {
                    a["config"].erase("output");
                    b["config"].erase("output");
                }
                same += a.dump() == b.dump();
            } else {
                same += read_file(entry.path()) == read_file(other);
            }
        }
        std::size_t expected = 0;
        for ([[maybe_unused]] const auto& e : fs::directory_iterator(base / "run2")) ++expected;
        const bool ok = status == 0 && files > 1 && same == files && expected == files;
        return std::pair{ok, std::to_string(same) + " of " + std::to_string(files) +
                                 " output files identical after removing timing fields; CLI exit " +
                                 std::to_string(status)};
    });

    std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << std::endl;
    return failures ? 1 : 0;
}
