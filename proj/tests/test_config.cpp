#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hypbranch/config.hpp"
#include "hypbranch/errors.hpp"

using namespace hypbranch;
namespace fs = std::filesystem;

namespace {

Json f2_raw() {
    return Json::parse(R"({
      "group": {"family": "free", "rank": 2},
      "geometry": {"N": 3},
      "branches": {"sets": [["a"], ["b"], ["a^-1"], ["b^-1"]]},
      "tasks": [{"type": "check-inclusion"}, {"type": "lambda-p", "p": 4, "samples": 5}]
    })");
}

std::string error_of(const Json& raw) {
    try {
        normalize_config(raw);
    } catch (const InvalidInput& e) {
        return e.what();
    }
    return "";
}

std::size_t count(const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
    return n;
}

} // namespace

TEST_CASE("normalization fills defaults") {
    auto cfg = normalize_config(f2_raw());
    CHECK(cfg["group"]["generators"] == Json({"a", "b"}));
    CHECK(cfg["geometry"]["delta"] == 1.0);
    // 2m + ceil(1 * δ)
    CHECK(cfg["geometry"]["margin"] == 3);
    CHECK(cfg["branches"]["m"] == 1);
    CHECK(cfg["branches"]["epsilon"][1] == Json({-1.0, 0.0}));
    CHECK(cfg["tasks"][1]["k"] == 2);
    CHECK(cfg["tasks"][1]["radii"] == Json({3}));
    CHECK(cfg["output"]["dir"] == "hypbranch-out");
    // Normalizing twice is a fixed point.
    CHECK(normalize_config(cfg) == cfg);

    auto raw = f2_raw();
    raw["branches"]["sets"][0][0] = "a b b^-1";
    CHECK(normalize_config(raw)["branches"]["sets"][0][0] == "a");
}

TEST_CASE("validation names the field") {
    auto raw = f2_raw();
    raw["branches"]["epsilon"] = {1, 2, 1, -1};
    auto msg = error_of(raw);
    CHECK(msg.find("branches.epsilon[1]") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);

    raw = f2_raw();
    raw["geometry"]["dleta"] = 1;
    CHECK(error_of(raw).find("geometry.dleta") != std::string::npos);

    raw = f2_raw();
    raw["branches"]["m"] = 0;
    CHECK(error_of(raw).find("branches.m") != std::string::npos);

    raw = f2_raw();
    raw["tasks"][0]["type"] = "check-everything";
    CHECK(error_of(raw).find("tasks[0].type") != std::string::npos);

    raw = f2_raw();
    raw["branches"]["sets"][1][0] = "c";
    CHECK(error_of(raw).find("branches.sets[1][0]") != std::string::npos);

    raw = f2_raw();
    raw["group"]["family"] = "surface";
    CHECK(!error_of(raw).empty());

    raw = f2_raw();
    raw["tasks"][1]["p"] = 6;
    CHECK(error_of(raw).find("power of two") != std::string::npos);

    raw = f2_raw();
    raw.erase("branches");
    CHECK(error_of(raw).find("branches") != std::string::npos);
}

TEST_CASE("overrides and hashing") {
    auto raw = f2_raw();
    apply_override(raw, "geometry.N=4");
    apply_override(raw, "tasks.1.samples=7");
    apply_override(raw, "output.dir=/tmp/elsewhere");
    CHECK(raw["geometry"]["N"] == 4);
    CHECK(raw["tasks"][1]["samples"] == 7);
    CHECK(raw["output"]["dir"] == "/tmp/elsewhere");
    CHECK_THROWS_AS(apply_override(raw, "novalue"), InvalidInput);
    CHECK_THROWS_AS(apply_override(raw, "tasks.9.k=1"), InvalidInput);

    const auto base = config_hash(normalize_config(f2_raw()));
    auto moved = f2_raw();
    moved["output"] = {{"dir", "x"}};
    CHECK(config_hash(normalize_config(moved)) == base);
    // Key order in the file does not matter.
    auto reordered = Json::parse(R"({
      "tasks": [{"type": "check-inclusion"}, {"samples": 5, "p": 4, "type": "lambda-p"}],
      "branches": {"sets": [["a"], ["b"], ["a^-1"], ["b^-1"]]},
      "geometry": {"N": 3},
      "group": {"rank": 2, "family": "free"}
    })");
    CHECK(config_hash(normalize_config(reordered)) == base);
    auto other = f2_raw();
    other["seed"] = 2;
    CHECK(config_hash(normalize_config(other)) != base);
}

TEST_CASE("dot export") {
    auto G = make_group(GroupSpec::free_group(2));
    BranchFamily fam;
    fam.m = 1;
    for (Letter l : G->cayley_letters()) fam.branches.push_back({G->generator(l)});
    BranchSets sets(std::make_shared<const Ball>(Ball::enumerate(G, 3, 3)), fam);
    auto dot = export_dot(sets, 2);
    CHECK(count(dot, "[label=") == 17 + 16);
    CHECK(count(dot, "fillcolor=gray80") == 1);
    CHECK(dot.find("overlaps: 0") != std::string::npos);

    auto trivial = export_dot(sets, 0);
    CHECK(count(trivial, "fillcolor=") == 1);
    CHECK(trivial.find("label=\"e\", fillcolor=gray80") != std::string::npos);

    // Involutions give one undirected edge per pair.
    auto H = make_group(GroupSpec::free_product_cyclic({2, 2}, {"s", "u"}));
    BranchFamily inv;
    inv.m = 1;
    inv.branches = {{H->parse("s")}};
    BranchSets hs(std::make_shared<const Ball>(Ball::enumerate(H, 2, 3)), inv);
    auto hd = export_dot(hs, 2);
    CHECK(count(hd, "dir=none") == 4);
}

TEST_CASE("run writes reports and a manifest") {
    const fs::path dir = fs::temp_directory_path() / "hypbranch-test-config";
    fs::remove_all(dir);
    auto raw = f2_raw();
    raw["tasks"] = Json::parse(R"([{"type": "export-dot", "radius": 1}])");
    raw["output"] = {{"dir", dir.string()}};
    std::ostringstream log;
    auto result = run_config(normalize_config(raw), log);
    CHECK(result.exit_status == 0);
    CHECK(fs::exists(dir / "01-export-dot.dot"));
    CHECK(!fs::exists(dir / "01-export-dot.json"));
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(result.manifest["tasks"][0]["status"] == "done");

    raw["tasks"] = Json::parse(R"([{"type": "check-inclusion"}, {"type": "lambda-p", "p": 4, "samples": 2, "product_cap": 10}])");
    raw["geometry"]["N"] = 2;
    result = run_config(normalize_config(raw), log);
    CHECK(result.exit_status == 1);
    CHECK(result.manifest["tasks"][0]["status"] == "pass");
    CHECK(fs::exists(dir / "01-check-inclusion.json"));
    CHECK(result.manifest["tasks"][1]["status"] == "error");
    CHECK(result.manifest["tasks"][1]["error"].get<std::string>().find("exceeds cap") != std::string::npos);
    fs::remove_all(dir);
}
