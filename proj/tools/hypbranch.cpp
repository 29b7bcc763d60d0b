#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "hypbranch/config.hpp"
#include "hypbranch/errors.hpp"

using namespace hypbranch;

namespace {

Json load(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config " + path);
    Json raw = Json::parse(in, nullptr, false);
    if (raw.is_discarded()) throw InvalidInput(path + " is not valid JSON");
    for (const auto& o : overrides) apply_override(raw, o);
    return normalize_config(raw);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Branch transforms on hyperbolic Cayley graphs"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config;
    std::vector<std::string> overrides;

    auto* run = app.add_subcommand("run", "Run every task of a config and write reports");
    run->add_option("config", config, "JSON config file")->required();
    run->add_option("--set", overrides, "Override a field, e.g. --set geometry.N=5");

    auto* validate = app.add_subcommand("validate", "Check a config and print its normalized form");
    validate->add_option("config", config, "JSON config file")->required();
    validate->add_option("--set", overrides, "Override a field");

    app.add_subcommand("schema", "Print the config JSON schema");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("schema")) {
            std::cout << config_schema().dump(2) << "\n";
            return 0;
        }
        Json cfg = load(config, overrides);
        if (app.got_subcommand("validate")) {
            std::cout << cfg.dump(2) << "\n";
            return 0;
        }
        auto result = run_config(cfg, std::cerr);
        std::cerr << "reports in " << cfg["output"]["dir"].get<std::string>() << ", exit status "
                  << result.exit_status << "\n";
        return result.exit_status;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
