#include "commands.hpp"

#include "soliton/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

using namespace soliton;
using namespace soliton::cli;

int main(int argc, char** argv)
{
    CLI::App app{"Density matrix and condensate fraction of quantum bright solitons"};
    app.set_version_flag("--version", SOLITON_VERSION);
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "key = value file; flags override it")->check(CLI::ExistingFile);

    std::map<std::string, std::string> flags;
    for (const auto& key : config_keys())
        app.add_option("--" + key, flags[key], help_for(key));

    const std::map<std::string, std::string> about = {
        {"matrix", "assemble rho and write matrix.bin, profile.csv, carpet.csv"},
        {"spectrum", "eigenvalues of dx rho into spectrum.csv"},
        {"scan-delta", "condensate fraction against delta, with the saturation fit"},
        {"scan-n", "optimal condensate fraction and variance against N, with the power-law fit"},
        {"validate", "analytic form factors against brute-force quadrature"},
        {"bench", "assembly time against the window size s"},
    };
    for (const auto& name : kCommands)
        app.add_subcommand(name, about.at(name))->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    RunConfig cfg;
    try {
        std::vector<std::pair<std::string, std::string>> given;
        for (const auto& key : config_keys())
            if (app.count("--" + key))
                given.emplace_back(key, flags[key]);
        cfg = resolve(app.get_subcommands().front()->get_name(), config_path, given);
        check(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    std::cout << "# " << cfg.command << ", config " << config_hash(cfg) << "\n"
              << canonical_text(cfg) << "out = " << cfg.out.string() << "\n\n";
    try {
        const RunResult result = run(cfg, std::cout);
        return result.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IntegrityError& e) {
        std::cerr << "integrity failure: " << e.what() << "\n";
        return kExitIntegrity;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}
