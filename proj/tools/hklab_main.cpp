// hklab command-line tool: solve / picard / particles / sweep / dispersion /
// threshold subcommands over the periodic nonlocal opinion model.

#include <iostream>
#include <string>
#include <vector>

#include "hklab/cli.hpp"

namespace {

constexpr const char* usage_text =
    "usage: hklab <command> [--config PATH] [--key value ...]\n"
    "\n"
    "commands:\n"
    "  solve       integrate the density equation, write diagnostics + final field\n"
    "  picard      frozen-drift fixed-point solve of the same problem\n"
    "  particles   Euler-Maruyama agent simulation, write histogram snapshots\n"
    "  sweep       (radius, sigma2) phase-diagram sweep, write sweep.csv + curves.csv\n"
    "  dispersion  linear growth-rate table over modes k = m*pi/ell\n"
    "  threshold   stability thresholds for the configured (ell, radius)\n"
    "\n"
    "common flags: --config PATH --out DIR --seed U64 --grid M --ell F --radius F\n"
    "              --sigma2 F --dt F --t-end F --workers N\n"
    "any config-file key can also be passed as --key value (flags win).\n";

std::string flag_to_key(const std::string& flag) {
    std::string key = flag.substr(2);
    for (char& ch : key)
        if (ch == '-') ch = '_';
    // spec-mandated aliases
    if (key == "grid") return "grid_m";
    if (key == "out") return "out_dir";
    return key;
}

hklab::RunConfig parse_args(const std::vector<std::string>& args) {
    hklab::RunConfig config;
    // first pass: config file, so that flags override it
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw hklab::config_error("config: --config needs a path");
            hklab::apply_config_file(config, args[i + 1]);
        }
    }
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a.rfind("--", 0) != 0)
            throw hklab::config_error("config: unexpected argument '" + a + "'");
        if (i + 1 >= args.size())
            throw hklab::config_error("config: flag " + a + " needs a value");
        const std::string value = args[++i];
        if (a == "--config") continue;
        hklab::apply_config_entry(config, flag_to_key(a), value);
    }
    return config;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << usage_text;
        return 2;
    }
    const std::string command = argv[1];
    if (command == "--help" || command == "-h" || command == "help") {
        std::cout << usage_text;
        return 0;
    }
    try {
        const hklab::RunConfig config =
            parse_args(std::vector<std::string>(argv + 2, argv + argc));
        if (command == "solve")
            hklab::cmd_solve(config);
        else if (command == "picard")
            hklab::cmd_picard(config);
        else if (command == "particles")
            hklab::cmd_particles(config);
        else if (command == "sweep")
            hklab::cmd_sweep(config);
        else if (command == "dispersion")
            hklab::cmd_dispersion(config);
        else if (command == "threshold")
            hklab::cmd_threshold(config, std::cout);
        else
            throw hklab::config_error("config: unknown command '" + command + "'");
    } catch (const hklab::config_error& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const hklab::numerical_error& e) {
        std::cerr << "error: numerical: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
