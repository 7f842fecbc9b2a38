#include "skewgraph/experiments.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

namespace {

int cmd_presets() {
    for (const auto& [name, blurb] : skewgraph::preset_catalog())
        std::printf("%-18s %s\n", name.c_str(), blurb.c_str());
    return 0;
}

void print_findings(const std::vector<std::string>& findings) {
    for (const std::string& f : findings) std::fprintf(stderr, "finding: %s\n", f.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"step skew products over Markov shifts: build, simulate, verify"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::uint64_t seed_override = 0;

    CLI::App* run = app.add_subcommand("run", "run an experiment described by a config file");
    run->add_option("config", config_path, "config file path")->required();
    CLI::Option* out_opt =
        run->add_option("--out", out_override, "output directory (overrides `output`)");
    CLI::Option* seed_opt =
        run->add_option("--seed", seed_override, "RNG seed (overrides `seed`)");

    CLI::App* validate = app.add_subcommand("validate", "check a config without running it");
    validate->add_option("config", config_path, "config file path")->required();

    CLI::App* presets = app.add_subcommand("presets", "list built-in system presets");

    CLI11_PARSE(app, argc, argv);

    if (presets->parsed()) return cmd_presets();

    try {
        skewgraph::Config cfg = skewgraph::Config::parse_file(config_path);
        if (run->parsed()) {
            if (*seed_opt) cfg.set("seed", {std::to_string(seed_override)});
            if (*out_opt) cfg.set("output", {out_override});
        }

        std::vector<std::string> findings = skewgraph::validate_config(cfg);
        if (validate->parsed()) {
            if (findings.empty()) {
                std::printf("ok\n");
                return 0;
            }
            print_findings(findings);
            return 2;
        }
        if (!findings.empty()) {
            print_findings(findings);
            return 2;
        }

        std::string out_dir = cfg.get_string_or("output", "out");
        skewgraph::RunResult rr = skewgraph::run_experiment(cfg, out_dir);
        if (!rr.message.empty()) std::fprintf(stderr, "%s\n", rr.message.c_str());
        std::printf("wrote %s/results.json\n", out_dir.c_str());
        return rr.exit_code;
    } catch (const skewgraph::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
