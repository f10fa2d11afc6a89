// Command-line experiment runner.
//
//   wgqed run <config> [--seed N] [--out DIR] [--threads N]
//   wgqed validate <config>
//   wgqed list-experiments
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <wgqed/experiments.hpp>

#include <cstdint>
#include <iostream>
#include <optional>

namespace ex = wgqed::experiments;

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

void report(const char* kind, const std::string& message) {
    ex::json err{{"error", kind}, {"message", message}};
    std::cerr << err.dump() << "\n";
}

ex::ExperimentConfig load(const std::string& path, std::optional<std::uint64_t> seed, std::optional<int> threads) {
    std::ifstream in(path);
    if (!in) throw wgqed::ConfigError("cannot open config file " + path);
    ex::json j;
    try {
        j = ex::json::parse(in, nullptr, true, true);
    } catch (const ex::json::parse_error& e) {
        throw wgqed::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw wgqed::ConfigError("config: expected an object");
    if (seed) j["seed"] = *seed;
    if (threads) j["threads"] = *threads;
    return ex::parse_config(j);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Waveguide emitter simulations"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;

    auto* run = app.add_subcommand("run", "run an experiment");
    run->add_option("config", config_path, "config file (JSON)")->required();
    run->add_option("--seed", seed, "override the config seed");
    run->add_option("--out", out_dir, "output directory (default: config 'output' or ./results)");
    run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    auto* validate = app.add_subcommand("validate", "check a config without running it");
    validate->add_option("config", config_path, "config file (JSON)")->required();

    auto* list = app.add_subcommand("list-experiments", "print the available experiments");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : exit_config;
    }

    if (*list) {
        for (const auto& name : ex::experiment_names())
            std::cout << name << "\t" << ex::experiment_descriptions().at(name) << "\n";
        return 0;
    }

    try {
        const auto config = load(config_path, seed, threads);
        if (*validate) {
            std::cout << "ok: " << config.experiment << "\n";
            return 0;
        }
        if (out_dir.empty()) out_dir = config.raw.value("output", std::string("results"));
        const auto bundle = ex::run(config);
        for (const auto& p : ex::write_bundle(bundle, out_dir)) std::cout << p.string() << "\n";
        for (const auto& w : bundle.diagnostics.warnings) std::cerr << "warning: " << w << "\n";
        return 0;
    } catch (const wgqed::ConfigError& e) {
        report("config", e.what());
        return exit_config;
    } catch (const wgqed::InvalidArgument& e) {
        report("config", e.what());
        return exit_config;
    } catch (const wgqed::NumericalError& e) {
        report("numerical", e.what());
        return exit_numerical;
    } catch (const std::exception& e) {
        report("runtime", e.what());
        return 1;
    }
}
