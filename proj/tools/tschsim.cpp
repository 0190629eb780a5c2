#include "tsch/compare.hpp"
#include "tsch/scenario.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <iostream>
#include <thread>

namespace {

enum Exit : int { kOk = 0, kConfigError = 1, kRuntimeError = 2, kVerdictFail = 3 };

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"TSCH network simulator with MSF and EMSF scheduling functions"};
    app.require_subcommand(1);

    auto* simulate = app.add_subcommand("simulate", "Run a scenario file and write CSV results");
    std::filesystem::path scenarioFile, outDir;
    std::optional<std::uint32_t> replicas;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> sf;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    simulate->add_option("scenario", scenarioFile, "Scenario YAML file")->required();
    simulate->add_option("--out", outDir, "Output directory")->required();
    simulate->add_option("--replicas", replicas, "Replicas per sweep point")->check(CLI::PositiveNumber);
    simulate->add_option("--seed", seed, "Base seed");
    simulate->add_option("--sf", sf, "Scheduling function")->check(CLI::IsMember({"msf", "emsf"}));
    simulate->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);

    auto* compare = app.add_subcommand("compare", "Compare two result directories (A against baseline B)");
    std::filesystem::path dirA, dirB;
    compare->add_option("dirA", dirA, "Result directory of the candidate")->required();
    compare->add_option("dirB", dirB, "Result directory of the baseline")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    if (*simulate) {
        tsch::Scenario scenario;
        try {
            scenario = tsch::parseScenario(scenarioFile);
            if (replicas)
                scenario.replicas = *replicas;
            if (seed)
                scenario.config.seed = *seed;
            if (sf)
                scenario.config.schedulingFunction = *sf;
        } catch (const tsch::ScenarioError& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return kConfigError;
        }
        try {
            tsch::runScenario(scenario, outDir, jobs);
        } catch (const tsch::ConfigError& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return kConfigError;
        } catch (const tsch::TopologyError& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return kConfigError;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kRuntimeError;
        }
        std::cout << fmt::format("wrote {}\n", (outDir / "summary.csv").string());
        return kOk;
    }

    try {
        const auto report = tsch::compareRuns(dirA, dirB);
        tsch::printReport(std::cout, report);
        return report.allPass() ? kOk : kVerdictFail;
    } catch (const tsch::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}
