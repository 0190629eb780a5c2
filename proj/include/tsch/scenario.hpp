#pragma once

#include "tsch/engine.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsch {

/// Malformed or semantically invalid scenario; the message carries the line
/// number when one is known.
class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Sweep {
    std::string key = "nodes";
    std::vector<std::uint64_t> values;
};

struct Scenario {
    std::string name = "scenario";
    SimConfig config;
    std::optional<Sweep> sweep;
    std::uint32_t replicas = 1;
};

/// Parses the YAML scenario format documented in README.md. Unset fields
/// take the SimConfig defaults.
Scenario parseScenarioText(const std::string& text, const std::filesystem::path& baseDir = {});
Scenario parseScenario(const std::filesystem::path& file);

/// Fully resolved scenario, defaults included; parses back to the same
/// scenario.
std::string toYaml(const Scenario& s);

struct SweepPoint {
    std::string key; ///< e.g. "nodes=20", or "all" without a sweep
    std::optional<std::uint64_t> value;
    SimConfig config;
};

/// Sweep points in ascending order, each with its resolved configuration.
std::vector<SweepPoint> expandSweep(const Scenario& s);

struct RunResult {
    std::string sweepKey;
    std::uint64_t seed = 0;
    MetricsLog log;
};

struct SummaryRow {
    std::string sweepKey;
    std::string sf;
    std::string metric;
    double mean = 0;
    double stddev = 0;
    std::size_t n = 0;
};

/// Metric names in summary.csv, in output order.
const std::vector<std::string>& summaryMetrics();

/// Scalar value of a summary metric for one run; absent when undefined
/// (e.g. no transactions for errorRatio).
std::optional<double> summaryMetric(const MetricsLog& log, const std::string& metric);

std::vector<SummaryRow> summarize(const std::vector<RunResult>& runs, const std::string& sf,
                                  const std::vector<std::string>& sweepOrder);

/// Every sweep point x replica (seeds config.seed .. config.seed + replicas - 1),
/// ordered by sweep point then seed regardless of how the work was scheduled.
std::vector<RunResult> executeScenario(const Scenario& s, unsigned jobs = 1);

/// Writes the resolved scenario, per-run CSVs and summary.csv under outDir.
/// Throws std::filesystem::filesystem_error / std::runtime_error on I/O failure.
void runScenario(const Scenario& s, const std::filesystem::path& outDir, unsigned jobs = 1);

void writeSummaryCsv(std::ostream& out, const std::vector<SummaryRow>& rows);

} // namespace tsch
