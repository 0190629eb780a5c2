#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsch {

/// summary.csv missing, unreadable, or lacking a required column or metric.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SummaryTable {
    std::string sf;
    std::vector<std::string> sweepKeys; ///< file order
    /// (sweepKey, metric) -> mean
    std::map<std::pair<std::string, std::string>, double> mean;
};

SummaryTable readSummaryCsv(const std::filesystem::path& file);

struct ComparisonRow {
    std::string sweepKey;
    std::string metric;
    double a = 0;
    double b = 0;
    double delta() const { return a - b; }
};

struct Verdict {
    std::string claim;
    bool pass = false;
};

struct ComparisonReport {
    std::string sfA;
    std::string sfB;
    std::vector<ComparisonRow> rows;
    std::vector<Verdict> verdicts;

    bool allPass() const;
};

/// Compares dirA/summary.csv against dirB/summary.csv. Verdicts assert that A
/// improves on B: lower error ratio at every sweep point, a flatter overhead
/// curve, lower mean latency and lower average queue depth.
ComparisonReport compareRuns(const std::filesystem::path& dirA, const std::filesystem::path& dirB);

ComparisonReport compareTables(const SummaryTable& a, const SummaryTable& b);

/// Least-squares slope of y over x; needs at least two distinct x values.
std::optional<double> linearSlope(const std::vector<double>& x, const std::vector<double>& y);

void printReport(std::ostream& out, const ComparisonReport& report);

} // namespace tsch
