#include "tsch/compare.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace tsch {

namespace {

std::vector<std::string> splitCsv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ','))
        out.push_back(field);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

const std::vector<std::string> kRequiredMetrics{"errorRatio", "overheadBytes", "meanLatencyMs", "avgQueueDepth"};

std::optional<std::uint64_t> sweepValue(const std::string& key) {
    const auto eq = key.find('=');
    if (eq == std::string::npos)
        return std::nullopt;
    std::uint64_t v = 0;
    const char* first = key.data() + eq + 1;
    const char* last = key.data() + key.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        return std::nullopt;
    return v;
}

} // namespace

SummaryTable readSummaryCsv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in)
        throw SchemaError(fmt::format("cannot open {}", file.string()));
    std::string line;
    if (!std::getline(in, line))
        throw SchemaError(fmt::format("{}: empty file", file.string()));
    const auto header = splitCsv(line);
    auto column = [&](const char* name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw SchemaError(fmt::format("{}: missing column \"{}\"", file.string(), name));
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t cKey = column("sweepKey"), cSf = column("sf"), cMetric = column("metric"),
                      cMean = column("mean");

    SummaryTable t;
    std::size_t lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty())
            continue;
        const auto f = splitCsv(line);
        if (f.size() != header.size())
            throw SchemaError(fmt::format("{}:{}: expected {} fields, got {}", file.string(), lineNo, header.size(),
                                          f.size()));
        double mean = 0;
        try {
            std::size_t used = 0;
            mean = std::stod(f[cMean], &used);
            if (used != f[cMean].size())
                throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw SchemaError(fmt::format("{}:{}: bad mean \"{}\"", file.string(), lineNo, f[cMean]));
        }
        if (t.sf.empty())
            t.sf = f[cSf];
        if (std::find(t.sweepKeys.begin(), t.sweepKeys.end(), f[cKey]) == t.sweepKeys.end())
            t.sweepKeys.push_back(f[cKey]);
        t.mean[{f[cKey], f[cMetric]}] = mean;
    }
    if (t.sweepKeys.empty())
        throw SchemaError(fmt::format("{}: no rows", file.string()));
    for (const auto& key : t.sweepKeys)
        for (const auto& m : kRequiredMetrics)
            if (!t.mean.contains({key, m}))
                throw SchemaError(fmt::format("{}: metric \"{}\" missing for {}", file.string(), m, key));
    return t;
}

bool ComparisonReport::allPass() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

std::optional<double> linearSlope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        return std::nullopt;
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0)
        return std::nullopt;
    return sxy / sxx;
}

ComparisonReport compareTables(const SummaryTable& a, const SummaryTable& b) {
    if (a.sweepKeys != b.sweepKeys)
        throw SchemaError("summaries cover different sweep points");

    ComparisonReport r{a.sf, b.sf, {}, {}};
    for (const auto& key : a.sweepKeys)
        for (const auto& [k, va] : a.mean)
            if (k.first == key) {
                const auto it = b.mean.find(k);
                if (it == b.mean.end())
                    throw SchemaError(fmt::format("metric \"{}\" missing for {} in second summary", k.second, key));
                r.rows.push_back({key, k.second, va, it->second});
            }

    auto at = [](const SummaryTable& t, const std::string& key, const std::string& m) { return t.mean.at({key, m}); };
    auto everyPoint = [&](const std::string& metric) {
        return std::all_of(a.sweepKeys.begin(), a.sweepKeys.end(),
                           [&](const std::string& k) { return at(a, k, metric) < at(b, k, metric); });
    };
    const std::string la = a.sf.empty() ? "A" : a.sf, lb = b.sf.empty() ? "B" : b.sf;

    r.verdicts.push_back({fmt::format("{} errorRatio < {} errorRatio at every sweep point", la, lb),
                          everyPoint("errorRatio")});

    std::vector<double> xs, ya, yb;
    for (const auto& k : a.sweepKeys)
        if (const auto v = sweepValue(k)) {
            xs.push_back(static_cast<double>(*v));
            ya.push_back(at(a, k, "overheadBytes"));
            yb.push_back(at(b, k, "overheadBytes"));
        }
    const auto sa = linearSlope(xs, ya), sb = linearSlope(xs, yb);
    if (sa && sb && xs.size() == a.sweepKeys.size())
        r.verdicts.push_back({fmt::format("{} overhead slope {:.3f} < 0.4 x {} overhead slope {:.3f}", la, *sa, lb, *sb),
                              *sa < 0.4 * *sb});
    else
        r.verdicts.push_back({fmt::format("{} overheadBytes < {} overheadBytes at every sweep point", la, lb),
                              everyPoint("overheadBytes")});

    r.verdicts.push_back({fmt::format("{} meanLatencyMs < {} meanLatencyMs at every sweep point", la, lb),
                          everyPoint("meanLatencyMs")});
    r.verdicts.push_back({fmt::format("{} avgQueueDepth < {} avgQueueDepth at every sweep point", la, lb),
                          everyPoint("avgQueueDepth")});
    return r;
}

ComparisonReport compareRuns(const std::filesystem::path& dirA, const std::filesystem::path& dirB) {
    return compareTables(readSummaryCsv(dirA / "summary.csv"), readSummaryCsv(dirB / "summary.csv"));
}

void printReport(std::ostream& out, const ComparisonReport& report) {
    const std::string la = report.sfA.empty() ? "A" : report.sfA, lb = report.sfB.empty() ? "B" : report.sfB;
    fmt::print(out, "{:<12} {:<16} {:>14} {:>14} {:>14}\n", "sweepKey", "metric", la, lb, "delta");
    for (const auto& row : report.rows)
        fmt::print(out, "{:<12} {:<16} {:>14.4f} {:>14.4f} {:>+14.4f}\n", row.sweepKey, row.metric, row.a, row.b,
                   row.delta());
    out << '\n';
    for (const auto& v : report.verdicts)
        fmt::print(out, "{}: {}\n", v.claim, v.pass ? "PASS" : "FAIL");
}

} // namespace tsch
