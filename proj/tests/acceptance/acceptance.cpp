// Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include "tsch/core.hpp"
#include "tsch/engine.hpp"
#include "tsch/scenario.hpp"
#include "tsch/scheduling.hpp"
#include "tsch/telemetry.hpp"

#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <fmt/format.h>

#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace tsch;

namespace {

struct Result {
    bool pass = false;
    std::string detail;
};

unsigned jobs() {
    return std::max(1u, std::thread::hardware_concurrency());
}

std::filesystem::path scenarioPath(const char* name) {
    return std::filesystem::path(TSCH_SCENARIO_DIR) / name;
}

// Runs of one scenario under one scheduling function, cached so that two
// criteria sharing a configuration share the simulation work.
const std::vector<RunResult>& runs(const char* file, const std::string& sf) {
    static std::map<std::string, std::vector<RunResult>> cache;
    Scenario s = parseScenario(scenarioPath(file));
    s.config.schedulingFunction = sf;
    s.name.clear();
    const std::string key = toYaml(s);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, executeScenario(s, jobs())).first;
    return it->second;
}

// Mean of a per-run metric at each sweep point, in sweep order.
std::vector<std::pair<std::string, double>> perPoint(const std::vector<RunResult>& rs, const std::string& metric) {
    std::vector<std::pair<std::string, double>> out;
    std::map<std::string, std::pair<double, int>> acc;
    for (const auto& r : rs) {
        if (!acc.contains(r.sweepKey))
            out.emplace_back(r.sweepKey, 0.0);
        if (const auto v = summaryMetric(r.log, metric)) {
            acc[r.sweepKey].first += *v;
            ++acc[r.sweepKey].second;
        } else {
            acc.try_emplace(r.sweepKey, 0.0, 0);
        }
    }
    for (auto& [key, value] : out) {
        const auto& [sum, n] = acc[key];
        value = n ? sum / n : NAN;
    }
    return out;
}

std::uint64_t sweepValue(const std::string& key) {
    return std::stoull(key.substr(key.find('=') + 1));
}

bool close(double got, double want) {
    return std::abs(got - want) <= 1e-9 * std::abs(want);
}

Result formulas() {
    int failed = 0, checked = 0;
    auto check = [&](bool ok) {
        ++checked;
        failed += !ok;
    };
    const auto hop = HoppingConfig::ieee2450();
    const SlotframeParams sf;
    check(computeAsn(0, 101, 0).value == 0);
    check(computeAsn(2, 101, 5).value == 207);
    check(computeAsn(7, 101, 100).value == 807);
    for (auto bad : {std::array<std::int64_t, 3>{0, 101, 101}, {-1, 101, 0}, {0, 101, -1}}) {
        bool threw = false;
        try {
            computeAsn(bad[0], bad[1], bad[2]);
        } catch (const std::invalid_argument&) {
            threw = true;
        }
        check(threw);
    }
    check(hopFrequency(0, Asn{0}, hop) == 11);
    check(hopFrequency(3, Asn{16}, hop) == 14);
    check(hopFrequency(5, Asn{27}, hop) == 11);
    check(slotCoordinates(Asn{0}, sf) == SlotCoordinates{0, 0});
    check(slotCoordinates(Asn{207}, sf) == SlotCoordinates{2, 5});
    check(slotCoordinates(Asn{100}, sf) == SlotCoordinates{0, 100});

    // Mass evaluated directly from the definition as the oracle.
    auto oracle = [](std::uint64_t n, double l) {
        return std::pow(l, static_cast<double>(n)) / std::tgamma(static_cast<double>(n) + 1.0) * std::exp(-l);
    };
    check(close(poissonPmf(0, 1.0), oracle(0, 1.0)));
    check(close(poissonPmf(0, 1.0), std::exp(-1.0)));
    check(poissonPmf(0, 0.0) == 1.0);
    check(close(poissonPmf(2, 3.0), oracle(2, 3.0)));
    check(close(poissonPmf(2, 3.0), 4.5 * std::exp(-3.0)));

    auto history = [](std::initializer_list<int> xs) {
        TrafficHistory h(10);
        for (int x : xs)
            h.record(x);
        return h;
    };
    check(computeLambda(history({3, 3, 3, 3, 3, 3, 3, 3, 3, 3})) == 3.0);
    check(computeLambda(history({2, 2, 2, 2, 2, 7, 7, 7, 7, 7})) == 4.5);
    check(computeLambda(history({0, 0, 0})) == 0.0);
    return {failed == 0, fmt::format("{}/{} examples exact", checked - failed, checked)};
}

Result poissonMode() {
    Rng rng(20240601);
    boost::random::uniform_real_distribution<double> dist(0.0, 40.0);
    int agree = 0;
    const int trials = 1000;
    for (int i = 0; i < trials; ++i) {
        const double l = dist(rng);
        const auto last = static_cast<std::uint64_t>(std::ceil(l)) + 50;
        std::uint64_t best = 0;
        double bestMass = -1;
        for (std::uint64_t n = 0; n <= last; ++n) {
            const double m = std::pow(l, static_cast<double>(n)) / std::tgamma(static_cast<double>(n) + 1.0) * std::exp(-l);
            if (m > bestMass) {
                best = n;
                bestMass = m;
            }
        }
        agree += predictPacketCount(l) == best;
    }
    return {agree == trials, fmt::format("{}/{} agree with brute-force argmax", agree, trials)};
}

Result conservation() {
    Rng rng(777);
    int violations = 0, runsDone = 0;
    std::uint32_t worstQueue = 0, worstTx = 0;
    for (int i = 0; i < 50; ++i) {
        boost::random::uniform_int_distribution<std::size_t> nodes(2, 30);
        SimConfig cfg;
        cfg.nodeCount = nodes(rng);
        cfg.seed = 1000 + static_cast<std::uint64_t>(i);
        cfg.slotframeCount = 100;
        cfg.pdrRange = std::pair{0.5, 1.0};
        cfg.schedulingFunction = i % 2 ? "emsf" : "msf";
        Simulator sim(cfg);
        sim.run();
        for (const auto& c : sim.log().frameCounters) {
            if (c.generated != c.delivered + c.droppedRetry + c.droppedOverflow + c.queued)
                ++violations;
            worstQueue = std::max(worstQueue, c.maxQueueDepth);
            worstTx = std::max(worstTx, c.maxTransmissionsPerHop);
        }
        ++runsDone;
    }
    const bool ok = violations == 0 && worstQueue <= 5 && worstTx <= 5;
    return {ok, fmt::format("{} runs, {} conservation violations, max queue {}, max transmissions per hop {}",
                            runsDone, violations, worstQueue, worstTx)};
}

Result errorRatioTrend() {
    const auto emsf = perPoint(runs("error-ratio.yaml", "emsf"), "errorRatio");
    const auto msf = perPoint(runs("error-ratio.yaml", "msf"), "errorRatio");
    bool below = true, bounded = true;
    std::string detail;
    for (std::size_t i = 0; i < emsf.size(); ++i) {
        below &= emsf[i].second < msf[i].second;
        bounded &= emsf[i].second <= 0.10;
        detail += fmt::format("{}{}: emsf {:.4f} msf {:.4f}", i ? "; " : "", emsf[i].first, emsf[i].second,
                              msf[i].second);
    }
    return {below && bounded, detail};
}

double slope(const std::vector<std::pair<std::string, double>>& pts) {
    double mx = 0, my = 0;
    for (const auto& [k, v] : pts) {
        mx += static_cast<double>(sweepValue(k));
        my += v;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxy = 0, sxx = 0;
    for (const auto& [k, v] : pts) {
        const double dx = static_cast<double>(sweepValue(k)) - mx;
        sxy += dx * (v - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

Result overheadTrend() {
    const auto emsf = perPoint(runs("overhead.yaml", "emsf"), "overheadBytes");
    const auto msf = perPoint(runs("overhead.yaml", "msf"), "overheadBytes");
    const double se = slope(emsf), sm = slope(msf);
    return {se < 0.4 * sm, fmt::format("slope emsf {:.1f} B/node, msf {:.1f} B/node, ratio {:.3f}", se, sm, se / sm)};
}

// Mean over replicas of each frame's mean delivered-packet latency.
std::map<std::uint64_t, double> frameLatency(const std::vector<RunResult>& rs) {
    std::map<std::uint64_t, std::pair<double, int>> acc;
    for (const auto& r : rs)
        for (const auto& f : latencyPerFrame(r.log)) {
            acc[f.frame].first += f.meanMs;
            ++acc[f.frame].second;
        }
    std::map<std::uint64_t, double> out;
    for (const auto& [f, a] : acc)
        out[f] = a.first / a.second;
    return out;
}

double pooledMedianMs(const std::vector<RunResult>& rs) {
    std::vector<double> xs;
    for (const auto& r : rs)
        for (const auto& p : r.log.packetRecords)
            if (p.delivery)
                xs.push_back(static_cast<double>(p.delivery->value - p.birth.value) * r.log.slotDurationMs);
    if (xs.empty())
        return NAN;
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

Result latencyTrend() {
    const auto& e = runs("latency-trace.yaml", "emsf");
    const auto& m = runs("latency-trace.yaml", "msf");
    const auto fe = frameLatency(e), fm = frameLatency(m);
    const auto cfg = parseScenario(scenarioPath("latency-trace.yaml")).config;
    const std::uint64_t warmup = cfg.scheduling.emsf.beta;
    int better = 0, frames = 0;
    for (const auto& [f, v] : fe) {
        if (f < warmup || !fm.contains(f))
            continue;
        ++frames;
        better += v < fm.at(f);
    }
    const double share = frames ? static_cast<double>(better) / frames : 0.0;
    const double median = pooledMedianMs(e);
    const double limit = 2.0 * cfg.slotframe.slotframeSize * cfg.slotframe.slotDurationMs;
    return {share >= 0.6 && median < limit,
            fmt::format("emsf below msf in {}/{} frames ({:.1f}%), emsf median {:.0f} ms (limit {:.0f}), "
                        "msf median {:.0f} ms",
                        better, frames, 100.0 * share, median, limit, pooledMedianMs(m))};
}

Result queueTrend() {
    const auto& e = runs("queue-trace.yaml", "emsf");
    const auto& m = runs("queue-trace.yaml", "msf");
    double worstAvg = 0;
    for (const auto& r : e)
        for (double a : queueStats(r.log).avgPerFrame)
            worstAvg = std::max(worstAvg, a);
    // Sporadic load starts at frame 50 of the shipped profile.
    std::size_t fullNodeFrames = 0;
    for (const auto& r : m) {
        const auto& samples = r.log.queueSamples;
        for (std::size_t f = 50; f < samples.size(); ++f)
            fullNodeFrames += static_cast<std::size_t>(std::count(samples[f].begin(), samples[f].end(), 5u));
    }
    return {worstAvg <= 4.0 && fullNodeFrames > 0,
            fmt::format("emsf worst network-average depth {:.2f}, msf node-frames at depth 5: {}", worstAvg,
                        fullNodeFrames)};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Result determinism() {
    const auto root = std::filesystem::temp_directory_path() / fmt::format("tsch_acceptance_{}", ::getpid());
    std::filesystem::remove_all(root);
    const Scenario s = parseScenario(scenarioPath("queue-trace.yaml"));
    runScenario(s, root / "a", 1);
    runScenario(s, root / "b", jobs());
    std::size_t files = 0, differ = 0;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root / "a")) {
        if (!entry.is_regular_file())
            continue;
        ++files;
        const auto other = root / "b" / std::filesystem::relative(entry.path(), root / "a");
        differ += slurp(entry.path()) != slurp(other);
    }
    std::filesystem::remove_all(root);
    return {files > 0 && differ == 0, fmt::format("{} files compared, {} differ", files, differ)};
}

Result fixedPoint() {
    SimConfig cfg;
    cfg.nodeCount = 2;
    cfg.topology.kind = TopologySpec::Kind::Chain;
    cfg.defaultPdr = 1.0;
    cfg.traffic = TrafficProfile{0, ConstantRate{3}};
    cfg.schedulingFunction = "emsf";
    cfg.slotframeCount = 200;
    Simulator sim(cfg);
    const std::uint64_t frame = cfg.slotframe.slotframeSize;
    const std::uint64_t by = cfg.scheduling.emsf.beta + 2;
    while (sim.asn().value < by * frame)
        sim.advance();
    const auto cellsAt = sim.node(NodeId{1}).schedule.countWith(kRootNode, LinkOption::Tx);
    const auto txnsAt = sim.log().sixpRecords.size() + sim.transactionsInFlight();
    sim.run();
    const auto cellsEnd = sim.node(NodeId{1}).schedule.countWith(kRootNode, LinkOption::Tx);
    const auto later = sim.log().sixpRecords.size() - txnsAt;
    return {cellsAt == 3 && cellsEnd == 3 && later == 0,
            fmt::format("cells at end of slotframe {}: {}, at end of run: {}, transactions afterwards: {}", by - 1,
                        cellsAt, cellsEnd, later)};
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budgetSec;
        std::function<Result()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "formula examples", 1, formulas},
        {2, "poisson mode oracle", 5, poissonMode},
        {3, "packet conservation", 120, conservation},
        {4, "error-ratio trend", 600, errorRatioTrend},
        {5, "overhead trend", 600, overheadTrend},
        {6, "latency trend", 300, latencyTrend},
        {7, "queue trend", 300, queueTrend},
        {8, "determinism", 600, determinism},
        {9, "fixed point", 10, fixedPoint},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Result r;
        try {
            r = c.run();
        } catch (const std::exception& e) {
            r = {false, fmt::format("exception: {}", e.what())};
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (sec > c.budgetSec) {
            r.pass = false;
            r.detail += fmt::format(" [over budget {:.0f} s]", c.budgetSec);
        }
        failures += !r.pass;
        fmt::print("criterion {} ({}): {} - {} ({:.2f} s)\n", c.id, c.name, r.pass ? "PASS" : "FAIL", r.detail, sec);
        std::fflush(stdout);
    }
    fmt::print("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failures), criteria.size());
    return failures == 0 ? 0 : 1;
}
