#include "tsch/scenario.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>
#include <string_view>
#include <thread>

namespace tsch {

namespace {

// ---- parsing helpers -------------------------------------------------------

int lineOf(const YAML::Node& n) {
    return n.Mark().line + 1;
}

[[noreturn]] void fail(const YAML::Node& n, const std::string& msg) {
    if (n.Mark().is_null())
        throw ScenarioError(msg);
    throw ScenarioError(fmt::format("line {}: {}", lineOf(n), msg));
}

void checkKeys(const YAML::Node& map, std::string_view section, std::initializer_list<std::string_view> allowed) {
    if (!map.IsMap())
        fail(map, fmt::format("\"{}\" must be a mapping", section));
    for (const auto& kv : map) {
        const auto key = kv.first.as<std::string>();
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            fail(kv.first, fmt::format("unknown key \"{}\" in {}", key, section));
    }
}

std::string readString(const YAML::Node& n, std::string_view what) {
    if (!n.IsScalar())
        fail(n, fmt::format("{} must be a scalar", what));
    return n.Scalar();
}

std::int64_t readInt(const YAML::Node& n, std::string_view what, std::int64_t lo,
                     std::int64_t hi = std::numeric_limits<std::int64_t>::max()) {
    std::int64_t v = 0;
    try {
        v = n.as<std::int64_t>();
    } catch (const YAML::Exception&) {
        fail(n, fmt::format("{} must be an integer, got \"{}\"", what, n.IsScalar() ? n.Scalar() : "?"));
    }
    if (v < lo || v > hi)
        fail(n, fmt::format("{} = {} outside [{}, {}]", what, v, lo, hi));
    return v;
}

double readDouble(const YAML::Node& n, std::string_view what) {
    double v = 0;
    try {
        v = n.as<double>();
    } catch (const YAML::Exception&) {
        fail(n, fmt::format("{} must be a number, got \"{}\"", what, n.IsScalar() ? n.Scalar() : "?"));
    }
    if (!std::isfinite(v))
        fail(n, fmt::format("{} must be finite", what));
    return v;
}

bool readBool(const YAML::Node& n, std::string_view what) {
    try {
        return n.as<bool>();
    } catch (const YAML::Exception&) {
        fail(n, fmt::format("{} must be true or false", what));
    }
}

template <class T>
void readUInt(const YAML::Node& parent, const char* key, T& out, std::int64_t lo = 0,
              std::int64_t hi = std::numeric_limits<std::uint32_t>::max()) {
    if (const auto n = parent[key])
        out = static_cast<T>(readInt(n, key, lo, hi));
}

void readProb(const YAML::Node& parent, const char* key, double& out) {
    if (const auto n = parent[key]) {
        out = readDouble(n, key);
        if (out < 0.0 || out > 1.0)
            fail(n, fmt::format("{} must lie in [0, 1]", key));
    }
}

TrafficProfile parseTraffic(const YAML::Node& node, std::string_view section) {
    checkKeys(node, section, {"periodic", "model", "rate", "mean", "lo", "hi", "segments"});
    TrafficProfile p;
    readUInt(node, "periodic", p.periodicPerSlotframe);
    const std::string model = node["model"] ? readString(node["model"], "model") : "constant";
    if (model == "constant") {
        ConstantRate c;
        readUInt(node, "rate", c.packets);
        p.eventModel = c;
    } else if (model == "poisson") {
        PoissonEvents e;
        const auto n = node["mean"] ? node["mean"] : node["rate"];
        if (!n)
            fail(node, "poisson traffic needs a mean");
        e.mean = readDouble(n, "mean");
        if (e.mean < 0)
            fail(n, "poisson mean must be non-negative");
        p.eventModel = e;
    } else if (model == "sporadic") {
        SporadicUniform s;
        if (!node["lo"] || !node["hi"])
            fail(node, "sporadic traffic needs lo and hi");
        readUInt(node, "lo", s.lo);
        readUInt(node, "hi", s.hi);
        if (s.lo > s.hi)
            fail(node["lo"], fmt::format("sporadic range has lo {} > hi {}", s.lo, s.hi));
        p.eventModel = s;
    } else if (model == "piecewise") {
        const auto segs = node["segments"];
        if (!segs || !segs.IsSequence() || segs.size() == 0)
            fail(node, "piecewise traffic needs a non-empty segments list");
        Piecewise pw;
        for (const auto& seg : segs) {
            if (!seg.IsMap() || !seg["from"])
                fail(seg, "each segment needs a \"from\" slotframe");
            YAML::Node inner = YAML::Clone(seg);
            inner.remove("from");
            const auto from = static_cast<std::uint64_t>(readInt(seg["from"], "from", 0));
            if (!pw.segments.empty() && from <= pw.segments.back().fromSlotframe)
                fail(seg["from"], "segments must be in increasing \"from\" order");
            pw.segments.push_back({from, parseTraffic(inner, "segment")});
        }
        p.eventModel = std::move(pw);
    } else if (model == "steady_then_sporadic") {
        p = steadyThenSporadicProfile();
    } else if (model == "period200ms") {
        p = periodicTransmissionProfile();
    } else {
        fail(node["model"], fmt::format("unknown traffic model \"{}\"", model));
    }
    return p;
}

Scenario parseRoot(const YAML::Node& root, const std::filesystem::path& baseDir) {
    if (!root.IsMap())
        throw ScenarioError("scenario must be a YAML mapping");
    checkKeys(root, "scenario",
              {"name", "sf", "seed", "replicas", "slotframes", "network", "tsch", "traffic", "sixp", "msf", "emsf",
               "sweep"});

    Scenario s;
    SimConfig& c = s.config;
    if (root["name"])
        s.name = readString(root["name"], "name");
    if (root["sf"]) {
        c.schedulingFunction = readString(root["sf"], "sf");
        if (c.schedulingFunction != "msf" && c.schedulingFunction != "emsf")
            fail(root["sf"], fmt::format("sf must be msf or emsf, got \"{}\"", c.schedulingFunction));
    }
    if (root["seed"])
        c.seed = static_cast<std::uint64_t>(readInt(root["seed"], "seed", 0));
    readUInt(root, "replicas", s.replicas, 1, 100000);
    readUInt(root, "slotframes", c.slotframeCount, 0, std::numeric_limits<std::int64_t>::max());

    if (const auto net = root["network"]) {
        checkKeys(net, "network",
                  {"nodes", "topology", "max_children", "topology_file", "edges", "pdr", "pdr_range", "links",
                   "queue_capacity", "mac_max_retries", "payload_bytes"});
        readUInt(net, "nodes", c.nodeCount, 1, 100000);
        if (const auto t = net["topology"]) {
            const auto kind = readString(t, "topology");
            if (kind == "chain") c.topology.kind = TopologySpec::Kind::Chain;
            else if (kind == "star") c.topology.kind = TopologySpec::Kind::Star;
            else if (kind == "random") c.topology.kind = TopologySpec::Kind::Random;
            else if (kind == "file") c.topology.kind = TopologySpec::Kind::File;
            else if (kind == "explicit") c.topology.kind = TopologySpec::Kind::Explicit;
            else fail(t, fmt::format("unknown topology \"{}\"", kind));
        }
        readUInt(net, "max_children", c.topology.maxChildren, 1);
        if (const auto f = net["topology_file"]) {
            std::filesystem::path p = readString(f, "topology_file");
            c.topology.file = p.is_absolute() ? p : baseDir / p;
        }
        if (const auto edges = net["edges"]) {
            if (!edges.IsSequence())
                fail(edges, "edges must be a list of [child, parent] pairs");
            for (const auto& e : edges) {
                if (!e.IsSequence() || e.size() != 2)
                    fail(e, "each edge is a [child, parent] pair");
                c.topology.edges.push_back({NodeId{static_cast<std::uint32_t>(readInt(e[0], "child", 0, 1 << 30))},
                                            NodeId{static_cast<std::uint32_t>(readInt(e[1], "parent", 0, 1 << 30))}});
            }
        }
        if (c.topology.kind == TopologySpec::Kind::File && c.topology.file.empty())
            fail(net, "topology: file needs topology_file");
        readProb(net, "pdr", c.defaultPdr);
        if (const auto r = net["pdr_range"]) {
            if (!r.IsSequence() || r.size() != 2)
                fail(r, "pdr_range is a [low, high] pair");
            const double lo = readDouble(r[0], "pdr_range low"), hi = readDouble(r[1], "pdr_range high");
            if (lo < 0 || hi > 1 || lo > hi)
                fail(r, "pdr_range must satisfy 0 <= low <= high <= 1");
            c.pdrRange = std::pair{lo, hi};
        }
        if (const auto links = net["links"]) {
            if (!links.IsSequence())
                fail(links, "links must be a list");
            for (const auto& l : links) {
                checkKeys(l, "link", {"a", "b", "pdr"});
                LinkPdr lp;
                lp.a = NodeId{static_cast<std::uint32_t>(readInt(l["a"], "a", 0, 1 << 30))};
                lp.b = NodeId{static_cast<std::uint32_t>(readInt(l["b"], "b", 0, 1 << 30))};
                readProb(l, "pdr", lp.pdr);
                c.linkPdr.push_back(lp);
            }
        }
        readUInt(net, "queue_capacity", c.queueCapacity, 1);
        readUInt(net, "mac_max_retries", c.macMaxRetries, 0, 64);
        readUInt(net, "payload_bytes", c.payloadBytes, 1);
    }

    if (const auto t = root["tsch"]) {
        checkKeys(t, "tsch", {"slotframe_size", "slot_duration_ms", "channels"});
        readUInt(t, "slotframe_size", c.slotframe.slotframeSize, 2);
        readUInt(t, "slot_duration_ms", c.slotframe.slotDurationMs, 1);
        if (const auto ch = t["channels"]) {
            if (!ch.IsSequence() || ch.size() == 0)
                fail(ch, "channels must be a non-empty list");
            c.hopping.channelMap.clear();
            for (const auto& x : ch)
                c.hopping.channelMap.push_back(static_cast<std::uint32_t>(readInt(x, "channel", 0, 1 << 30)));
            try {
                validate(c.hopping);
            } catch (const std::invalid_argument& e) {
                fail(ch, e.what());
            }
        }
    }

    if (const auto t = root["traffic"])
        c.traffic = parseTraffic(t, "traffic");

    if (const auto x = root["sixp"]) {
        checkKeys(x, "sixp",
                  {"candidate_list_len", "request_base_bytes", "response_base_bytes", "bytes_per_cell", "max_retries",
                   "transport", "min_backoff_exponent", "max_backoff_exponent", "busy_rejects"});
        readUInt(x, "candidate_list_len", c.scheduling.candidateListLen, 1);
        readUInt(x, "request_base_bytes", c.scheduling.cost.requestBaseBytes, 1);
        readUInt(x, "response_base_bytes", c.scheduling.cost.responseBaseBytes, 1);
        readUInt(x, "bytes_per_cell", c.scheduling.cost.bytesPerCell);
        readUInt(x, "max_retries", c.sixpMaxRetries, 0, 64);
        readUInt(x, "min_backoff_exponent", c.minBackoffExponent, 0, 16);
        readUInt(x, "max_backoff_exponent", c.maxBackoffExponent, 0, 16);
        if (x["busy_rejects"])
            c.sixpSingleTransaction = readBool(x["busy_rejects"], "busy_rejects");
        if (c.minBackoffExponent > c.maxBackoffExponent)
            fail(x, "min_backoff_exponent exceeds max_backoff_exponent");
        if (const auto tr = x["transport"]) {
            const auto v = readString(tr, "transport");
            if (v == "shared") c.sixpTransport = SixPTransport::Shared;
            else if (v == "dedicated") c.sixpTransport = SixPTransport::Dedicated;
            else fail(tr, fmt::format("transport must be shared or dedicated, got \"{}\"", v));
        }
    }

    if (const auto m = root["msf"]) {
        checkKeys(m, "msf", {"window", "high", "low", "min_cells"});
        readUInt(m, "window", c.scheduling.msf.windowLen, 1);
        readProb(m, "high", c.scheduling.msf.highThreshold);
        readProb(m, "low", c.scheduling.msf.lowThreshold);
        readUInt(m, "min_cells", c.scheduling.msf.minCells);
        if (c.scheduling.msf.lowThreshold > c.scheduling.msf.highThreshold)
            fail(m, "msf low threshold exceeds the high threshold");
    }

    if (const auto e = root["emsf"]) {
        checkKeys(e, "emsf", {"beta", "count_forwarded"});
        readUInt(e, "beta", c.scheduling.emsf.beta, 1);
        if (e["count_forwarded"])
            c.scheduling.emsf.countForwarded = readBool(e["count_forwarded"], "count_forwarded");
    }

    if (const auto sw = root["sweep"]) {
        checkKeys(sw, "sweep", {"nodes"});
        Sweep sweep;
        const auto v = sw["nodes"];
        if (v.IsSequence()) {
            for (const auto& x : v)
                sweep.values.push_back(static_cast<std::uint64_t>(readInt(x, "sweep value", 1, 100000)));
        } else if (v.IsMap()) {
            checkKeys(v, "sweep.nodes", {"from", "to", "step"});
            if (!v["from"] || !v["to"])
                fail(v, "a sweep range needs from and to");
            const auto from = readInt(v["from"], "from", 1, 100000);
            const auto to = readInt(v["to"], "to", from, 100000);
            const auto step = v["step"] ? readInt(v["step"], "step", 1, 100000) : 1;
            for (auto x = from; x <= to; x += step)
                sweep.values.push_back(static_cast<std::uint64_t>(x));
        } else {
            fail(v, "sweep.nodes is a list or a {from, to, step} range");
        }
        std::set<std::uint64_t> distinct(sweep.values.begin(), sweep.values.end());
        if (distinct.size() != sweep.values.size())
            fail(v, "sweep values must be distinct");
        std::sort(sweep.values.begin(), sweep.values.end());
        s.sweep = std::move(sweep);
    }

    try {
        validate(c);
        for (const auto& point : expandSweep(s))
            buildTopology(point.config);
    } catch (const ConfigError& e) {
        throw ScenarioError(e.what());
    } catch (const TopologyError& e) {
        throw ScenarioError(e.what());
    }
    return s;
}

// ---- emission ---------------------------------------------------------------

void emitTraffic(YAML::Emitter& out, const TrafficProfile& p) {
    out << YAML::BeginMap;
    out << YAML::Key << "periodic" << YAML::Value << p.periodicPerSlotframe;
    if (const auto* c = std::get_if<ConstantRate>(&p.eventModel)) {
        out << YAML::Key << "model" << YAML::Value << "constant";
        out << YAML::Key << "rate" << YAML::Value << c->packets;
    } else if (const auto* e = std::get_if<PoissonEvents>(&p.eventModel)) {
        out << YAML::Key << "model" << YAML::Value << "poisson";
        out << YAML::Key << "mean" << YAML::Value << e->mean;
    } else if (const auto* s = std::get_if<SporadicUniform>(&p.eventModel)) {
        out << YAML::Key << "model" << YAML::Value << "sporadic";
        out << YAML::Key << "lo" << YAML::Value << s->lo;
        out << YAML::Key << "hi" << YAML::Value << s->hi;
    } else {
        const auto& pw = std::get<Piecewise>(p.eventModel);
        out << YAML::Key << "model" << YAML::Value << "piecewise";
        out << YAML::Key << "segments" << YAML::Value << YAML::BeginSeq;
        for (const auto& seg : pw.segments) {
            // Segment keys sit next to "from" in the same mapping.
            YAML::Emitter inner;
            emitTraffic(inner, seg.profile);
            YAML::Node node = YAML::Load(inner.c_str());
            out << YAML::BeginMap << YAML::Key << "from" << YAML::Value << seg.fromSlotframe;
            for (const auto& kv : node)
                out << YAML::Key << kv.first << YAML::Value << kv.second;
            out << YAML::EndMap;
        }
        out << YAML::EndSeq;
    }
    out << YAML::EndMap;
}

std::string_view topologyName(TopologySpec::Kind k) {
    switch (k) {
    case TopologySpec::Kind::Chain: return "chain";
    case TopologySpec::Kind::Star: return "star";
    case TopologySpec::Kind::Random: return "random";
    case TopologySpec::Kind::File: return "file";
    case TopologySpec::Kind::Explicit: return "explicit";
    }
    return "random";
}

} // namespace

Scenario parseScenarioText(const std::string& text, const std::filesystem::path& baseDir) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ScenarioError(fmt::format("line {}: {}", e.mark.line + 1, e.msg));
    }
    if (root.IsNull())
        root = YAML::Node(YAML::NodeType::Map);
    return parseRoot(root, baseDir);
}

Scenario parseScenario(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in)
        throw ScenarioError(fmt::format("cannot open scenario file {}", file.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parseScenarioText(buf.str(), file.parent_path());
    } catch (const ScenarioError& e) {
        throw ScenarioError(fmt::format("{}: {}", file.string(), e.what()));
    }
}

std::string toYaml(const Scenario& s) {
    const SimConfig& c = s.config;
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << s.name;
    out << YAML::Key << "sf" << YAML::Value << c.schedulingFunction;
    out << YAML::Key << "seed" << YAML::Value << c.seed;
    out << YAML::Key << "replicas" << YAML::Value << s.replicas;
    out << YAML::Key << "slotframes" << YAML::Value << c.slotframeCount;

    out << YAML::Key << "network" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "nodes" << YAML::Value << c.nodeCount;
    out << YAML::Key << "topology" << YAML::Value << std::string(topologyName(c.topology.kind));
    out << YAML::Key << "max_children" << YAML::Value << c.topology.maxChildren;
    if (!c.topology.file.empty())
        out << YAML::Key << "topology_file" << YAML::Value << c.topology.file.string();
    if (!c.topology.edges.empty()) {
        out << YAML::Key << "edges" << YAML::Value << YAML::BeginSeq;
        for (const auto& e : c.topology.edges)
            out << YAML::Flow << YAML::BeginSeq << e.child.value << e.parent.value << YAML::EndSeq;
        out << YAML::EndSeq;
    }
    out << YAML::Key << "pdr" << YAML::Value << c.defaultPdr;
    if (c.pdrRange)
        out << YAML::Key << "pdr_range" << YAML::Value << YAML::Flow << YAML::BeginSeq << c.pdrRange->first
            << c.pdrRange->second << YAML::EndSeq;
    if (!c.linkPdr.empty()) {
        out << YAML::Key << "links" << YAML::Value << YAML::BeginSeq;
        for (const auto& l : c.linkPdr)
            out << YAML::Flow << YAML::BeginMap << YAML::Key << "a" << YAML::Value << l.a.value << YAML::Key << "b"
                << YAML::Value << l.b.value << YAML::Key << "pdr" << YAML::Value << l.pdr << YAML::EndMap;
        out << YAML::EndSeq;
    }
    out << YAML::Key << "queue_capacity" << YAML::Value << c.queueCapacity;
    out << YAML::Key << "mac_max_retries" << YAML::Value << c.macMaxRetries;
    out << YAML::Key << "payload_bytes" << YAML::Value << c.payloadBytes;
    out << YAML::EndMap;

    out << YAML::Key << "tsch" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "slotframe_size" << YAML::Value << c.slotframe.slotframeSize;
    out << YAML::Key << "slot_duration_ms" << YAML::Value << c.slotframe.slotDurationMs;
    out << YAML::Key << "channels" << YAML::Value << YAML::Flow << c.hopping.channelMap;
    out << YAML::EndMap;

    out << YAML::Key << "traffic" << YAML::Value;
    emitTraffic(out, c.traffic);

    out << YAML::Key << "sixp" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "candidate_list_len" << YAML::Value << c.scheduling.candidateListLen;
    out << YAML::Key << "request_base_bytes" << YAML::Value << c.scheduling.cost.requestBaseBytes;
    out << YAML::Key << "response_base_bytes" << YAML::Value << c.scheduling.cost.responseBaseBytes;
    out << YAML::Key << "bytes_per_cell" << YAML::Value << c.scheduling.cost.bytesPerCell;
    out << YAML::Key << "max_retries" << YAML::Value << c.sixpMaxRetries;
    out << YAML::Key << "transport" << YAML::Value
        << (c.sixpTransport == SixPTransport::Shared ? "shared" : "dedicated");
    out << YAML::Key << "min_backoff_exponent" << YAML::Value << c.minBackoffExponent;
    out << YAML::Key << "max_backoff_exponent" << YAML::Value << c.maxBackoffExponent;
    out << YAML::Key << "busy_rejects" << YAML::Value << c.sixpSingleTransaction;
    out << YAML::EndMap;

    out << YAML::Key << "msf" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "window" << YAML::Value << c.scheduling.msf.windowLen;
    out << YAML::Key << "high" << YAML::Value << c.scheduling.msf.highThreshold;
    out << YAML::Key << "low" << YAML::Value << c.scheduling.msf.lowThreshold;
    out << YAML::Key << "min_cells" << YAML::Value << c.scheduling.msf.minCells;
    out << YAML::EndMap;

    out << YAML::Key << "emsf" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "beta" << YAML::Value << c.scheduling.emsf.beta;
    out << YAML::Key << "count_forwarded" << YAML::Value << c.scheduling.emsf.countForwarded;
    out << YAML::EndMap;

    if (s.sweep) {
        out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << s.sweep->key << YAML::Value << YAML::Flow << s.sweep->values;
        out << YAML::EndMap;
    }
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

std::vector<SweepPoint> expandSweep(const Scenario& s) {
    std::vector<SweepPoint> out;
    if (!s.sweep) {
        out.push_back({"all", std::nullopt, s.config});
        return out;
    }
    for (std::uint64_t v : s.sweep->values) {
        SweepPoint p{fmt::format("{}={}", s.sweep->key, v), v, s.config};
        p.config.nodeCount = static_cast<std::size_t>(v);
        out.push_back(std::move(p));
    }
    return out;
}

const std::vector<std::string>& summaryMetrics() {
    static const std::vector<std::string> metrics{
        "errorRatio",     "transactions",  "overheadBytes", "meanLatencyMs", "medianLatencyMs", "p95LatencyMs",
        "maxLatencyMs",   "avgQueueDepth", "maxQueueDepth", "deliveryRatio", "dropped",
    };
    return metrics;
}

std::optional<double> summaryMetric(const MetricsLog& log, const std::string& metric) {
    if (metric == "errorRatio")
        return sixpErrorRatio(log);
    if (metric == "transactions")
        return static_cast<double>(log.sixpRecords.size());
    if (metric == "overheadBytes")
        return static_cast<double>(overheadBytes(log).totalBytes);
    if (metric.ends_with("LatencyMs")) {
        const auto lat = latencyStats(log);
        if (!lat)
            return std::nullopt;
        if (metric == "meanLatencyMs") return lat->meanMs;
        if (metric == "medianLatencyMs") return lat->medianMs;
        if (metric == "p95LatencyMs") return lat->p95Ms;
        if (metric == "maxLatencyMs") return lat->maxMs;
    }
    if (metric == "avgQueueDepth" || metric == "maxQueueDepth") {
        const auto q = queueStats(log);
        if (q.avgPerFrame.empty())
            return std::nullopt;
        if (metric == "maxQueueDepth")
            return static_cast<double>(*std::max_element(q.maxPerFrame.begin(), q.maxPerFrame.end()));
        double sum = 0;
        for (double a : q.avgPerFrame)
            sum += a;
        return sum / static_cast<double>(q.avgPerFrame.size());
    }
    if (metric == "deliveryRatio" || metric == "dropped") {
        std::uint64_t delivered = 0, dropped = 0;
        for (const auto& r : log.packetRecords) {
            delivered += r.delivery.has_value();
            dropped += r.drop.has_value();
        }
        if (metric == "dropped")
            return static_cast<double>(dropped);
        if (log.packetRecords.empty())
            return std::nullopt;
        return static_cast<double>(delivered) / static_cast<double>(log.packetRecords.size());
    }
    throw std::invalid_argument(fmt::format("unknown metric \"{}\"", metric));
}

std::vector<SummaryRow> summarize(const std::vector<RunResult>& runs, const std::string& sf,
                                  const std::vector<std::string>& sweepOrder) {
    std::vector<SummaryRow> rows;
    for (const auto& key : sweepOrder) {
        for (const auto& metric : summaryMetrics()) {
            std::vector<double> xs;
            for (const auto& r : runs)
                if (r.sweepKey == key)
                    if (auto v = summaryMetric(r.log, metric))
                        xs.push_back(*v);
            SummaryRow row{key, sf, metric, 0, 0, xs.size()};
            if (!xs.empty()) {
                double sum = 0;
                for (double x : xs)
                    sum += x;
                row.mean = sum / static_cast<double>(xs.size());
                if (xs.size() > 1) {
                    double ss = 0;
                    for (double x : xs)
                        ss += (x - row.mean) * (x - row.mean);
                    row.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
                }
            }
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<RunResult> executeScenario(const Scenario& s, unsigned jobs) {
    struct Job {
        std::string key;
        SimConfig cfg;
    };
    std::vector<Job> work;
    for (const auto& point : expandSweep(s)) {
        for (std::uint32_t r = 0; r < s.replicas; ++r) {
            Job j{point.key, point.config};
            j.cfg.seed = s.config.seed + r;
            work.push_back(std::move(j));
        }
    }

    std::vector<RunResult> results(work.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex errorMutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < work.size(); i = next++) {
            try {
                results[i] = RunResult{work[i].key, work[i].cfg.seed, runSimulation(work[i].cfg)};
            } catch (...) {
                std::lock_guard lock(errorMutex);
                if (!error)
                    error = std::current_exception();
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(work.size())));
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < threads; ++t)
            pool.emplace_back(worker);
        worker();
    }
    if (error)
        std::rethrow_exception(error);
    return results;
}

void writeSummaryCsv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << "sweepKey,sf,metric,mean,stddev,n\n";
    for (const auto& r : rows)
        fmt::print(out, "{},{},{},{:.6f},{:.6f},{}\n", r.sweepKey, r.sf, r.metric, r.mean, r.stddev, r.n);
}

namespace {

void writeFile(const std::filesystem::path& path, auto&& writer) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    writer(out);
    out.flush();
    if (!out)
        throw std::runtime_error(fmt::format("write to {} failed", path.string()));
}

} // namespace

void runScenario(const Scenario& s, const std::filesystem::path& outDir, unsigned jobs) {
    std::filesystem::create_directories(outDir);
    writeFile(outDir / "scenario.resolved.yaml", [&](std::ostream& o) { o << toYaml(s); });

    const auto results = executeScenario(s, jobs);
    for (const auto& r : results) {
        const auto dir = outDir / "runs" / r.sweepKey / fmt::format("seed-{}", r.seed);
        std::filesystem::create_directories(dir);
        writeFile(dir / "sixp.csv", [&](std::ostream& o) { writeSixpCsv(o, r.log); });
        writeFile(dir / "latency.csv", [&](std::ostream& o) { writeLatencyCsv(o, r.log); });
        writeFile(dir / "queue.csv", [&](std::ostream& o) { writeQueueCsv(o, r.log); });
        writeFile(dir / "overhead.csv", [&](std::ostream& o) { writeOverheadCsv(o, r.log); });
    }

    std::vector<std::string> order;
    for (const auto& p : expandSweep(s))
        order.push_back(p.key);
    const auto rows = summarize(results, s.config.schedulingFunction, order);
    writeFile(outDir / "summary.csv", [&](std::ostream& o) { writeSummaryCsv(o, rows); });
}

} // namespace tsch
