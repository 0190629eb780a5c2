#pragma once

#include "tsch/core.hpp"
#include "tsch/rng.hpp"
#include "tsch/schedule.hpp"
#include "tsch/scheduling.hpp"
#include "tsch/sixp.hpp"
#include "tsch/telemetry.hpp"
#include "tsch/topology.hpp"
#include "tsch/traffic.hpp"

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tsch {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Packet {
    NodeId src;
    Asn birth;
    std::uint32_t sizeBytes = 127;
    /// Failed attempts on the current hop.
    std::uint32_t retries = 0;
    std::size_t record = 0; ///< index into MetricsLog::packetRecords
};

/// Symmetric per-link delivery probability.
class LinkModel {
public:
    explicit LinkModel(double defaultPdr = 0.85);

    void set(NodeId a, NodeId b, double pdr);
    double pdr(NodeId a, NodeId b) const;
    double defaultPdr() const { return default_; }

private:
    static std::pair<std::uint32_t, std::uint32_t> key(NodeId a, NodeId b);

    double default_;
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> links_;
};

enum class SixPTransport : std::uint8_t {
    Shared,   ///< every 6P message contends on the minimal shared cell
    Dedicated ///< requests ride the next Tx cell toward the parent when one exists
};

struct TopologySpec {
    enum class Kind : std::uint8_t { Chain, Star, Random, File, Explicit };

    Kind kind = Kind::Random;
    std::size_t maxChildren = 3;
    std::filesystem::path file;
    std::vector<TreeEdge> edges;
};

struct LinkPdr {
    NodeId a;
    NodeId b;
    double pdr = 1.0;
};

struct SimConfig {
    std::size_t nodeCount = 20;
    std::uint64_t slotframeCount = 200;
    SlotframeParams slotframe;
    HoppingConfig hopping = HoppingConfig::ieee2450();
    TopologySpec topology;
    TrafficProfile traffic = steadyThenSporadicProfile();
    std::map<std::uint32_t, TrafficProfile> trafficOverrides;
    std::string schedulingFunction = "msf";
    SchedulingParams scheduling;
    double defaultPdr = 0.85;
    /// When set, every tree link draws its PDR uniformly from [first, second].
    std::optional<std::pair<double, double>> pdrRange;
    std::vector<LinkPdr> linkPdr;
    std::uint32_t queueCapacity = 5;
    std::uint32_t macMaxRetries = 4;
    std::uint32_t payloadBytes = 127;
    std::uint32_t sixpMaxRetries = 1;
    SixPTransport sixpTransport = SixPTransport::Shared;
    /// A responder still serving one request rejects any other.
    bool sixpSingleTransaction = false;
    std::uint32_t minBackoffExponent = 1;
    std::uint32_t maxBackoffExponent = 5;
    std::uint64_t seed = 1;
};

/// Throws ConfigError describing the first invalid field.
void validate(const SimConfig& cfg);

struct ControlMessage {
    std::uint64_t transaction = 0;
    NodeId from;
    NodeId to;
    bool isResponse = false;
    std::uint32_t sizeBytes = 0;
    std::uint32_t attempts = 0;
};

struct NodeState {
    NodeId id;
    std::optional<NodeId> parent;
    std::deque<Packet> queue;
    Schedule schedule;
    TrafficHistory history;
    CellUsageStats usage;
    TrafficProfile traffic;
    Rng trafficRng;
    Rng macRng;
    std::vector<std::uint32_t> lockedSlots;
    std::uint64_t generatedThisFrame = 0;
    std::uint64_t receivedThisFrame = 0;

    std::deque<ControlMessage> control;
    std::uint32_t backoff = 0;
    std::uint32_t backoffExponent = 1;
    std::optional<std::uint64_t> pendingTransaction;
    /// Requests received whose response is not yet delivered.
    std::uint32_t serving = 0;
    std::uint32_t nextSeqNum = 0;
};

/// Slot-by-slot TSCH network. Single-threaded and a pure function of its
/// configuration.
class Simulator {
public:
    explicit Simulator(SimConfig cfg);

    /// Runs every remaining slot and finalizes the log.
    void run();
    /// Executes the slot at the current ASN (preceded by the slotframe
    /// boundary work when the ASN opens a slotframe) and advances the ASN.
    void advance();
    /// Records end-of-run samples and closes in-flight transactions as lost.
    void finish();

    void slotframeBoundary(std::uint64_t frameIndex);
    void stepSlot(Asn asn);

    Asn asn() const { return asn_; }
    const SimConfig& config() const { return cfg_; }
    const RoutingTree& tree() const { return tree_; }
    const LinkModel& links() const { return links_; }
    const NodeState& node(NodeId n) const { return nodes_.at(n.value); }
    NodeState& mutableNode(NodeId n) { return nodes_.at(n.value); }
    const MetricsLog& log() const { return log_; }
    MetricsLog takeLog() { return std::move(log_); }

    FrameCounters counters() const;
    /// Every Tx cell has exactly one matching Rx cell at its peer and vice versa.
    bool schedulesMirrored() const;
    std::size_t transactionsInFlight() const { return transactions_.size(); }

private:
    struct Transaction {
        sixp::Request request;
        std::optional<sixp::Outcome> outcome;
        std::vector<std::uint32_t> responderLocks;
        bool serving = false;
        std::uint32_t bytes = 0;
    };

    struct Transmission {
        NodeId from;
        NodeId to;
        std::uint32_t frequency = 0;
        bool control = false;
    };

    void generateTraffic(NodeState& n, std::uint64_t frameIndex);
    void startTransaction(NodeState& n, sixp::Request req);
    void sharedSlot(Asn asn);
    void dedicatedSlot(Asn asn, std::uint32_t slotOffset);
    bool receptionOk(const Transmission& t, const std::vector<Transmission>& all, bool& collided) const;
    void controlAttemptFailed(NodeState& n, Asn asn);
    void deliverControl(const ControlMessage& msg, Asn asn);
    void completeTransaction(std::uint64_t id, sixp::Status status, Asn asn);
    void unlock(NodeState& n, const std::vector<std::uint32_t>& slots);
    void chargeOverhead(std::uint64_t transaction, std::uint32_t bytes, Asn asn);
    void sampleQueues();
    void recordCounters(std::uint64_t frame);
    void dropPacket(const Packet& p, DropReason reason);

    SimConfig cfg_;
    RoutingTree tree_;
    LinkModel links_;
    std::unique_ptr<SchedulingFunction> sf_;
    std::vector<NodeState> nodes_;
    std::map<std::uint64_t, Transaction> transactions_;
    std::uint64_t nextTransaction_ = 0;
    Asn asn_{};
    Asn endAsn_{};
    bool finished_ = false;
    MetricsLog log_;

    std::uint64_t generated_ = 0;
    std::uint64_t delivered_ = 0;
    std::uint64_t droppedRetry_ = 0;
    std::uint64_t droppedOverflow_ = 0;
    std::uint32_t maxQueueDepth_ = 0;
    std::uint32_t maxTransmissions_ = 0;
};

RoutingTree buildTopology(const SimConfig& cfg);

MetricsLog runSimulation(const SimConfig& cfg);

} // namespace tsch
