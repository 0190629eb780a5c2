#include "tsch/engine.hpp"

#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace tsch {

namespace {

double uniform01(Rng& rng) {
    return boost::random::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

void checkProbability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0))
        throw ConfigError(fmt::format("{} must lie in [0, 1], got {}", what, p));
}

enum RngPurpose : std::uint64_t { kTrafficStream = 1, kMacStream = 2, kLinkStream = 3 };

} // namespace

LinkModel::LinkModel(double defaultPdr) : default_(defaultPdr) {
    checkProbability(defaultPdr, "default PDR");
}

std::pair<std::uint32_t, std::uint32_t> LinkModel::key(NodeId a, NodeId b) {
    return std::minmax(a.value, b.value);
}

void LinkModel::set(NodeId a, NodeId b, double pdr) {
    checkProbability(pdr, "link PDR");
    links_[key(a, b)] = pdr;
}

double LinkModel::pdr(NodeId a, NodeId b) const {
    auto it = links_.find(key(a, b));
    return it == links_.end() ? default_ : it->second;
}

void validate(const SimConfig& cfg) {
    if (cfg.nodeCount == 0)
        throw ConfigError("node count must be at least 1 (the root)");
    try {
        validate(cfg.slotframe);
        validate(cfg.hopping);
        validate(cfg.traffic);
        for (const auto& [id, profile] : cfg.trafficOverrides)
            validate(profile);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    checkProbability(cfg.defaultPdr, "default PDR");
    if (cfg.pdrRange) {
        checkProbability(cfg.pdrRange->first, "PDR range low end");
        checkProbability(cfg.pdrRange->second, "PDR range high end");
        if (cfg.pdrRange->first > cfg.pdrRange->second)
            throw ConfigError("PDR range is inverted");
    }
    for (const auto& l : cfg.linkPdr) {
        checkProbability(l.pdr, "link PDR");
        if (l.a.value >= cfg.nodeCount || l.b.value >= cfg.nodeCount)
            throw ConfigError(fmt::format("link {}-{} references an unknown node", l.a.value, l.b.value));
    }
    if (cfg.queueCapacity == 0)
        throw ConfigError("queue capacity must be positive");
    const auto& msf = cfg.scheduling.msf;
    if (msf.windowLen == 0)
        throw ConfigError("MSF window must be positive");
    checkProbability(msf.lowThreshold, "MSF low threshold");
    checkProbability(msf.highThreshold, "MSF high threshold");
    if (msf.lowThreshold > msf.highThreshold)
        throw ConfigError("MSF low threshold exceeds the high threshold");
    if (cfg.scheduling.emsf.beta == 0)
        throw ConfigError("history window beta must be positive");
    if (cfg.scheduling.candidateListLen == 0)
        throw ConfigError("candidate list length must be positive");
    if (cfg.minBackoffExponent > cfg.maxBackoffExponent || cfg.maxBackoffExponent > 16)
        throw ConfigError("backoff exponents must satisfy min <= max <= 16");
    if (cfg.schedulingFunction != "msf" && cfg.schedulingFunction != "emsf")
        throw ConfigError(fmt::format("unknown scheduling function \"{}\"", cfg.schedulingFunction));
    for (const auto& [id, profile] : cfg.trafficOverrides)
        if (id >= cfg.nodeCount)
            throw ConfigError(fmt::format("traffic override for unknown node {}", id));
}

RoutingTree buildTopology(const SimConfig& cfg) {
    switch (cfg.topology.kind) {
    case TopologySpec::Kind::Chain: return chainTopology(cfg.nodeCount);
    case TopologySpec::Kind::Star: return starTopology(cfg.nodeCount);
    case TopologySpec::Kind::Random: return randomTreeTopology(cfg.nodeCount, cfg.topology.maxChildren, cfg.seed);
    case TopologySpec::Kind::File: return loadTopologyFile(cfg.topology.file, cfg.nodeCount);
    case TopologySpec::Kind::Explicit: return buildTree(cfg.topology.edges, cfg.nodeCount);
    }
    throw ConfigError("unknown topology kind");
}

Simulator::Simulator(SimConfig cfg)
    : cfg_((validate(cfg), std::move(cfg))),
      tree_(buildTopology(cfg_)),
      links_(cfg_.defaultPdr),
      sf_(makeSchedulingFunction(cfg_.schedulingFunction, cfg_.scheduling)) {
    if (cfg_.pdrRange) {
        Rng rng = deriveRng(cfg_.seed, 0, kLinkStream);
        boost::random::uniform_real_distribution<double> dist(cfg_.pdrRange->first, cfg_.pdrRange->second);
        for (const auto& e : tree_.edges())
            links_.set(e.child, e.parent, dist(rng));
    }
    for (const auto& l : cfg_.linkPdr)
        links_.set(l.a, l.b, l.pdr);

    const auto size = cfg_.slotframe.slotframeSize;
    const auto channels = cfg_.hopping.nChannels();
    nodes_.reserve(cfg_.nodeCount);
    for (std::uint32_t i = 0; i < cfg_.nodeCount; ++i) {
        const NodeId id{i};
        auto override = cfg_.trafficOverrides.find(i);
        nodes_.push_back(NodeState{
            .id = id,
            .parent = tree_.parent(id),
            .queue = {},
            .schedule = Schedule::minimal(size, channels),
            .history = TrafficHistory(cfg_.scheduling.emsf.beta),
            .usage = CellUsageStats{cfg_.scheduling.msf.windowLen, 0, 0},
            .traffic = override == cfg_.trafficOverrides.end() ? cfg_.traffic : override->second,
            .trafficRng = deriveRng(cfg_.seed, i, kTrafficStream),
            .macRng = deriveRng(cfg_.seed, i, kMacStream),
            .lockedSlots = {},
            .generatedThisFrame = 0,
            .receivedThisFrame = 0,
            .control = {},
            .backoff = 0,
            .backoffExponent = cfg_.minBackoffExponent,
            .pendingTransaction = std::nullopt,
            .serving = 0,
            .nextSeqNum = 0,
        });
    }

    endAsn_ = Asn{cfg_.slotframeCount * size};
    log_.slotDurationMs = cfg_.slotframe.slotDurationMs;
    log_.slotframeSize = size;
    log_.nodeCount = cfg_.nodeCount;
}

void Simulator::run() {
    while (asn_ < endAsn_)
        advance();
    finish();
}

void Simulator::advance() {
    const auto coords = slotCoordinates(asn_, cfg_.slotframe);
    if (coords.slotOffset == 0)
        slotframeBoundary(coords.cycle);
    stepSlot(asn_);
    ++asn_.value;
}

void Simulator::finish() {
    if (finished_)
        return;
    finished_ = true;
    if (asn_.value == 0)
        return;
    sampleQueues();
    recordCounters(asn_.value / cfg_.slotframe.slotframeSize);
    while (!transactions_.empty()) {
        const auto id = transactions_.begin()->first;
        completeTransaction(id, sixp::Status::PacketLoss, asn_);
    }
}

void Simulator::slotframeBoundary(std::uint64_t frameIndex) {
    if (frameIndex > 0) {
        sampleQueues();
        for (auto& n : nodes_) {
            if (!n.parent)
                continue;
            const std::uint64_t seen =
                n.generatedThisFrame + (cfg_.scheduling.emsf.countForwarded ? n.receivedThisFrame : 0);
            n.history.record(static_cast<std::int64_t>(seen));
            n.generatedThisFrame = 0;
            n.receivedThisFrame = 0;
        }
    }
    if (log_.overheadBytesPerFrame.size() <= frameIndex)
        log_.overheadBytesPerFrame.resize(frameIndex + 1, 0);

    for (auto& n : nodes_)
        if (n.parent)
            generateTraffic(n, frameIndex);
    recordCounters(frameIndex);

    for (auto& n : nodes_) {
        if (!n.parent)
            continue;
        NodeContext ctx{
            .self = n.id,
            .parent = *n.parent,
            .frameIndex = frameIndex,
            .schedule = n.schedule,
            .lockedSlots = n.lockedSlots,
            .history = n.history,
            .usage = n.usage,
            .queueLen = n.queue.size(),
            .transactionPending = n.pendingTransaction.has_value() || n.serving > 0,
            .seqNum = n.nextSeqNum,
            .rng = n.macRng,
        };
        if (auto req = sf_->onSlotframe(ctx))
            startTransaction(n, std::move(*req));
    }
}

void Simulator::generateTraffic(NodeState& n, std::uint64_t frameIndex) {
    const GeneratedTraffic g = generatePackets(n.traffic, frameIndex, n.trafficRng);
    n.generatedThisFrame = g.total();
    for (std::uint32_t i = 0; i < g.total(); ++i) {
        Packet p{n.id, asn_, cfg_.payloadBytes, 0, log_.packetRecords.size()};
        log_.packetRecords.push_back(PacketRecord{n.id, asn_, std::nullopt, std::nullopt});
        ++generated_;
        if (n.queue.size() < cfg_.queueCapacity) {
            n.queue.push_back(p);
            maxQueueDepth_ = std::max<std::uint32_t>(maxQueueDepth_, static_cast<std::uint32_t>(n.queue.size()));
        } else {
            dropPacket(p, DropReason::QueueOverflow);
        }
    }
}

void Simulator::startTransaction(NodeState& n, sixp::Request req) {
    const std::uint64_t id = nextTransaction_++;
    if (req.kind == sixp::Command::Add)
        for (const Cell& c : req.cellList)
            n.lockedSlots.push_back(c.slotOffset);
    n.control.push_back(ControlMessage{id, n.id, req.responder, false, req.sizeBytes, 0});
    n.pendingTransaction = id;
    ++n.nextSeqNum;
    transactions_.emplace(id, Transaction{std::move(req), std::nullopt, {}, 0});
}

void Simulator::stepSlot(Asn asn) {
    const auto offset = slotCoordinates(asn, cfg_.slotframe).slotOffset;
    if (offset == 0)
        sharedSlot(asn);
    else
        dedicatedSlot(asn, offset);
}

bool Simulator::receptionOk(const Transmission& t, const std::vector<Transmission>& all, bool& collided) const {
    collided = false;
    for (const auto& u : all) {
        if (u.from == t.from)
            continue;
        // Half duplex: a node sending in this slot hears nothing.
        if (u.from == t.to) {
            collided = true;
            return false;
        }
        if (u.frequency == t.frequency && tree_.adjacent(u.from, t.to)) {
            collided = true;
            return false;
        }
    }
    return true;
}

void Simulator::sharedSlot(Asn asn) {
    std::vector<Transmission> txs;
    for (auto& n : nodes_) {
        if (n.control.empty())
            continue;
        if (n.backoff > 0) {
            --n.backoff;
            continue;
        }
        const auto& head = n.control.front();
        txs.push_back({n.id, head.to, hopFrequency(0, asn, cfg_.hopping), true});
    }

    std::vector<bool> ok(txs.size());
    for (std::size_t i = 0; i < txs.size(); ++i) {
        NodeState& s = nodes_[txs[i].from.value];
        chargeOverhead(s.control.front().transaction, s.control.front().sizeBytes, asn);
        bool collided = false;
        const bool clear = receptionOk(txs[i], txs, collided);
        if (collided)
            ++log_.sharedCollisions;
        ok[i] = uniform01(s.macRng) < links_.pdr(txs[i].from, txs[i].to) && clear;
    }

    for (std::size_t i = 0; i < txs.size(); ++i) {
        NodeState& s = nodes_[txs[i].from.value];
        if (ok[i]) {
            const ControlMessage msg = s.control.front();
            s.control.pop_front();
            s.backoffExponent = cfg_.minBackoffExponent;
            s.backoff = 0;
            deliverControl(msg, asn);
        } else {
            controlAttemptFailed(s, asn);
        }
    }
}

void Simulator::dedicatedSlot(Asn asn, std::uint32_t slotOffset) {
    std::vector<Transmission> txs;
    for (auto& n : nodes_) {
        const auto& cell = n.schedule.at(slotOffset);
        if (!cell || cell->linkOption != LinkOption::Tx)
            continue;
        const NodeId peer = *cell->peer;
        const bool control = cfg_.sixpTransport == SixPTransport::Dedicated && !n.control.empty()
                          && !n.control.front().isResponse && n.control.front().to == peer;
        const bool data = !control && !n.queue.empty();
        n.usage.recordCell(control || data);
        if (control || data)
            txs.push_back({n.id, peer, hopFrequency(cell->channelOffset, asn, cfg_.hopping), control});
    }

    std::vector<bool> ok(txs.size());
    for (std::size_t i = 0; i < txs.size(); ++i) {
        const auto& t = txs[i];
        NodeState& s = nodes_[t.from.value];
        if (t.control)
            chargeOverhead(s.control.front().transaction, s.control.front().sizeBytes, asn);
        bool collided = false;
        const bool clear = receptionOk(t, txs, collided);
        if (collided)
            ++log_.dataCollisions;
        ok[i] = uniform01(s.macRng) < links_.pdr(t.from, t.to) && clear;
    }

    for (std::size_t i = 0; i < txs.size(); ++i) {
        const auto& t = txs[i];
        NodeState& s = nodes_[t.from.value];
        if (t.control) {
            if (ok[i]) {
                const ControlMessage msg = s.control.front();
                s.control.pop_front();
                deliverControl(msg, asn);
            } else {
                controlAttemptFailed(s, asn);
            }
            continue;
        }

        Packet& head = s.queue.front();
        maxTransmissions_ = std::max(maxTransmissions_, head.retries + 1);
        if (ok[i]) {
            Packet p = head;
            s.queue.pop_front();
            NodeState& r = nodes_[t.to.value];
            if (!r.parent) {
                log_.packetRecords[p.record].delivery = asn;
                ++delivered_;
            } else {
                // Arrivals count as forwarding demand even when the queue
                // has no room for them.
                ++r.receivedThisFrame;
                p.retries = 0;
                if (r.queue.size() < cfg_.queueCapacity) {
                    r.queue.push_back(p);
                    maxQueueDepth_ =
                        std::max<std::uint32_t>(maxQueueDepth_, static_cast<std::uint32_t>(r.queue.size()));
                } else {
                    dropPacket(p, DropReason::QueueOverflow);
                }
            }
        } else if (head.retries >= cfg_.macMaxRetries) {
            const Packet p = head;
            s.queue.pop_front();
            dropPacket(p, DropReason::RetryLimit);
        } else {
            ++head.retries;
        }
    }
}

void Simulator::controlAttemptFailed(NodeState& n, Asn asn) {
    ControlMessage& head = n.control.front();
    ++head.attempts;
    // Each 6P try is a MAC frame with its own retry budget.
    const std::uint32_t perTry = cfg_.macMaxRetries + 1;
    if (head.attempts >= perTry * (cfg_.sixpMaxRetries + 1)) {
        const ControlMessage msg = head;
        n.control.pop_front();
        n.backoffExponent = cfg_.minBackoffExponent;
        n.backoff = 0;
        sixp::Status status = sixp::Status::PacketLoss;
        // A rejected request stays a negotiation error even if the rejection
        // itself never arrives.
        if (msg.isResponse) {
            const auto& txn = transactions_.at(msg.transaction);
            if (txn.outcome && txn.outcome->status == sixp::Status::NegotiationError)
                status = sixp::Status::NegotiationError;
        }
        completeTransaction(msg.transaction, status, asn);
        return;
    }
    if (head.attempts % perTry == 0)
        n.backoffExponent = cfg_.minBackoffExponent;
    boost::random::uniform_int_distribution<std::uint32_t> window(0, (1u << n.backoffExponent) - 1);
    n.backoff = window(n.macRng);
    n.backoffExponent = std::min(n.backoffExponent + 1, cfg_.maxBackoffExponent);
}

void Simulator::deliverControl(const ControlMessage& msg, Asn asn) {
    Transaction& txn = transactions_.at(msg.transaction);
    if (!msg.isResponse) {
        NodeState& r = nodes_[msg.to.value];
        const bool busy = cfg_.sixpSingleTransaction && r.serving > 0;
        sixp::Outcome out =
            busy ? sixp::Outcome{sixp::Status::NegotiationError, {},
                                 txn.request.sizeBytes + cfg_.scheduling.cost.responseSize(txn.request.numCells)}
                 : respondToRequest(txn.request, r.schedule, cfg_.scheduling.cost, r.lockedSlots);
        ++r.serving;
        txn.serving = true;
        if (out.status == sixp::Status::Success && txn.request.kind == sixp::Command::Add) {
            for (const Cell& c : out.chosen) {
                r.lockedSlots.push_back(c.slotOffset);
                txn.responderLocks.push_back(c.slotOffset);
            }
        }
        r.control.push_back(ControlMessage{msg.transaction, r.id, msg.from, true,
                                           cfg_.scheduling.cost.responseSize(txn.request.numCells), 0});
        txn.outcome = std::move(out);
        return;
    }

    sixp::Status status = txn.outcome->status;
    if (status == sixp::Status::Success) {
        NodeState& a = nodes_[txn.request.initiator.value];
        NodeState& b = nodes_[txn.request.responder.value];
        // The commit happens with both sides' locks still held, so only a
        // protocol bug can make it collide.
        try {
            applyOutcome(a.schedule, b.schedule, txn.request, *txn.outcome);
        } catch (const ScheduleConflict&) {
            status = sixp::Status::NegotiationError;
        }
    }
    completeTransaction(msg.transaction, status, asn);
}

void Simulator::completeTransaction(std::uint64_t id, sixp::Status status, Asn asn) {
    auto it = transactions_.find(id);
    Transaction& txn = it->second;
    NodeState& a = nodes_[txn.request.initiator.value];
    NodeState& b = nodes_[txn.request.responder.value];
    if (txn.request.kind == sixp::Command::Add) {
        std::vector<std::uint32_t> offered;
        for (const Cell& c : txn.request.cellList)
            offered.push_back(c.slotOffset);
        unlock(a, offered);
    }
    unlock(b, txn.responderLocks);
    a.pendingTransaction.reset();
    if (txn.serving)
        --b.serving;
    for (NodeState* n : {&a, &b})
        std::erase_if(n->control, [id](const ControlMessage& m) { return m.transaction == id; });

    // A transaction cut off by the end of the run before anything was sent
    // never happened on the air.
    if (txn.bytes > 0) {
        log_.sixpRecords.push_back(SixPRecord{asn, txn.request.initiator, txn.request.responder, txn.request.kind,
                                              txn.request.numCells, status, txn.bytes});
    }
    transactions_.erase(it);
}

void Simulator::unlock(NodeState& n, const std::vector<std::uint32_t>& slots) {
    for (std::uint32_t s : slots) {
        auto it = std::find(n.lockedSlots.begin(), n.lockedSlots.end(), s);
        if (it != n.lockedSlots.end())
            n.lockedSlots.erase(it);
    }
}

void Simulator::chargeOverhead(std::uint64_t transaction, std::uint32_t bytes, Asn asn) {
    transactions_.at(transaction).bytes += bytes;
    const auto frame = asn.value / cfg_.slotframe.slotframeSize;
    if (log_.overheadBytesPerFrame.size() <= frame)
        log_.overheadBytesPerFrame.resize(frame + 1, 0);
    log_.overheadBytesPerFrame[frame] += bytes;
}

void Simulator::sampleQueues() {
    std::vector<std::uint32_t> depths;
    depths.reserve(nodes_.size());
    for (const auto& n : nodes_)
        if (n.parent)
            depths.push_back(static_cast<std::uint32_t>(n.queue.size()));
    log_.queueSamples.push_back(std::move(depths));
}

FrameCounters Simulator::counters() const {
    FrameCounters c;
    c.frame = asn_.value / cfg_.slotframe.slotframeSize;
    c.generated = generated_;
    c.delivered = delivered_;
    c.droppedRetry = droppedRetry_;
    c.droppedOverflow = droppedOverflow_;
    for (const auto& n : nodes_)
        c.queued += n.queue.size();
    c.maxQueueDepth = maxQueueDepth_;
    c.maxTransmissionsPerHop = maxTransmissions_;
    return c;
}

void Simulator::recordCounters(std::uint64_t frame) {
    FrameCounters c = counters();
    c.frame = frame;
    log_.frameCounters.push_back(c);
}

void Simulator::dropPacket(const Packet& p, DropReason reason) {
    log_.packetRecords[p.record].drop = reason;
    if (reason == DropReason::RetryLimit)
        ++droppedRetry_;
    else
        ++droppedOverflow_;
}

bool Simulator::schedulesMirrored() const {
    for (const auto& n : nodes_) {
        for (const Cell& c : n.schedule.cells()) {
            if (c.linkOption == LinkOption::Shared)
                continue;
            const LinkOption mirror = c.linkOption == LinkOption::Tx ? LinkOption::Rx : LinkOption::Tx;
            const NodeState& peer = nodes_.at(c.peer->value);
            if (!peer.schedule.contains(Cell{c.slotOffset, c.channelOffset, mirror, n.id}))
                return false;
        }
    }
    return true;
}

MetricsLog runSimulation(const SimConfig& cfg) {
    Simulator sim(cfg);
    sim.run();
    return sim.takeLog();
}

} // namespace tsch
