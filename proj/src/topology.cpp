#include "tsch/topology.hpp"

#include "tsch/rng.hpp"

#include <boost/random/uniform_int_distribution.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace tsch {

std::optional<NodeId> RoutingTree::parent(NodeId n) const {
    if (!contains(n))
        throw TopologyError(fmt::format("unknown node {}", n.value));
    return parent_[n.value];
}

const std::vector<NodeId>& RoutingTree::children(NodeId n) const {
    if (!contains(n))
        throw TopologyError(fmt::format("unknown node {}", n.value));
    return children_[n.value];
}

std::vector<NodeId> RoutingTree::neighbours(NodeId n) const {
    std::vector<NodeId> out = children(n);
    if (auto p = parent_[n.value])
        out.push_back(*p);
    return out;
}

bool RoutingTree::adjacent(NodeId a, NodeId b) const {
    return parent(a) == b || parent(b) == a;
}

std::uint32_t RoutingTree::depth(NodeId n) const {
    if (!contains(n))
        throw TopologyError(fmt::format("unknown node {}", n.value));
    return depth_[n.value];
}

std::vector<TreeEdge> RoutingTree::edges() const {
    std::vector<TreeEdge> out;
    for (std::uint32_t i = 0; i < parent_.size(); ++i)
        if (parent_[i])
            out.push_back({NodeId{i}, *parent_[i]});
    return out;
}

RoutingTree buildTree(std::span<const TreeEdge> edges, std::size_t nodeCount) {
    if (nodeCount == 0)
        throw TopologyError("a tree needs at least the root");

    std::vector<std::vector<NodeId>> parents(nodeCount);
    for (const auto& e : edges) {
        if (e.child.value >= nodeCount || e.parent.value >= nodeCount)
            throw TopologyError(fmt::format("edge {}->{} references a node outside [0, {})",
                                            e.child.value, e.parent.value, nodeCount));
        if (e.child == e.parent)
            throw TopologyError(fmt::format("cycle: node {} is its own parent", e.child.value));
        parents[e.child.value].push_back(e.parent);
    }

    // Cycle detection over all child->parent edges, before multi-parent checks,
    // so that mutually parented nodes report the cycle.
    enum class Mark : std::uint8_t { None, Active, Done };
    std::vector<Mark> mark(nodeCount, Mark::None);
    for (std::size_t start = 0; start < nodeCount; ++start) {
        if (mark[start] != Mark::None)
            continue;
        std::vector<std::pair<std::size_t, std::size_t>> stack{{start, 0}};
        mark[start] = Mark::Active;
        while (!stack.empty()) {
            auto& [node, next] = stack.back();
            if (next < parents[node].size()) {
                const std::size_t p = parents[node][next++].value;
                if (mark[p] == Mark::Active)
                    throw TopologyError(fmt::format("cycle through node {}", p));
                if (mark[p] == Mark::None) {
                    mark[p] = Mark::Active;
                    stack.emplace_back(p, 0);
                }
            } else {
                mark[node] = Mark::Done;
                stack.pop_back();
            }
        }
    }

    RoutingTree tree;
    tree.parent_.assign(nodeCount, std::nullopt);
    tree.children_.assign(nodeCount, {});
    tree.depth_.assign(nodeCount, 0);
    for (std::uint32_t i = 0; i < nodeCount; ++i) {
        if (i == kRootNode.value) {
            if (!parents[i].empty())
                throw TopologyError("the root (node 0) cannot have a parent");
            continue;
        }
        if (parents[i].size() > 1)
            throw TopologyError(fmt::format("node {} has {} parents", i, parents[i].size()));
        if (parents[i].empty())
            throw TopologyError(fmt::format("node {} is disconnected (no parent)", i));
        tree.parent_[i] = parents[i].front();
        tree.children_[parents[i].front().value].push_back(NodeId{i});
    }
    for (auto& c : tree.children_)
        std::sort(c.begin(), c.end());

    // Acyclic with a single parentless node means every walk ends at the root.
    for (std::uint32_t i = 0; i < nodeCount; ++i) {
        std::uint32_t d = 0;
        for (auto p = tree.parent_[i]; p; p = tree.parent_[p->value])
            ++d;
        tree.depth_[i] = d;
    }
    return tree;
}

std::vector<NodeId> subTree(const RoutingTree& tree, NodeId n) {
    std::vector<NodeId> out;
    std::vector<NodeId> frontier{n};
    (void)tree.children(n); // validates n
    while (!frontier.empty()) {
        NodeId cur = frontier.back();
        frontier.pop_back();
        out.push_back(cur);
        for (NodeId c : tree.children(cur))
            frontier.push_back(c);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::uint64_t totalPackets(const RoutingTree& tree,
                           const std::map<NodeId, std::uint64_t>& generated, NodeId n) {
    std::uint64_t total = 0;
    for (NodeId v : subTree(tree, n)) {
        auto it = generated.find(v);
        if (it == generated.end())
            throw TopologyError(fmt::format("no generation count for subtree member {}", v.value));
        total += it->second;
    }
    return total;
}

RoutingTree chainTopology(std::size_t nodeCount) {
    std::vector<TreeEdge> edges;
    for (std::uint32_t i = 1; i < nodeCount; ++i)
        edges.push_back({NodeId{i}, NodeId{i - 1}});
    return buildTree(edges, nodeCount);
}

RoutingTree starTopology(std::size_t nodeCount) {
    std::vector<TreeEdge> edges;
    for (std::uint32_t i = 1; i < nodeCount; ++i)
        edges.push_back({NodeId{i}, kRootNode});
    return buildTree(edges, nodeCount);
}

RoutingTree randomTreeTopology(std::size_t nodeCount, std::size_t maxChildren, std::uint64_t seed) {
    if (maxChildren == 0 && nodeCount > 1)
        throw TopologyError("max children must be positive");
    Rng rng = deriveRng(seed, 0, 0x70);
    std::vector<std::size_t> childCount(nodeCount, 0);
    std::vector<std::uint32_t> open{0};
    std::vector<TreeEdge> edges;
    for (std::uint32_t i = 1; i < nodeCount; ++i) {
        boost::random::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
        const std::size_t idx = pick(rng);
        const std::uint32_t p = open[idx];
        edges.push_back({NodeId{i}, NodeId{p}});
        if (++childCount[p] == maxChildren)
            open.erase(open.begin() + static_cast<std::ptrdiff_t>(idx));
        open.push_back(i);
    }
    return buildTree(edges, nodeCount);
}

RoutingTree parseTopology(const std::string& text, std::size_t nodeCount) {
    std::istringstream in(text);
    std::string line;
    std::vector<TreeEdge> edges;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream fields(line);
        long long child = 0, parent = 0;
        if (!(fields >> child)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            throw TopologyError(fmt::format("line {}: expected \"childId parentId\"", lineNo));
        }
        std::string rest;
        if (!(fields >> parent) || (fields >> rest) || child < 0 || parent < 0)
            throw TopologyError(fmt::format("line {}: expected \"childId parentId\"", lineNo));
        edges.push_back({NodeId{static_cast<std::uint32_t>(child)},
                         NodeId{static_cast<std::uint32_t>(parent)}});
    }
    return buildTree(edges, nodeCount);
}

RoutingTree loadTopologyFile(const std::filesystem::path& path, std::size_t nodeCount) {
    std::ifstream in(path);
    if (!in)
        throw TopologyError(fmt::format("cannot open topology file {}", path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    return parseTopology(buf.str(), nodeCount);
}

} // namespace tsch
