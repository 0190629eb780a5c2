#pragma once

#include "tsch/core.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tsch {

class TopologyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TreeEdge {
    NodeId child;
    NodeId parent;
};

/// Static upstream routing tree rooted at node 0. Immutable once built.
class RoutingTree {
public:
    std::size_t nodeCount() const { return parent_.size(); }
    bool contains(NodeId n) const { return n.value < parent_.size(); }

    std::optional<NodeId> parent(NodeId n) const;
    const std::vector<NodeId>& children(NodeId n) const;
    /// Parent and children of n: the nodes sharing a symmetric link with it.
    std::vector<NodeId> neighbours(NodeId n) const;
    bool adjacent(NodeId a, NodeId b) const;
    /// Hop count to the root.
    std::uint32_t depth(NodeId n) const;

    std::vector<TreeEdge> edges() const;

private:
    friend RoutingTree buildTree(std::span<const TreeEdge> edges, std::size_t nodeCount);

    std::vector<std::optional<NodeId>> parent_;
    std::vector<std::vector<NodeId>> children_;
    std::vector<std::uint32_t> depth_;
};

/// Throws TopologyError on a cycle, a node with two parents, a parent for
/// the root, or a non-root node without a parent.
RoutingTree buildTree(std::span<const TreeEdge> edges, std::size_t nodeCount);

/// n plus all of its descendants, ascending by id.
std::vector<NodeId> subTree(const RoutingTree& tree, NodeId n);

/// Packets generated across the subtree rooted at n.
std::uint64_t totalPackets(const RoutingTree& tree,
                           const std::map<NodeId, std::uint64_t>& generated, NodeId n);

RoutingTree chainTopology(std::size_t nodeCount);
RoutingTree starTopology(std::size_t nodeCount);
/// Each node i > 0 attaches to a uniformly chosen earlier node that still
/// has fewer than maxChildren children.
RoutingTree randomTreeTopology(std::size_t nodeCount, std::size_t maxChildren, std::uint64_t seed);

/// Plain text, one "childId parentId" pair per line, '#' starts a comment.
RoutingTree parseTopology(const std::string& text, std::size_t nodeCount);
RoutingTree loadTopologyFile(const std::filesystem::path& path, std::size_t nodeCount);

} // namespace tsch
