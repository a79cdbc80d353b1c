#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace fpplab {

// Ulam-Harris address: root tag in {1,2} followed by 1-based child indices.
struct VertexId {
  int root = 1;
  std::vector<std::uint32_t> path;

  std::size_t depth() const { return path.size(); }
  VertexId parent() const;
  VertexId child(std::uint32_t k) const;
  std::string to_string() const;

  friend bool operator==(const VertexId&, const VertexId&) = default;
  friend std::strong_ordering operator<=>(const VertexId& a, const VertexId& b);
};

struct VertexIdHash {
  std::size_t operator()(const VertexId& v) const noexcept;
};

// Lazily realized PWITs with marks. Every random quantity of a vertex is a
// keyed function of (seed, root, path), so answers do not depend on the order
// of queries. Queries extend the memo; a sample is single-writer.
class PwitSample {
 public:
  using NodeRef = std::uint32_t;

  PwitSample(std::uint64_t seed, std::uint32_t n);

  std::uint64_t seed() const { return seed_; }
  std::uint32_t n() const { return n_; }

  NodeRef root(int j);
  NodeRef child(NodeRef parent, std::uint32_t k);
  NodeRef node(const VertexId& v);
  VertexId id(NodeRef v) const;
  std::uint32_t depth(NodeRef v) const { return nodes_[v].depth; }
  int root_of(NodeRef v) const { return nodes_[v].root; }

  // X_{vk}; the memo grows in blocks of 16.
  double child_weight(NodeRef v, std::uint32_t k);
  std::span<const double> child_weights(NodeRef v, std::size_t k);
  std::uint32_t mark(NodeRef v);
  // Mark of child k without materializing the child.
  std::uint32_t child_mark(NodeRef v, std::uint32_t k) const;

  std::vector<double> child_weights(const VertexId& v, std::size_t k);
  std::vector<double> children_below(const VertexId& v, double x);
  std::uint32_t mark(const VertexId& v);

  std::size_t memo_size() const { return nodes_.size(); }

  // [{"vertex": "1:2.1", "weight": X_v, "mark": M_v}, ...]
  nlohmann::json subtree_json(std::span<const NodeRef> vertices);

 private:
  struct Node {
    std::uint64_t key;
    NodeRef parent;
    std::uint32_t index;  // child index within parent; 0 for roots
    std::uint32_t depth;
    int root;
    std::uint32_t mark;  // 0 until computed
    std::vector<double> weights;
  };

  void extend(Node& node, std::size_t k);
  std::uint32_t mark_of_key(std::uint64_t key) const;

  std::uint64_t seed_;
  std::uint32_t n_;
  std::vector<Node> nodes_;
  NodeRef roots_[2];
  std::unordered_map<std::uint64_t, NodeRef> children_;
};

}  // namespace fpplab
