#include "fpplab/pwit.hpp"

#include <cmath>
#include <sstream>

#include "fpplab/errors.hpp"
#include "fpplab/random.hpp"

namespace fpplab {

namespace {
constexpr std::uint64_t kRootTag = hash_string("pwit-root");
constexpr std::uint64_t kWeightsPurpose = hash_string("weights");
constexpr std::uint64_t kMarkPurpose = hash_string("mark");
constexpr std::size_t kBlock = 16;
}  // namespace

VertexId VertexId::parent() const {
  if (path.empty()) throw DomainError("a root has no parent");
  VertexId p = *this;
  p.path.pop_back();
  return p;
}

VertexId VertexId::child(std::uint32_t k) const {
  if (k < 1) throw DomainError("child indices start at 1");
  VertexId c = *this;
  c.path.push_back(k);
  return c;
}

std::string VertexId::to_string() const {
  std::ostringstream os;
  os << root << ':';
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) os << '.';
    os << path[i];
  }
  return os.str();
}

std::strong_ordering operator<=>(const VertexId& a, const VertexId& b) {
  if (auto c = a.root <=> b.root; c != 0) return c;
  return std::lexicographical_compare_three_way(a.path.begin(), a.path.end(), b.path.begin(),
                                                b.path.end());
}

std::size_t VertexIdHash::operator()(const VertexId& v) const noexcept {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(v.root));
  for (auto k : v.path) h = hash_combine(h, k);
  return static_cast<std::size_t>(h);
}

PwitSample::PwitSample(std::uint64_t seed, std::uint32_t n) : seed_(seed), n_(n) {
  if (n < 2) throw DomainError("mark range needs n >= 2");
  for (int j = 1; j <= 2; ++j) {
    Node r{hash_key(seed, kRootTag, j), 0, 0, 0, j, static_cast<std::uint32_t>(j), {}};
    roots_[j - 1] = static_cast<NodeRef>(nodes_.size());
    nodes_.push_back(std::move(r));
  }
}

PwitSample::NodeRef PwitSample::root(int j) {
  if (j != 1 && j != 2) throw DomainError("root tag must be 1 or 2");
  return roots_[j - 1];
}

PwitSample::NodeRef PwitSample::child(NodeRef parent, std::uint32_t k) {
  if (k < 1) throw DomainError("child indices start at 1");
  const std::uint64_t slot = (static_cast<std::uint64_t>(parent) << 32) | k;
  auto it = children_.find(slot);
  if (it != children_.end()) return it->second;
  const Node& p = nodes_[parent];
  Node c{hash_combine(p.key, k), parent, k, p.depth + 1, p.root, 0, {}};
  auto ref = static_cast<NodeRef>(nodes_.size());
  nodes_.push_back(std::move(c));
  children_.emplace(slot, ref);
  return ref;
}

PwitSample::NodeRef PwitSample::node(const VertexId& v) {
  NodeRef r = root(v.root);
  for (auto k : v.path) r = child(r, k);
  return r;
}

VertexId PwitSample::id(NodeRef v) const {
  VertexId out;
  out.root = nodes_[v].root;
  out.path.resize(nodes_[v].depth);
  for (std::size_t i = out.path.size(); i-- > 0;) {
    out.path[i] = nodes_[v].index;
    v = nodes_[v].parent;
  }
  return out;
}

void PwitSample::extend(Node& node, std::size_t k) {
  std::size_t have = node.weights.size();
  if (have >= k) return;
  std::size_t target = ((k + kBlock - 1) / kBlock) * kBlock;
  node.weights.reserve(target);
  KeyedStream stream(hash_combine(node.key, kWeightsPurpose));
  double x = have ? node.weights.back() : 0.0;
  for (std::size_t i = have; i < target; ++i) {
    double next = x - std::log(bits_to_open_unit(stream.at(i)));
    if (!(next > x)) next = std::nextafter(x, INFINITY);
    node.weights.push_back(next);
    x = next;
  }
}

double PwitSample::child_weight(NodeRef v, std::uint32_t k) {
  if (k < 1) throw DomainError("child indices start at 1");
  Node& node = nodes_[v];
  extend(node, k);
  return node.weights[k - 1];
}

std::span<const double> PwitSample::child_weights(NodeRef v, std::size_t k) {
  if (k < 1) throw DomainError("child_weights needs k >= 1");
  Node& node = nodes_[v];
  extend(node, k);
  return {node.weights.data(), k};
}

std::uint32_t PwitSample::mark(NodeRef v) {
  Node& node = nodes_[v];
  if (node.mark == 0) node.mark = mark_of_key(node.key);
  return node.mark;
}

std::uint32_t PwitSample::mark_of_key(std::uint64_t key) const {
  std::uint64_t bits = mix64(hash_combine(key, kMarkPurpose));
  return 1 + static_cast<std::uint32_t>((static_cast<unsigned __int128>(bits) * n_) >> 64);
}

std::uint32_t PwitSample::child_mark(NodeRef v, std::uint32_t k) const {
  if (k < 1) throw DomainError("child indices start at 1");
  return mark_of_key(hash_combine(nodes_[v].key, k));
}

std::vector<double> PwitSample::child_weights(const VertexId& v, std::size_t k) {
  auto s = child_weights(node(v), k);
  return {s.begin(), s.end()};
}

std::vector<double> PwitSample::children_below(const VertexId& v, double x) {
  if (!(x > 0.0)) throw DomainError("children_below needs a positive threshold");
  NodeRef r = node(v);
  std::vector<double> out;
  for (std::uint32_t k = 1;; ++k) {
    double w = child_weight(r, k);
    if (w > x) break;
    out.push_back(w);
  }
  return out;
}

std::uint32_t PwitSample::mark(const VertexId& v) { return mark(node(v)); }

nlohmann::json PwitSample::subtree_json(std::span<const NodeRef> vertices) {
  nlohmann::json out = nlohmann::json::array();
  for (NodeRef v : vertices) {
    const Node& node = nodes_[v];
    double w = node.depth == 0 ? 0.0 : child_weight(node.parent, node.index);
    out.push_back({{"vertex", id(v).to_string()}, {"weight", w}, {"mark", mark(v)}});
  }
  return out;
}

}  // namespace fpplab
