#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nf/value.hpp"

namespace nf {

using NodeId = std::string;
using Edge = std::pair<NodeId, NodeId>;
using EdgeSet = std::set<Edge>;

/// A validation issue: stable machine code, human message, offending nodes.
struct Issue {
    std::string code;
    std::string message;
    std::vector<NodeId> nodes;
};

struct Report {
    std::vector<Issue> issues;

    bool ok() const { return issues.empty(); }
    bool has(const std::string& code) const {
        for (const auto& i : issues)
            if (i.code == code) return true;
        return false;
    }
    void add(std::string code, std::string message, std::vector<NodeId> nodes = {}) {
        issues.push_back({std::move(code), std::move(message), std::move(nodes)});
    }
    void merge(const Report& other) {
        issues.insert(issues.end(), other.issues.begin(), other.issues.end());
    }
    std::string to_string() const {
        std::ostringstream os;
        for (const auto& i : issues) {
            os << "[" << i.code << "] " << i.message;
            if (!i.nodes.empty()) {
                os << " (";
                for (std::size_t k = 0; k < i.nodes.size(); ++k)
                    os << (k ? ", " : "") << i.nodes[k];
                os << ")";
            }
            os << "\n";
        }
        return os.str();
    }
};

/// A structured graph: a node set carrying two independent simple directed
/// relations (S = "belongs to", E = links) and a value set per node.
/// Labels are display metadata only; they never enter equality, matching or
/// typing.
class StructuredGraph {
public:
    void add_node(const NodeId& id, ValueSet values = {}, std::optional<std::string> label = {}) {
        nodes_.insert(id);
        if (!values.empty()) values_[id] = std::move(values);
        if (label) labels_[id] = std::move(*label);
    }
    void add_s_edge(const NodeId& a, const NodeId& b) { s_edges_.insert({a, b}); }
    void add_e_edge(const NodeId& a, const NodeId& b) { e_edges_.insert({a, b}); }

    void set_values(const NodeId& id, ValueSet values) {
        if (values.empty())
            values_.erase(id);
        else
            values_[id] = std::move(values);
    }
    void add_value(const NodeId& id, const Value& v) { values_[id].insert(v); }
    void set_label(const NodeId& id, std::string label) { labels_[id] = std::move(label); }

    void remove_node(const NodeId& id) {
        nodes_.erase(id);
        values_.erase(id);
        labels_.erase(id);
        erase_incident(s_edges_, id);
        erase_incident(e_edges_, id);
    }
    void remove_s_edge(const NodeId& a, const NodeId& b) { s_edges_.erase({a, b}); }
    void remove_e_edge(const NodeId& a, const NodeId& b) { e_edges_.erase({a, b}); }

    const std::set<NodeId>& nodes() const { return nodes_; }
    const EdgeSet& s_edges() const { return s_edges_; }
    const EdgeSet& e_edges() const { return e_edges_; }

    bool has_node(const NodeId& id) const { return nodes_.count(id) > 0; }
    bool has_s_edge(const NodeId& a, const NodeId& b) const { return s_edges_.count({a, b}) > 0; }
    bool has_e_edge(const NodeId& a, const NodeId& b) const { return e_edges_.count({a, b}) > 0; }

    const ValueSet& values_of(const NodeId& id) const {
        static const ValueSet empty;
        auto it = values_.find(id);
        return it == values_.end() ? empty : it->second;
    }
    std::optional<std::string> label_of(const NodeId& id) const {
        auto it = labels_.find(id);
        if (it == labels_.end()) return std::nullopt;
        return it->second;
    }
    /// Display name: label when set, node id otherwise.
    std::string display(const NodeId& id) const {
        auto l = label_of(id);
        return l ? *l : id;
    }
    const std::map<NodeId, ValueSet>& value_map() const { return values_; }
    const std::map<NodeId, std::string>& label_map() const { return labels_; }

    std::vector<NodeId> s_children(const NodeId& parent) const { return select(s_edges_, parent, false); }
    std::vector<NodeId> s_parents(const NodeId& child) const { return select(s_edges_, child, true); }
    std::vector<NodeId> e_predecessors(const NodeId& target) const { return select(e_edges_, target, false); }
    std::vector<NodeId> e_successors(const NodeId& source) const { return select(e_edges_, source, true); }

    /// Structural equality; labels are ignored.
    friend bool operator==(const StructuredGraph& a, const StructuredGraph& b) {
        return a.nodes_ == b.nodes_ && a.s_edges_ == b.s_edges_ && a.e_edges_ == b.e_edges_ &&
               a.values_ == b.values_;
    }

private:
    static void erase_incident(EdgeSet& edges, const NodeId& id) {
        for (auto it = edges.begin(); it != edges.end();) {
            if (it->first == id || it->second == id)
                it = edges.erase(it);
            else
                ++it;
        }
    }
    // selects the other endpoint of edges touching `id` on the given side
    std::vector<NodeId> select(const EdgeSet& edges, const NodeId& id, bool id_is_source) const {
        std::vector<NodeId> out;
        for (const auto& [a, b] : edges) {
            if (id_is_source && a == id) out.push_back(b);
            if (!id_is_source && b == id) out.push_back(a);
        }
        return out;
    }

    std::set<NodeId> nodes_;
    EdgeSet s_edges_;
    EdgeSet e_edges_;
    std::map<NodeId, ValueSet> values_;
    std::map<NodeId, std::string> labels_;
};

using GraphPtr = std::shared_ptr<const StructuredGraph>;

inline GraphPtr make_graph(StructuredGraph g) {
    return std::make_shared<const StructuredGraph>(std::move(g));
}

/// Checks the StructuredGraph representation invariants: every edge endpoint
/// is a node, and value/label entries refer to existing nodes.
inline Report validate_graph(const StructuredGraph& g) {
    Report report;
    auto check_edges = [&](const EdgeSet& edges, const char* rel, const char* code) {
        for (const auto& [a, b] : edges) {
            if (!g.has_node(a))
                report.add(code, std::string("dangling ") + rel + " edge endpoint " + a, {a});
            if (!g.has_node(b))
                report.add(code, std::string("dangling ") + rel + " edge endpoint " + b, {b});
        }
    };
    check_edges(g.s_edges(), "S", "dangling-s-endpoint");
    check_edges(g.e_edges(), "E", "dangling-e-endpoint");
    for (const auto& [id, vs] : g.value_map())
        if (!g.has_node(id)) report.add("stray-values", "values recorded for unknown node " + id, {id});
    for (const auto& [id, l] : g.label_map())
        if (!g.has_node(id)) report.add("stray-label", "label recorded for unknown node " + id, {id});
    return report;
}

/// A homomorphism of structured graphs: a total node map preserving both edge
/// relations and including value sets.
struct Homomorphism {
    GraphPtr dom;
    GraphPtr cod;
    std::map<NodeId, NodeId> node_map;

    const NodeId& operator()(const NodeId& x) const {
        auto it = node_map.find(x);
        if (it == node_map.end()) throw std::out_of_range("homomorphism: unmapped node " + x);
        return it->second;
    }
    bool maps(const NodeId& x) const { return node_map.count(x) > 0; }

    static Homomorphism identity(GraphPtr g) {
        Homomorphism h;
        h.dom = g;
        h.cod = g;
        for (const auto& n : g->nodes()) h.node_map[n] = n;
        return h;
    }
};

inline bool same_graph(const GraphPtr& a, const GraphPtr& b) {
    return a == b || (a && b && *a == *b);
}

inline Report check_homomorphism(const Homomorphism& h) {
    Report report;
    if (!h.dom || !h.cod) {
        report.add("map-not-total", "homomorphism missing domain or codomain");
        return report;
    }
    for (const auto& n : h.dom->nodes())
        if (!h.maps(n)) report.add("map-not-total", "node " + n + " is unmapped", {n});
    for (const auto& [x, y] : h.node_map) {
        if (!h.dom->has_node(x)) report.add("map-extra", "map defined on unknown node " + x, {x});
        if (!h.cod->has_node(y)) report.add("image-missing", "image " + y + " of " + x + " is not a codomain node", {x, y});
    }
    auto check_rel = [&](const EdgeSet& dom_edges, bool s_rel) {
        for (const auto& [a, b] : dom_edges) {
            if (!h.maps(a) || !h.maps(b)) continue;
            const NodeId& ia = h(a);
            const NodeId& ib = h(b);
            bool present = s_rel ? h.cod->has_s_edge(ia, ib) : h.cod->has_e_edge(ia, ib);
            if (!present)
                report.add(s_rel ? "s-edge-not-preserved" : "e-edge-not-preserved",
                           std::string(s_rel ? "S" : "E") + " edge (" + a + "," + b + ") has no image edge",
                           {a, b});
        }
    };
    check_rel(h.dom->s_edges(), true);
    check_rel(h.dom->e_edges(), false);
    for (const auto& n : h.dom->nodes()) {
        if (!h.maps(n)) continue;
        if (!value_subset(h.dom->values_of(n), h.cod->values_of(h(n))))
            report.add("value-inclusion", "value inclusion violated at node " + n, {n});
    }
    return report;
}

/// A homomorphism is a mono exactly when its node function is injective.
inline bool is_mono(const Homomorphism& h) {
    std::set<NodeId> seen;
    for (const auto& [x, y] : h.node_map)
        if (!seen.insert(y).second) return false;
    return true;
}

/// Diagrammatic composition: first : A -> B, then : B -> C gives A -> C.
inline Homomorphism compose(const Homomorphism& first, const Homomorphism& then) {
    if (!same_graph(first.cod, then.dom))
        throw std::invalid_argument("compose: codomain of first map is not the domain of the second");
    Homomorphism out;
    out.dom = first.dom;
    out.cod = then.cod;
    for (const auto& [x, y] : first.node_map) out.node_map[x] = then(y);
    return out;
}

struct Span {
    Homomorphism left;   // apex -> A
    Homomorphism right;  // apex -> B
};

struct Cospan {
    Homomorphism left;   // A -> base
    Homomorphism right;  // B -> base
};

namespace detail {

inline std::vector<NodeId> topological_order(const StructuredGraph& g) {
    std::map<NodeId, int> indegree;
    for (const auto& n : g.nodes()) indegree[n] = 0;
    for (const auto& [a, b] : g.s_edges())
        if (g.has_node(a) && g.has_node(b)) ++indegree[b];
    std::vector<NodeId> order;
    std::set<NodeId> ready;
    for (const auto& [n, d] : indegree)
        if (d == 0) ready.insert(n);
    while (!ready.empty()) {
        NodeId n = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(n);
        for (const auto& [a, b] : g.s_edges())
            if (a == n && g.has_node(b) && --indegree[b] == 0) ready.insert(b);
    }
    return order;
}

} // namespace detail

inline bool s_edges_acyclic(const StructuredGraph& g) {
    return detail::topological_order(g).size() == g.nodes().size();
}

/// Replaces the S relation by its transitive closure. E edges and values are
/// untouched. Throws when S has a cycle.
inline StructuredGraph normalize_s(const StructuredGraph& g) {
    if (!s_edges_acyclic(g))
        throw std::invalid_argument("normalize_s: S relation has a cycle");
    StructuredGraph out = g;
    // closure by repeated composition; graphs here are desk-scale
    std::map<NodeId, std::set<NodeId>> reach;
    for (const auto& [a, b] : g.s_edges()) reach[a].insert(b);
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto& [a, targets] : reach) {
            std::set<NodeId> extra;
            for (const auto& t : targets) {
                auto it = reach.find(t);
                if (it == reach.end()) continue;
                for (const auto& t2 : it->second)
                    if (!targets.count(t2)) extra.insert(t2);
            }
            if (!extra.empty()) {
                targets.insert(extra.begin(), extra.end());
                changed = true;
            }
        }
    }
    for (const auto& [a, targets] : reach)
        for (const auto& t : targets) out.add_s_edge(a, t);
    return out;
}

/// True when the S relation already equals its transitive closure.
inline bool s_transitively_closed(const StructuredGraph& g) {
    for (const auto& [a, b] : g.s_edges())
        for (const auto& [c, d] : g.s_edges())
            if (b == c && !g.has_s_edge(a, d)) return false;
    return true;
}

/// An S edge (c, x) is direct when it does not factor through an intermediate
/// node; in a transitively closed DAG these are the transitive-reduction
/// edges.
inline bool s_edge_is_direct(const StructuredGraph& g, const NodeId& child, const NodeId& parent) {
    for (const auto& [a, b] : g.s_edges()) {
        if (a == child && b != parent && b != child && g.has_s_edge(b, parent)) return false;
    }
    return true;
}

inline bool connected_under_s_and_e(const StructuredGraph& g) {
    if (g.nodes().empty()) return true;
    std::map<NodeId, std::vector<NodeId>> adj;
    auto link = [&](const NodeId& a, const NodeId& b) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    };
    for (const auto& [a, b] : g.s_edges()) link(a, b);
    for (const auto& [a, b] : g.e_edges()) link(a, b);
    std::set<NodeId> seen;
    std::queue<NodeId> frontier;
    frontier.push(*g.nodes().begin());
    seen.insert(*g.nodes().begin());
    while (!frontier.empty()) {
        NodeId n = frontier.front();
        frontier.pop();
        for (const auto& m : adj[n])
            if (g.has_node(m) && seen.insert(m).second) frontier.push(m);
    }
    return seen.size() == g.nodes().size();
}

// ---------------------------------------------------------------------------
// Canonical certificates and isomorphism
// ---------------------------------------------------------------------------

namespace detail {

inline std::string value_set_key(const ValueSet& vs) {
    std::string key = "{";
    for (const auto& v : vs) key += v.to_string() + ";";
    return key + "}";
}

struct CertContext {
    const StructuredGraph& g;
    const std::map<NodeId, std::string>* tags; // extra per-node color, e.g. a typing

    std::map<NodeId, std::string> initial_colors() const {
        std::map<NodeId, std::string> colors;
        std::map<NodeId, std::array<int, 4>> degree;
        for (const auto& n : g.nodes()) degree[n] = {0, 0, 0, 0};
        for (const auto& [a, b] : g.s_edges()) {
            if (degree.count(a)) degree[a][0]++;
            if (degree.count(b)) degree[b][1]++;
        }
        for (const auto& [a, b] : g.e_edges()) {
            if (degree.count(a)) degree[a][2]++;
            if (degree.count(b)) degree[b][3]++;
        }
        for (const auto& n : g.nodes()) {
            std::string c = value_set_key(g.values_of(n));
            if (tags) {
                auto it = tags->find(n);
                c += "|" + (it == tags->end() ? std::string("?") : it->second);
            }
            for (int d : degree[n]) c += "|" + std::to_string(d);
            colors[n] = c;
        }
        return colors;
    }

    // Weisfeiler-Lehman style refinement. Colors are compressed per round to
    // canonical tokens (indices into the sorted signature list) so they stay
    // short and isomorphism-invariant.
    void refine(std::map<NodeId, std::string>& colors) const {
        std::size_t distinct_before = compress(colors);
        for (std::size_t round = 0; round < g.nodes().size(); ++round) {
            std::map<NodeId, std::string> sig;
            for (const auto& n : g.nodes()) {
                std::vector<std::string> env;
                for (const auto& [a, b] : g.s_edges()) {
                    if (a == n && colors.count(b)) env.push_back("s>" + colors[b]);
                    if (b == n && colors.count(a)) env.push_back("s<" + colors[a]);
                }
                for (const auto& [a, b] : g.e_edges()) {
                    if (a == n && colors.count(b)) env.push_back("e>" + colors[b]);
                    if (b == n && colors.count(a)) env.push_back("e<" + colors[a]);
                }
                std::sort(env.begin(), env.end());
                std::string c = colors[n];
                for (const auto& e : env) c += "#" + e;
                sig[n] = c;
            }
            std::size_t distinct_after = compress(sig);
            colors = std::move(sig);
            // refinement only ever splits classes; a stable count means a
            // stable partition
            if (distinct_after == distinct_before) break;
            distinct_before = distinct_after;
        }
    }

    static std::size_t compress(std::map<NodeId, std::string>& colors) {
        std::set<std::string> distinct;
        for (const auto& [n, c] : colors) distinct.insert(c);
        std::map<std::string, std::size_t> index;
        for (const auto& c : distinct) index.emplace(c, index.size());
        for (auto& [n, c] : colors) c = "c" + std::to_string(index.at(c));
        return distinct.size();
    }

    std::string certificate_for_order(const std::vector<NodeId>& order) const {
        std::map<NodeId, std::size_t> index;
        for (std::size_t i = 0; i < order.size(); ++i) index[order[i]] = i;
        std::ostringstream os;
        for (const auto& n : order) {
            os << "n" << value_set_key(g.values_of(n));
            if (tags) {
                auto it = tags->find(n);
                os << "|" << (it == tags->end() ? std::string("?") : it->second);
            }
            os << ";";
        }
        std::vector<std::string> edges;
        for (const auto& [a, b] : g.s_edges())
            edges.push_back("S" + std::to_string(index[a]) + ">" + std::to_string(index[b]));
        for (const auto& [a, b] : g.e_edges())
            edges.push_back("E" + std::to_string(index[a]) + ">" + std::to_string(index[b]));
        std::sort(edges.begin(), edges.end());
        for (const auto& e : edges) os << e << ";";
        return os.str();
    }

    // individualization-refinement search for the lexicographically least
    // certificate; exact, exponential only under heavy symmetry
    void search(std::map<NodeId, std::string> colors, std::vector<NodeId> fixed,
                std::string& best) const {
        refine(colors);
        // order nodes by (color, fixed position)
        std::vector<NodeId> remaining;
        for (const auto& n : g.nodes())
            if (std::find(fixed.begin(), fixed.end(), n) == fixed.end()) remaining.push_back(n);
        if (remaining.empty()) {
            std::string cert = certificate_for_order(fixed);
            if (best.empty() || cert < best) best = cert;
            return;
        }
        std::stable_sort(remaining.begin(), remaining.end(),
                         [&](const NodeId& a, const NodeId& b) { return colors[a] < colors[b]; });
        const std::string& first_color = colors[remaining.front()];
        std::vector<NodeId> candidates;
        for (const auto& n : remaining)
            if (colors[n] == first_color) candidates.push_back(n);
        for (const auto& pick : candidates) {
            auto next_colors = colors;
            next_colors[pick] += "!" + std::to_string(fixed.size());
            auto next_fixed = fixed;
            next_fixed.push_back(pick);
            search(std::move(next_colors), std::move(next_fixed), best);
        }
    }
};

} // namespace detail

/// Canonical certificate: equal certificates exactly characterize isomorphic
/// graphs (isomorphism respecting values and, when given, per-node tags).
inline std::string canonical_certificate(const StructuredGraph& g,
                                         const std::map<NodeId, std::string>* tags = nullptr) {
    detail::CertContext ctx{g, tags};
    std::string best;
    ctx.search(ctx.initial_colors(), {}, best);
    return best;
}

inline bool is_isomorphic(const StructuredGraph& a, const StructuredGraph& b) {
    if (a.nodes().size() != b.nodes().size() || a.s_edges().size() != b.s_edges().size() ||
        a.e_edges().size() != b.e_edges().size())
        return false;
    return canonical_certificate(a) == canonical_certificate(b);
}

} // namespace nf
