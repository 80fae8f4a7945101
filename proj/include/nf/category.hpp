#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "nf/graph.hpp"

namespace nf {

namespace detail {

/// Union-find over arbitrary keys, used to form pushout node classes.
template <typename Key>
class UnionFind {
public:
    void ensure(const Key& k) { parent_.emplace(k, k); }
    Key find(const Key& k) {
        ensure(k);
        Key root = k;
        while (!(parent_.at(root) == root)) root = parent_.at(root);
        // path compression
        Key walk = k;
        while (!(parent_.at(walk) == root)) {
            Key next = parent_.at(walk);
            parent_[walk] = root;
            walk = next;
        }
        return root;
    }
    void unite(const Key& a, const Key& b) {
        Key ra = find(a), rb = find(b);
        if (ra == rb) return;
        // deterministic representative: the smaller key wins
        if (rb < ra) std::swap(ra, rb);
        parent_[rb] = ra;
    }

private:
    std::map<Key, Key> parent_;
};

/// Deterministic id for a pullback pair node; guards against the unlikely
/// collision of two distinct pairs rendering to the same string.
inline NodeId pair_id(const NodeId& a, const NodeId& b, std::set<NodeId>& taken) {
    NodeId base = "(" + a + "," + b + ")";
    NodeId id = base;
    int k = 2;
    while (!taken.insert(id).second) id = base + "#" + std::to_string(k++);
    return id;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Pullback
// ---------------------------------------------------------------------------

struct PullbackResult {
    GraphPtr apex;       // P
    Homomorphism to_a;   // P -> A
    Homomorphism to_b;   // P -> B
};

/// Pullback of f : A -> C and g : B -> C. Nodes are the pairs agreeing in C,
/// edges exist componentwise and values intersect.
inline PullbackResult pullback(const Homomorphism& f, const Homomorphism& g) {
    if (!same_graph(f.cod, g.cod))
        throw std::invalid_argument("pullback: maps do not share a codomain");
    const StructuredGraph& a = *f.dom;
    const StructuredGraph& b = *g.dom;

    StructuredGraph apex;
    std::map<std::pair<NodeId, NodeId>, NodeId> pair_node;
    std::set<NodeId> taken;
    for (const auto& na : a.nodes())
        for (const auto& nb : b.nodes()) {
            if (!(f(na) == g(nb))) continue;
            NodeId id = detail::pair_id(na, nb, taken);
            pair_node[{na, nb}] = id;
            apex.add_node(id, value_intersection(a.values_of(na), b.values_of(nb)));
        }
    for (const auto& [pa, ida] : pair_node)
        for (const auto& [pb, idb] : pair_node) {
            if (a.has_s_edge(pa.first, pb.first) && b.has_s_edge(pa.second, pb.second))
                apex.add_s_edge(ida, idb);
            if (a.has_e_edge(pa.first, pb.first) && b.has_e_edge(pa.second, pb.second))
                apex.add_e_edge(ida, idb);
        }

    PullbackResult out;
    out.apex = make_graph(std::move(apex));
    out.to_a.dom = out.apex;
    out.to_a.cod = f.dom;
    out.to_b.dom = out.apex;
    out.to_b.cod = g.dom;
    for (const auto& [pr, id] : pair_node) {
        out.to_a.node_map[id] = pr.first;
        out.to_b.node_map[id] = pr.second;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pushout
// ---------------------------------------------------------------------------

struct PushoutResult {
    GraphPtr apex;         // S
    Homomorphism from_a;   // A -> S
    Homomorphism from_b;   // B -> S
};

/// Pushout of f : K -> A and g : K -> B: the quotient of A + B identifying
/// f(k) with g(k). Class names keep A-side ids stable: a class containing
/// A nodes is named after its smallest A id, otherwise after its smallest
/// B id, with deterministic "_2" suffixing on collisions.
inline PushoutResult pushout(const Homomorphism& f, const Homomorphism& g) {
    if (!same_graph(f.dom, g.dom))
        throw std::invalid_argument("pushout: maps do not share a domain");
    const StructuredGraph& a = *f.cod;
    const StructuredGraph& b = *g.cod;

    using Tag = std::pair<int, NodeId>; // 0 = A side, 1 = B side
    detail::UnionFind<Tag> uf;
    for (const auto& n : a.nodes()) uf.ensure({0, n});
    for (const auto& n : b.nodes()) uf.ensure({1, n});
    for (const auto& k : f.dom->nodes()) uf.unite({0, f(k)}, {1, g(k)});

    std::map<Tag, std::vector<Tag>> classes;
    for (const auto& n : a.nodes()) classes[uf.find({0, n})].push_back({0, n});
    for (const auto& n : b.nodes()) classes[uf.find({1, n})].push_back({1, n});

    // name assignment: A-bearing classes first so pre-existing ids never shift
    struct ClassInfo {
        Tag root;
        NodeId preferred;
        bool has_a;
    };
    std::vector<ClassInfo> infos;
    for (const auto& [root, members] : classes) {
        NodeId best_a, best_b;
        bool has_a = false, has_b = false;
        for (const auto& [side, id] : members) {
            if (side == 0 && (!has_a || id < best_a)) { best_a = id; has_a = true; }
            if (side == 1 && (!has_b || id < best_b)) { best_b = id; has_b = true; }
        }
        infos.push_back({root, has_a ? best_a : best_b, has_a});
    }
    std::sort(infos.begin(), infos.end(), [](const ClassInfo& x, const ClassInfo& y) {
        if (x.has_a != y.has_a) return x.has_a;
        return x.preferred < y.preferred;
    });
    std::set<NodeId> taken;
    std::map<Tag, NodeId> class_name;
    for (const auto& info : infos) {
        NodeId id = info.preferred;
        int k = 2;
        while (!taken.insert(id).second) id = info.preferred + "_" + std::to_string(k++);
        class_name[info.root] = id;
    }

    StructuredGraph apex;
    std::map<Tag, ValueSet> class_values;
    std::map<Tag, std::string> class_label;
    auto absorb = [&](int side, const StructuredGraph& gr) {
        for (const auto& n : gr.nodes()) {
            Tag root = uf.find({side, n});
            ValueSet& vs = class_values[root];
            for (const auto& v : gr.values_of(n)) vs.insert(v);
            auto l = gr.label_of(n);
            if (l && !class_label.count(root)) class_label[root] = *l;
        }
    };
    absorb(0, a);
    absorb(1, b);
    for (const auto& [root, name] : class_name) {
        auto it = class_values.find(root);
        apex.add_node(name, it == class_values.end() ? ValueSet{} : it->second);
        auto lt = class_label.find(root);
        if (lt != class_label.end()) apex.set_label(name, lt->second);
    }
    auto add_edges = [&](int side, const StructuredGraph& gr) {
        for (const auto& [x, y] : gr.s_edges())
            apex.add_s_edge(class_name.at(uf.find({side, x})), class_name.at(uf.find({side, y})));
        for (const auto& [x, y] : gr.e_edges())
            apex.add_e_edge(class_name.at(uf.find({side, x})), class_name.at(uf.find({side, y})));
    };
    add_edges(0, a);
    add_edges(1, b);

    PushoutResult out;
    out.apex = make_graph(std::move(apex));
    out.from_a.dom = f.cod;
    out.from_a.cod = out.apex;
    out.from_b.dom = g.cod;
    out.from_b.cod = out.apex;
    for (const auto& n : a.nodes()) out.from_a.node_map[n] = class_name.at(uf.find({0, n}));
    for (const auto& n : b.nodes()) out.from_b.node_map[n] = class_name.at(uf.find({1, n}));
    return out;
}

// ---------------------------------------------------------------------------
// Final pullback complement
// ---------------------------------------------------------------------------

struct PullbackComplementResult {
    GraphPtr complement;        // the rewritten graph
    Homomorphism from_preserved; // preserved part -> complement
    Homomorphism to_refined;     // complement -> refined graph (inclusion)
};

/// Final pullback complement of monos preserved : K -> N and refine : N -> P.
/// Deletes the images of dropped nodes (with incident edges, the sesqui-pushout
/// side effect), deletes images of deprecated edges, and trims exactly the
/// deprecated values, keeping everything P adds.
inline PullbackComplementResult pullback_complement(const Homomorphism& preserved,
                                                    const Homomorphism& refine) {
    if (!same_graph(preserved.cod, refine.dom))
        throw std::invalid_argument("pullback_complement: maps do not compose");
    if (!is_mono(preserved)) throw std::invalid_argument("pullback_complement: preserved map is not a mono");
    if (!is_mono(refine)) throw std::invalid_argument("pullback_complement: refinement is not a mono");

    const StructuredGraph& kept = *preserved.dom;  // K
    const StructuredGraph& mid = *preserved.cod;   // N
    const StructuredGraph& big = *refine.cod;      // P

    std::map<NodeId, NodeId> mid_to_kept; // inverse of preserved on its image
    for (const auto& [k, n] : preserved.node_map) mid_to_kept[n] = k;

    std::set<NodeId> deleted_in_big;
    for (const auto& n : mid.nodes())
        if (!mid_to_kept.count(n)) deleted_in_big.insert(refine(n));

    StructuredGraph result;
    for (const auto& p : big.nodes()) {
        if (deleted_in_big.count(p)) continue;
        result.add_node(p, big.values_of(p));
        auto l = big.label_of(p);
        if (l) result.set_label(p, *l);
    }
    // value trimming on the preserved image
    for (const auto& [k, n] : preserved.node_map) {
        const NodeId& p = refine(n);
        ValueSet deprecated = value_difference(mid.values_of(n), kept.values_of(k));
        if (!deprecated.empty())
            result.set_values(p, value_difference(big.values_of(p), deprecated));
    }
    // edges: keep refined edges among survivors, minus images of deprecated
    // mid-level edges
    auto deprecated_edges = [&](const EdgeSet& mid_edges, const EdgeSet& kept_edges) {
        EdgeSet out;
        for (const auto& [x, y] : mid_edges) {
            auto ix = mid_to_kept.find(x);
            auto iy = mid_to_kept.find(y);
            if (ix == mid_to_kept.end() || iy == mid_to_kept.end()) continue;
            if (!kept_edges.count({ix->second, iy->second})) out.insert({refine(x), refine(y)});
        }
        return out;
    };
    EdgeSet dep_s = deprecated_edges(mid.s_edges(), kept.s_edges());
    EdgeSet dep_e = deprecated_edges(mid.e_edges(), kept.e_edges());
    for (const auto& [x, y] : big.s_edges())
        if (result.has_node(x) && result.has_node(y) && !dep_s.count({x, y})) result.add_s_edge(x, y);
    for (const auto& [x, y] : big.e_edges())
        if (result.has_node(x) && result.has_node(y) && !dep_e.count({x, y})) result.add_e_edge(x, y);

    PullbackComplementResult out;
    out.complement = make_graph(std::move(result));
    out.from_preserved.dom = preserved.dom;
    out.from_preserved.cod = out.complement;
    for (const auto& [k, n] : preserved.node_map) out.from_preserved.node_map[k] = refine(n);
    out.to_refined.dom = out.complement;
    out.to_refined.cod = refine.cod;
    for (const auto& p : out.complement->nodes()) out.to_refined.node_map[p] = p;
    return out;
}

// ---------------------------------------------------------------------------
// Rewriting
// ---------------------------------------------------------------------------

/// One aggregation step: a preserved mono into the current graph plus a
/// glueing cospan onto the refined graph.
struct RewriteSpec {
    Homomorphism preserved;  // K -> N, what survives of N
    Cospan glueing;          // N -> P <- N', the refinement
};

struct RewriteTrace {
    std::vector<NodeId> added_nodes;     // ids in the result
    EdgeSet added_s_edges;
    EdgeSet added_e_edges;
    std::vector<NodeId> deleted_nodes;   // ids in the original graph
    EdgeSet deleted_s_edges;
    EdgeSet deleted_e_edges;
    std::map<NodeId, ValueSet> removed_values; // original node -> values dropped
    Homomorphism preserved_to_result;    // K -> result
    Homomorphism result_to_refined;      // result -> P (inclusion)
};

struct RewriteResult {
    GraphPtr result;
    RewriteTrace trace;
};

inline RewriteResult apply_rewrite(const RewriteSpec& spec) {
    auto pbc = pullback_complement(spec.preserved, spec.glueing.left);
    const StructuredGraph& original = *spec.preserved.cod;  // N
    const StructuredGraph& refined = *spec.glueing.left.cod; // P
    const StructuredGraph& result = *pbc.complement;

    RewriteTrace trace;
    trace.preserved_to_result = pbc.from_preserved;
    trace.result_to_refined = pbc.to_refined;

    std::set<NodeId> original_image;
    for (const auto& n : original.nodes()) original_image.insert(spec.glueing.left(n));
    for (const auto& p : refined.nodes())
        if (!original_image.count(p) && result.has_node(p)) trace.added_nodes.push_back(p);

    EdgeSet original_s_image, original_e_image;
    for (const auto& [x, y] : original.s_edges())
        original_s_image.insert({spec.glueing.left(x), spec.glueing.left(y)});
    for (const auto& [x, y] : original.e_edges())
        original_e_image.insert({spec.glueing.left(x), spec.glueing.left(y)});
    for (const auto& e : result.s_edges())
        if (!original_s_image.count(e)) trace.added_s_edges.insert(e);
    for (const auto& e : result.e_edges())
        if (!original_e_image.count(e)) trace.added_e_edges.insert(e);

    std::map<NodeId, NodeId> to_kept;
    for (const auto& [k, n] : spec.preserved.node_map) to_kept[n] = k;
    for (const auto& n : original.nodes())
        if (!to_kept.count(n)) trace.deleted_nodes.push_back(n);
    for (const auto& [x, y] : original.s_edges()) {
        auto ix = to_kept.find(x);
        auto iy = to_kept.find(y);
        if (ix == to_kept.end() || iy == to_kept.end() ||
            !spec.preserved.dom->has_s_edge(ix->second, iy->second))
            trace.deleted_s_edges.insert({x, y});
    }
    for (const auto& [x, y] : original.e_edges()) {
        auto ix = to_kept.find(x);
        auto iy = to_kept.find(y);
        if (ix == to_kept.end() || iy == to_kept.end() ||
            !spec.preserved.dom->has_e_edge(ix->second, iy->second))
            trace.deleted_e_edges.insert({x, y});
    }
    for (const auto& [k, n] : spec.preserved.node_map) {
        ValueSet dropped = value_difference(original.values_of(n), spec.preserved.dom->values_of(k));
        if (!dropped.empty()) trace.removed_values[n] = dropped;
    }

    return {pbc.complement, std::move(trace)};
}

// ---------------------------------------------------------------------------
// Overlaps (multi-sum members) and factorization
// ---------------------------------------------------------------------------

struct Overlap {
    GraphPtr overlap;                    // O
    Homomorphism to_a, to_b;             // monos O -> A, O -> B
    GraphPtr glued;                      // pushout of the span
    Homomorphism from_a, from_b;         // A -> glued, B -> glued
    std::map<NodeId, NodeId> matching;   // A node -> B node
};

/// Builds the closed overlap induced by a partial injective matching: edges
/// common to both sides, values intersected. The result is exactly the
/// pullback of its own glued cospan.
inline Overlap overlap_from_matching(const GraphPtr& a, const GraphPtr& b,
                                     const std::map<NodeId, NodeId>& matching) {
    StructuredGraph o;
    std::set<NodeId> taken;
    std::map<NodeId, NodeId> id_of_a; // a node -> overlap node
    for (const auto& [na, nb] : matching) {
        NodeId id = detail::pair_id(na, nb, taken);
        id_of_a[na] = id;
        o.add_node(id, value_intersection(a->values_of(na), b->values_of(nb)));
    }
    for (const auto& [xa, xid] : id_of_a)
        for (const auto& [ya, yid] : id_of_a) {
            if (a->has_s_edge(xa, ya) && b->has_s_edge(matching.at(xa), matching.at(ya)))
                o.add_s_edge(xid, yid);
            if (a->has_e_edge(xa, ya) && b->has_e_edge(matching.at(xa), matching.at(ya)))
                o.add_e_edge(xid, yid);
        }

    Overlap out;
    out.matching = matching;
    out.overlap = make_graph(std::move(o));
    out.to_a.dom = out.overlap;
    out.to_a.cod = a;
    out.to_b.dom = out.overlap;
    out.to_b.cod = b;
    for (const auto& [na, id] : id_of_a) {
        out.to_a.node_map[id] = na;
        out.to_b.node_map[id] = matching.at(na);
    }
    auto po = pushout(out.to_a, out.to_b);
    out.glued = po.apex;
    out.from_a = po.from_a;
    out.from_b = po.from_b;
    return out;
}

/// Enumerates all overlaps of two graphs typed over a common base: one per
/// type-compatible partial injective node matching (equivalently, one per
/// isomorphism class of closed mono spans). Every mono cospan out of a and b
/// over the base factors through exactly one of the returned glued cospans.
/// Worst case exponential; inputs here are desk-scale.
template <typename Kind>
inline std::vector<Overlap> enumerate_overlaps(const GraphPtr& a, const GraphPtr& b,
                                               const std::map<NodeId, Kind>& type_of_a,
                                               const std::map<NodeId, Kind>& type_of_b) {
    std::vector<NodeId> a_nodes(a->nodes().begin(), a->nodes().end());
    std::vector<Overlap> out;
    std::map<NodeId, NodeId> matching;
    std::set<NodeId> used_b;

    auto recurse = [&](auto&& self, std::size_t i) -> void {
        if (i == a_nodes.size()) {
            out.push_back(overlap_from_matching(a, b, matching));
            return;
        }
        const NodeId& na = a_nodes[i];
        self(self, i + 1); // leave na unmatched
        auto ka = type_of_a.find(na);
        for (const auto& nb : b->nodes()) {
            if (used_b.count(nb)) continue;
            auto kb = type_of_b.find(nb);
            bool compatible = (ka == type_of_a.end()) == (kb == type_of_b.end()) &&
                              (ka == type_of_a.end() || ka->second == kb->second);
            if (!compatible) continue;
            matching[na] = nb;
            used_b.insert(nb);
            self(self, i + 1);
            matching.erase(na);
            used_b.erase(nb);
        }
    };
    recurse(recurse, 0);
    return out;
}

/// All homomorphisms h : N -> M commuting with the typings into a shared base
/// (kind equality), found by backtracking with value-inclusion and edge
/// pruning. An empty result means the typing does not factor.
template <typename Kind>
inline std::vector<std::map<NodeId, NodeId>> factorize(const GraphPtr& n, const GraphPtr& m,
                                                       const std::map<NodeId, Kind>& type_of_n,
                                                       const std::map<NodeId, Kind>& type_of_m) {
    std::vector<NodeId> order(n->nodes().begin(), n->nodes().end());
    std::vector<std::map<NodeId, NodeId>> out;
    std::map<NodeId, NodeId> partial;

    auto consistent = [&](const NodeId& x, const NodeId& img) {
        for (const auto& [y, yi] : partial) {
            if (n->has_s_edge(x, y) && !m->has_s_edge(img, yi)) return false;
            if (n->has_s_edge(y, x) && !m->has_s_edge(yi, img)) return false;
            if (n->has_e_edge(x, y) && !m->has_e_edge(img, yi)) return false;
            if (n->has_e_edge(y, x) && !m->has_e_edge(yi, img)) return false;
        }
        if (n->has_s_edge(x, x) && !m->has_s_edge(img, img)) return false;
        if (n->has_e_edge(x, x) && !m->has_e_edge(img, img)) return false;
        return true;
    };

    auto recurse = [&](auto&& self, std::size_t i) -> void {
        if (i == order.size()) {
            out.push_back(partial);
            return;
        }
        const NodeId& x = order[i];
        auto kx = type_of_n.find(x);
        for (const auto& c : m->nodes()) {
            auto kc = type_of_m.find(c);
            bool kind_ok = (kx == type_of_n.end()) == (kc == type_of_m.end()) &&
                           (kx == type_of_n.end() || kx->second == kc->second);
            if (!kind_ok) continue;
            if (!value_subset(n->values_of(x), m->values_of(c))) continue;
            if (!consistent(x, c)) continue;
            partial[x] = c;
            self(self, i + 1);
            partial.erase(x);
        }
    };
    recurse(recurse, 0);
    return out;
}

} // namespace nf
