#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "nf/category.hpp"
#include "nf/graph.hpp"
#include "nf/metamodel.hpp"

namespace nf {

using NuggetId = int;

/// One stored nugget: its graph plus the typing into the pre-model. The MM
/// typing is always the composite through the pre-model typing, so the
/// factorization invariant holds by construction and is re-validated on load.
struct NuggetEntry {
    GraphPtr graph;
    std::map<NodeId, NodeId> to_premodel;
};

struct Model {
    TypedGraph premodel;
    std::map<NuggetId, NuggetEntry> nuggets;

    NuggetId next_id() const { return nuggets.empty() ? 1 : nuggets.rbegin()->first + 1; }

    const NuggetEntry& nugget(NuggetId id) const {
        auto it = nuggets.find(id);
        if (it == nuggets.end()) throw std::out_of_range("model: no nugget with id " + std::to_string(id));
        return it->second;
    }

    Homomorphism nugget_typing_hom(NuggetId id) const {
        const NuggetEntry& e = nugget(id);
        Homomorphism h;
        h.dom = e.graph;
        h.cod = premodel.graph;
        h.node_map = e.to_premodel;
        return h;
    }

    /// The composite typing into MM.
    Typing nugget_mm_typing(NuggetId id) const {
        const NuggetEntry& e = nugget(id);
        Typing t;
        for (const auto& [x, m] : e.to_premodel) t[x] = premodel.kind_of(m);
        return t;
    }

    TypedGraph nugget_typed(NuggetId id) const { return {nugget(id).graph, nugget_mm_typing(id)}; }
};

inline Model empty_model() {
    Model m;
    m.premodel.graph = make_graph(StructuredGraph{});
    return m;
}

/// Full structural validation: pre-model well-formed, every nugget well-formed,
/// every typing a valid homomorphism whose composite through the pre-model
/// typing is a valid MM typing.
inline Report check_model(const Model& model) {
    Report report = check_premodel(model.premodel);
    for (const auto& [id, entry] : model.nuggets) {
        std::string tag = "nugget " + std::to_string(id);
        Homomorphism h = model.nugget_typing_hom(id);
        Report hom_report = check_homomorphism(h);
        if (!hom_report.ok()) {
            for (auto& i : hom_report.issues) i.message = tag + ": " + i.message;
            report.merge(hom_report);
            report.add("factorization", tag + ": typing into the pre-model is not a homomorphism");
            continue;
        }
        Typing derived;
        bool typing_total = true;
        for (const auto& [x, m] : entry.to_premodel) {
            auto it = model.premodel.typing.find(m);
            if (it == model.premodel.typing.end()) {
                typing_total = false;
                break;
            }
            derived[x] = it->second;
        }
        if (!typing_total) {
            report.add("factorization", tag + ": typing does not factor through the pre-model");
            continue;
        }
        NuggetReport nr = check_nugget({entry.graph, derived});
        if (!nr.ok()) {
            for (auto& i : nr.report.issues) i.message = tag + ": " + i.message;
            report.merge(nr.report);
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Canonical unification
// ---------------------------------------------------------------------------

/// Seed identifications for a glueing: pairs of (incoming-graph node,
/// existing-graph node). The engine never identifies nodes on its own; it only
/// extends seeds by type-forced closure.
struct GlueingChoice {
    std::vector<std::pair<NodeId, NodeId>> seeds;
};

class AmbiguousUnificationError : public std::runtime_error {
public:
    AmbiguousUnificationError(std::string what, std::vector<std::map<NodeId, NodeId>> cands)
        : std::runtime_error(std::move(what)), candidates(std::move(cands)) {}
    std::vector<std::map<NodeId, NodeId>> candidates; // incoming node -> existing node
};

struct UnificationResult {
    std::map<NodeId, NodeId> matching; // incoming node -> existing node
    Overlap overlap;                   // span/cospan with A = existing, B = incoming
    Typing glued_typing;
};

namespace detail {

struct UnifyState {
    std::map<NodeId, NodeId> fwd;             // incoming -> existing
    std::map<NodeId, NodeId> rev;             // existing -> incoming
    std::deque<std::pair<NodeId, NodeId>> queue;
    std::set<std::pair<NodeId, NodeId>> processed;

    bool propose(const NodeId& in, const NodeId& ex) {
        auto fit = fwd.find(in);
        if (fit != fwd.end()) return fit->second == ex;
        auto rit = rev.find(ex);
        if (rit != rev.end()) return false;
        fwd[in] = ex;
        rev[ex] = in;
        queue.push_back({in, ex});
        return true;
    }
};

inline std::vector<NodeId> direct_kind_children(const TypedGraph& tg, const NodeId& parent,
                                                MetaKind kind) {
    std::vector<NodeId> out;
    for (const auto& [c, p] : tg.graph->s_edges())
        if (p == parent && tg.is_kind(c, kind) && s_edge_is_direct(*tg.graph, c, parent))
            out.push_back(c);
    return out;
}

/// All maximal injective pairings between two node lists, in deterministic
/// order. min(|xs|,|ys|) pairs each.
inline std::vector<std::vector<std::pair<NodeId, NodeId>>> maximal_pairings(
    std::vector<NodeId> xs, std::vector<NodeId> ys) {
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    std::vector<std::vector<std::pair<NodeId, NodeId>>> out;
    if (xs.empty() || ys.empty()) {
        out.push_back({});
        return out;
    }
    bool xs_small = xs.size() <= ys.size();
    const auto& small = xs_small ? xs : ys;
    const auto& large = xs_small ? ys : xs;
    std::vector<bool> used(large.size(), false);
    std::vector<std::pair<NodeId, NodeId>> current;
    auto recurse = [&](auto&& self, std::size_t i) -> void {
        if (i == small.size()) {
            out.push_back(current);
            return;
        }
        for (std::size_t j = 0; j < large.size(); ++j) {
            if (used[j]) continue;
            used[j] = true;
            current.push_back(xs_small ? std::make_pair(small[i], large[j])
                                       : std::make_pair(large[j], small[i]));
            self(self, i + 1);
            current.pop_back();
            used[j] = false;
        }
    };
    recurse(recurse, 0);
    return out;
}

class Unifier {
public:
    Unifier(const TypedGraph& incoming, const TypedGraph& existing)
        : in_(incoming), ex_(existing) {}

    /// Explores all closure branches; returns every distinct maximal matching.
    std::vector<std::map<NodeId, NodeId>> run(const std::vector<std::pair<NodeId, NodeId>>& seeds) {
        UnifyState state;
        for (const auto& [in, ex] : seeds) {
            if (!in_.graph->has_node(in))
                throw std::invalid_argument("unification: unknown incoming node " + in);
            if (!ex_.graph->has_node(ex))
                throw std::invalid_argument("unification: unknown existing node " + ex);
            if (in_.kind_of(in) != ex_.kind_of(ex))
                throw std::invalid_argument("unification: seed pair (" + in + ", " + ex +
                                            ") is type-incompatible");
            if (!state.propose(in, ex))
                throw std::invalid_argument("unification: seed pairs conflict at " + in);
        }
        std::set<std::map<NodeId, NodeId>> results;
        explore(std::move(state), results);
        return {results.begin(), results.end()};
    }

private:
    void explore(UnifyState state, std::set<std::map<NodeId, NodeId>>& results) const {
        while (!state.queue.empty()) {
            auto pair = state.queue.front();
            state.queue.pop_front();
            if (!state.processed.insert(pair).second) continue;
            const auto& [in, ex] = pair;
            MetaKind k = in_.kind_of(in);

            if (is_participant_kind(k) || k == MetaKind::Residue) {
                // unique attribute children match; loc only on equal value
                for (MetaKind attr : {MetaKind::Aa, MetaKind::Loc, MetaKind::IntervalAttr,
                                      MetaKind::IsBnd, MetaKind::BndRate, MetaKind::BrkRate,
                                      MetaKind::ModRate}) {
                    auto cin = direct_kind_children(in_, in, attr);
                    auto cex = direct_kind_children(ex_, ex, attr);
                    if (cin.size() != 1 || cex.size() != 1) continue;
                    if (attr == MetaKind::Loc &&
                        !(in_.graph->values_of(cin[0]) == ex_.graph->values_of(cex[0])))
                        continue;
                    if (!state.propose(cin[0], cex[0])) return; // conflicting branch dies
                }
                // flags pair within equal value sets, regions and residues by
                // their distinguishers; several candidates branch
                std::vector<std::vector<std::vector<std::pair<NodeId, NodeId>>>> per_group;
                collect_groups(state, in, ex, MetaKind::Flag, per_group);
                if (k == MetaKind::Agent || k == MetaKind::Region) {
                    collect_groups(state, in, ex, MetaKind::Region, per_group);
                    collect_groups(state, in, ex, MetaKind::Residue, per_group);
                }
                if (!per_group.empty() && dispatch_groups(state, results, per_group)) return;
            } else if (k == MetaKind::Bnd) {
                for (MetaKind attr : {MetaKind::IsBnd, MetaKind::BndRate, MetaKind::BrkRate}) {
                    auto cin = direct_kind_children(in_, in, attr);
                    auto cex = direct_kind_children(ex_, ex, attr);
                    if (cin.size() == 1 && cex.size() == 1 && !state.propose(cin[0], cex[0])) return;
                }
                if (pair_sources(state, results, in, ex)) return;
            } else if (k == MetaKind::Mod) {
                for (MetaKind attr : {MetaKind::IsBnd, MetaKind::ModRate}) {
                    auto cin = direct_kind_children(in_, in, attr);
                    auto cex = direct_kind_children(ex_, ex, attr);
                    if (cin.size() == 1 && cex.size() == 1 && !state.propose(cin[0], cex[0])) return;
                }
                auto sin = direct_kind_children(in_, in, MetaKind::Src);
                auto sex = direct_kind_children(ex_, ex, MetaKind::Src);
                if (sin.size() == 1 && sex.size() == 1 && !state.propose(sin[0], sex[0])) return;
                auto tin = direct_kind_children(in_, in, MetaKind::Tgt);
                auto tex = direct_kind_children(ex_, ex, MetaKind::Tgt);
                if (tin.size() == 1 && tex.size() == 1 && !state.propose(tin[0], tex[0])) return;
            } else if (k == MetaKind::Tgt) {
                auto fin = in_.graph->e_successors(in);
                auto fex = ex_.graph->e_successors(ex);
                if (fin.size() == 1 && fex.size() == 1 && !state.propose(fin[0], fex[0])) return;
            }
            // src participants are never auto-identified: distinct participants
            // of one source are exactly the disjunction mechanism
        }
        results.insert(state.fwd);
    }

    /// Gathers pairing options for children of one kind between two matched
    /// parents, grouped by the compatibility key (value set for flags, the
    /// loc value for residues, nothing for regions).
    void collect_groups(const UnifyState& state, const NodeId& in, const NodeId& ex, MetaKind kind,
                        std::vector<std::vector<std::vector<std::pair<NodeId, NodeId>>>>& per_group) const {
        auto cin = direct_kind_children(in_, in, kind);
        auto cex = direct_kind_children(ex_, ex, kind);
        auto unmatched = [](std::vector<NodeId> nodes, const std::map<NodeId, NodeId>& seen) {
            std::vector<NodeId> out;
            for (auto& n : nodes)
                if (!seen.count(n)) out.push_back(n);
            return out;
        };
        cin = unmatched(cin, state.fwd);
        cex = unmatched(cex, state.rev);
        if (cin.empty() || cex.empty()) return;

        auto key_of = [&](const TypedGraph& tg, const NodeId& n) -> std::string {
            if (kind == MetaKind::Flag) return detail::value_set_key(tg.graph->values_of(n));
            if (kind == MetaKind::Residue) {
                auto loc = direct_kind_children(tg, n, MetaKind::Loc);
                return loc.size() == 1 ? detail::value_set_key(tg.graph->values_of(loc[0])) : "~";
            }
            return "";
        };
        std::map<std::string, std::pair<std::vector<NodeId>, std::vector<NodeId>>> groups;
        for (const auto& n : cin) groups[key_of(in_, n)].first.push_back(n);
        for (const auto& n : cex) groups[key_of(ex_, n)].second.push_back(n);
        for (const auto& [key, g] : groups) {
            if (g.first.empty() || g.second.empty()) continue;
            per_group.push_back(maximal_pairings(g.first, g.second));
        }
    }

    /// Applies the collected pairings: direct when unambiguous, otherwise one
    /// exploration branch per combination. Returns true when the caller must
    /// stop (branched or conflicted).
    bool dispatch_groups(UnifyState& state, std::set<std::map<NodeId, NodeId>>& results,
                         const std::vector<std::vector<std::vector<std::pair<NodeId, NodeId>>>>& per_group) const {
        bool single = true;
        for (const auto& options : per_group) single = single && options.size() == 1;
        if (single) {
            for (const auto& options : per_group)
                for (const auto& [a, b] : options.front())
                    if (!state.propose(a, b)) return true; // conflict: branch dies
            return false;
        }
        std::vector<std::size_t> pick(per_group.size(), 0);
        auto spawn = [&](auto&& self, std::size_t gi) -> void {
            if (gi == per_group.size()) {
                UnifyState branch = state;
                for (std::size_t i = 0; i < per_group.size(); ++i)
                    for (const auto& [a, b] : per_group[i][pick[i]])
                        if (!branch.propose(a, b)) return;
                explore(std::move(branch), results);
                return;
            }
            for (pick[gi] = 0; pick[gi] < per_group[gi].size(); ++pick[gi]) self(self, gi + 1);
        };
        spawn(spawn, 0);
        return true;
    }

    /// Pairs the two sources of matched BND actions, preferring pairings whose
    /// sources share an already-matched participant; ties branch.
    bool pair_sources(UnifyState& state, std::set<std::map<NodeId, NodeId>>& results,
                      const NodeId& in, const NodeId& ex) const {
        auto sin = direct_kind_children(in_, in, MetaKind::Src);
        auto sex = direct_kind_children(ex_, ex, MetaKind::Src);
        std::sort(sin.begin(), sin.end());
        std::sort(sex.begin(), sex.end());
        auto pairings = maximal_pairings(sin, sex);
        // keep only pairings consistent with existing matches
        std::vector<std::vector<std::pair<NodeId, NodeId>>> viable;
        for (const auto& p : pairings) {
            bool ok = true;
            for (const auto& [a, b] : p) {
                auto fit = state.fwd.find(a);
                if (fit != state.fwd.end() && !(fit->second == b)) ok = false;
                auto rit = state.rev.find(b);
                if (rit != state.rev.end() && !(rit->second == a)) ok = false;
            }
            if (ok) viable.push_back(p);
        }
        if (viable.empty()) return false;
        auto alignment = [&](const std::vector<std::pair<NodeId, NodeId>>& p) {
            int n = 0;
            for (const auto& [a, b] : p) {
                auto preds_b = ex_.graph->e_predecessors(b);
                for (const auto& pa : in_.graph->e_predecessors(a)) {
                    auto fit = state.fwd.find(pa);
                    if (fit != state.fwd.end() &&
                        std::find(preds_b.begin(), preds_b.end(), fit->second) != preds_b.end())
                        ++n;
                }
            }
            return n;
        };
        int best = -1;
        for (const auto& p : viable) best = std::max(best, alignment(p));
        std::vector<std::vector<std::pair<NodeId, NodeId>>> chosen;
        for (const auto& p : viable)
            if (alignment(p) == best) chosen.push_back(p);
        if (chosen.size() == 1) {
            for (const auto& [a, b] : chosen.front())
                if (!state.propose(a, b)) return true;
            return false;
        }
        for (const auto& p : chosen) {
            UnifyState branch = state;
            bool ok = true;
            for (const auto& [a, b] : p)
                if (!branch.propose(a, b)) ok = false;
            if (ok) explore(std::move(branch), results);
        }
        return true;
    }

    const TypedGraph& in_;
    const TypedGraph& ex_;
};

} // namespace detail

/// Extends seed identifications to the canonical glueing of `incoming` onto
/// `existing`: unique attribute children of matched nodes are identified
/// (loc only on equal value), flags pair within equal values, matched actions
/// pair their scaffolding using matched participants to align sources.
/// Throws AmbiguousUnificationError when more than one maximal extension
/// exists; the curator must then seed the choice.
inline UnificationResult canonical_unification(const TypedGraph& incoming, const TypedGraph& existing,
                                               const std::vector<std::pair<NodeId, NodeId>>& seeds) {
    detail::Unifier unifier(incoming, existing);
    auto matchings = unifier.run(seeds);
    if (matchings.empty())
        throw std::invalid_argument("unification: seeds admit no consistent extension");
    if (matchings.size() > 1) {
        std::string what = "unification is ambiguous: " + std::to_string(matchings.size()) +
                           " maximal extensions";
        throw AmbiguousUnificationError(what, std::move(matchings));
    }

    UnificationResult out;
    out.matching = matchings.front();
    std::map<NodeId, NodeId> existing_to_incoming;
    for (const auto& [in, ex] : out.matching) existing_to_incoming[ex] = in;
    out.overlap = overlap_from_matching(existing.graph, incoming.graph, existing_to_incoming);
    for (const auto& n : existing.graph->nodes())
        out.glued_typing[out.overlap.from_a(n)] = existing.kind_of(n);
    for (const auto& n : incoming.graph->nodes())
        out.glued_typing[out.overlap.from_b(n)] = incoming.kind_of(n);
    return out;
}

// ---------------------------------------------------------------------------
// Aggregation operations
// ---------------------------------------------------------------------------

struct AddResult {
    Model model;
    NuggetId id;
    std::size_t premodel_nodes_added = 0;
};

/// Adds a nugget. The glueing seeds say which incoming nodes already exist in
/// the pre-model; the canonical unification extends them, the pre-model grows
/// by pushout (value sets of identified nodes are unioned) and every existing
/// typing is re-targeted. Never deletes pre-model content.
inline AddResult add_nugget(const Model& model, const TypedGraph& incoming, const GlueingChoice& glue) {
    NuggetReport nr = check_nugget(incoming);
    if (!nr.ok())
        throw std::invalid_argument("add_nugget: nugget is not well-formed\n" + nr.report.to_string());

    UnificationResult uni = canonical_unification(incoming, model.premodel, glue.seeds);

    Model next;
    next.premodel.graph = uni.overlap.glued;
    next.premodel.typing = uni.glued_typing;
    Report pr = check_premodel(next.premodel);
    if (!pr.ok())
        throw std::invalid_argument("add_nugget: resulting pre-model is not well-formed\n" + pr.to_string());

    for (const auto& [id, entry] : model.nuggets) {
        NuggetEntry moved;
        moved.graph = entry.graph;
        for (const auto& [x, m] : entry.to_premodel) moved.to_premodel[x] = uni.overlap.from_a(m);
        next.nuggets[id] = std::move(moved);
    }
    NuggetEntry fresh;
    fresh.graph = incoming.graph;
    fresh.to_premodel = uni.overlap.from_b.node_map;
    NuggetId id = model.next_id();
    next.nuggets[id] = std::move(fresh);

    AddResult out;
    out.id = id;
    out.premodel_nodes_added =
        next.premodel.graph->nodes().size() - model.premodel.graph->nodes().size();
    out.model = std::move(next);
    return out;
}

/// Items to deprecate from a nugget during an update; the complement defines
/// the preserved mono.
struct DeprecationSpec {
    std::vector<NodeId> nodes;
    EdgeSet s_edges;
    EdgeSet e_edges;
    std::map<NodeId, ValueSet> values;

    bool empty() const { return nodes.empty() && s_edges.empty() && e_edges.empty() && values.empty(); }
};

/// Builds the preserved-part mono for a deprecation. Every listed item must
/// exist in the target graph.
inline Homomorphism make_deprecation(const GraphPtr& target, const DeprecationSpec& spec) {
    StructuredGraph kept = *target;
    for (const auto& n : spec.nodes) {
        if (!kept.has_node(n)) throw std::invalid_argument("deprecation: unknown node " + n);
        kept.remove_node(n);
    }
    for (const auto& [a, b] : spec.s_edges) {
        if (!target->has_s_edge(a, b))
            throw std::invalid_argument("deprecation: unknown S edge (" + a + "," + b + ")");
        kept.remove_s_edge(a, b);
    }
    for (const auto& [a, b] : spec.e_edges) {
        if (!target->has_e_edge(a, b))
            throw std::invalid_argument("deprecation: unknown E edge (" + a + "," + b + ")");
        kept.remove_e_edge(a, b);
    }
    for (const auto& [n, vs] : spec.values) {
        if (!target->has_node(n)) throw std::invalid_argument("deprecation: unknown node " + n);
        for (const auto& v : vs)
            if (!target->values_of(n).count(v))
                throw std::invalid_argument("deprecation: node " + n + " does not carry value " +
                                            v.to_string());
        if (kept.has_node(n)) kept.set_values(n, value_difference(kept.values_of(n), vs));
    }
    Homomorphism h;
    h.dom = make_graph(std::move(kept));
    h.cod = target;
    for (const auto& n : h.dom->nodes()) h.node_map[n] = n;
    return h;
}

struct UpdateResult {
    Model model;
    RewriteTrace trace;
    std::vector<NodeId> premodel_nodes_removed;
};

/// Updates nugget `id` with the information of `incoming`: glueing per seeds,
/// deprecation per the preserved mono, rewrite by final pullback complement.
/// The step is propagated to the pre-model; pre-model nodes lose their place
/// only when no remaining nugget maps onto them.
inline UpdateResult update_nugget(const Model& model, NuggetId id, const TypedGraph& incoming,
                                  const GlueingChoice& glue, const DeprecationSpec& deprecate) {
    NuggetReport nr = check_nugget(incoming);
    if (!nr.ok())
        throw std::invalid_argument("update_nugget: nugget is not well-formed\n" + nr.report.to_string());
    TypedGraph target = model.nugget_typed(id);

    UnificationResult uni = canonical_unification(incoming, target, glue.seeds);

    // close the glued graph so nuggets stay transitively closed
    GraphPtr glued = make_graph(normalize_s(*uni.overlap.glued));
    Typing glued_typing = uni.glued_typing;
    Homomorphism to_glued_from_target = uni.overlap.from_a;
    to_glued_from_target.cod = glued;
    Homomorphism to_glued_from_incoming = uni.overlap.from_b;
    to_glued_from_incoming.cod = glued;

    RewriteSpec rw;
    rw.preserved = make_deprecation(target.graph, deprecate);
    rw.glueing = Cospan{to_glued_from_target, to_glued_from_incoming};
    RewriteResult rewritten = apply_rewrite(rw);

    GraphPtr revised = make_graph(normalize_s(*rewritten.result));
    Typing revised_typing;
    for (const auto& n : revised->nodes()) revised_typing[n] = glued_typing.at(n);
    NuggetReport revised_report = check_nugget({revised, revised_typing});
    if (!revised_report.ok())
        throw std::invalid_argument("update_nugget: revised nugget is not well-formed\n" +
                                    revised_report.report.to_string());

    // glue the new information onto the pre-model along the preserved interface
    Homomorphism j1 = rewritten.trace.preserved_to_result;
    j1.cod = revised;
    Homomorphism interface_to_premodel;
    interface_to_premodel.dom = rw.preserved.dom;
    interface_to_premodel.cod = model.premodel.graph;
    const auto& old_typing = model.nugget(id).to_premodel;
    for (const auto& [k, n] : rw.preserved.node_map)
        interface_to_premodel.node_map[k] = old_typing.at(n);
    PushoutResult grown = pushout(interface_to_premodel, j1);

    Typing grown_typing;
    for (const auto& n : model.premodel.graph->nodes())
        grown_typing[grown.from_a(n)] = model.premodel.kind_of(n);
    for (const auto& n : revised->nodes()) grown_typing[grown.from_b(n)] = revised_typing.at(n);

    // rebuild the nugget map over the grown pre-model
    Model next;
    for (const auto& [nid, entry] : model.nuggets) {
        if (nid == id) continue;
        NuggetEntry moved;
        moved.graph = entry.graph;
        for (const auto& [x, m] : entry.to_premodel) moved.to_premodel[x] = grown.from_a(m);
        next.nuggets[nid] = std::move(moved);
    }
    NuggetEntry updated;
    updated.graph = revised;
    updated.to_premodel = grown.from_b.node_map;
    next.nuggets[id] = std::move(updated);

    // garbage-collect pre-model nodes and edges the rewrite dropped, keeping
    // anything still referenced by a nugget typing
    std::set<NodeId> referenced_nodes;
    EdgeSet referenced_s, referenced_e;
    for (const auto& [nid, entry] : next.nuggets) {
        for (const auto& [x, m] : entry.to_premodel) referenced_nodes.insert(m);
        for (const auto& [x, y] : entry.graph->s_edges())
            referenced_s.insert({entry.to_premodel.at(x), entry.to_premodel.at(y)});
        for (const auto& [x, y] : entry.graph->e_edges())
            referenced_e.insert({entry.to_premodel.at(x), entry.to_premodel.at(y)});
    }

    StructuredGraph pruned = *grown.apex;
    UpdateResult out;
    for (const auto& dropped : rewritten.trace.deleted_nodes) {
        NodeId m = grown.from_a(old_typing.at(dropped));
        if (!referenced_nodes.count(m) && pruned.has_node(m)) {
            pruned.remove_node(m);
            out.premodel_nodes_removed.push_back(m);
        }
    }
    auto prune_edges = [&](const EdgeSet& dropped_edges, bool s_rel) {
        for (const auto& [x, y] : dropped_edges) {
            NodeId mx = grown.from_a(old_typing.at(x));
            NodeId my = grown.from_a(old_typing.at(y));
            if (s_rel && !referenced_s.count({mx, my})) pruned.remove_s_edge(mx, my);
            if (!s_rel && !referenced_e.count({mx, my})) pruned.remove_e_edge(mx, my);
        }
    };
    prune_edges(rewritten.trace.deleted_s_edges, true);
    prune_edges(rewritten.trace.deleted_e_edges, false);

    Typing pruned_typing;
    for (const auto& n : pruned.nodes()) pruned_typing[n] = grown_typing.at(n);
    next.premodel.graph = make_graph(std::move(pruned));
    next.premodel.typing = std::move(pruned_typing);

    Report pr = check_premodel(next.premodel);
    if (!pr.ok())
        throw std::invalid_argument("update_nugget: resulting pre-model is not well-formed\n" +
                                    pr.to_string());

    out.model = std::move(next);
    out.trace = std::move(rewritten.trace);
    return out;
}

} // namespace nf
