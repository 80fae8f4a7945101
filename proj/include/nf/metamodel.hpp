#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nf/category.hpp"
#include "nf/graph.hpp"

namespace nf {

/// The fifteen node kinds of the meta-model.
enum class MetaKind {
    Agent,
    Region,
    Residue,
    Flag,
    Aa,
    Loc,
    IntervalAttr,
    IsBnd,
    BndRate,
    BrkRate,
    ModRate,
    Bnd,
    Mod,
    Src,
    Tgt,
};

inline const std::vector<std::pair<MetaKind, std::string>>& meta_kind_table() {
    static const std::vector<std::pair<MetaKind, std::string>> table = {
        {MetaKind::Agent, "agent"},     {MetaKind::Region, "region"},
        {MetaKind::Residue, "residue"}, {MetaKind::Flag, "flag"},
        {MetaKind::Aa, "aa"},           {MetaKind::Loc, "loc"},
        {MetaKind::IntervalAttr, "int"}, {MetaKind::IsBnd, "is_bnd"},
        {MetaKind::BndRate, "bnd_rc"},  {MetaKind::BrkRate, "brk_rc"},
        {MetaKind::ModRate, "mod_rc"},  {MetaKind::Bnd, "BND"},
        {MetaKind::Mod, "MOD"},         {MetaKind::Src, "src"},
        {MetaKind::Tgt, "tgt"},
    };
    return table;
}

inline std::string kind_name(MetaKind k) {
    for (const auto& [kind, name] : meta_kind_table())
        if (kind == k) return name;
    return "?";
}

inline std::optional<MetaKind> kind_from_name(const std::string& name) {
    for (const auto& [kind, n] : meta_kind_table())
        if (n == name) return kind;
    return std::nullopt;
}

inline bool is_attribute_kind(MetaKind k) {
    switch (k) {
        case MetaKind::Aa:
        case MetaKind::Loc:
        case MetaKind::IntervalAttr:
        case MetaKind::IsBnd:
        case MetaKind::BndRate:
        case MetaKind::BrkRate:
        case MetaKind::ModRate:
            return true;
        default:
            return false;
    }
}

inline bool is_action_kind(MetaKind k) { return k == MetaKind::Bnd || k == MetaKind::Mod; }
inline bool is_scaffold_kind(MetaKind k) { return k == MetaKind::Src || k == MetaKind::Tgt; }
inline bool is_participant_kind(MetaKind k) { return k == MetaKind::Agent || k == MetaKind::Region; }

/// Intensional value universes. The infinite ones (loc, int, rates) are never
/// materialized; membership is decided per value.
inline bool universe_contains(MetaKind k, const Value& v) {
    switch (k) {
        case MetaKind::Flag:
        case MetaKind::IsBnd:
            return v.is_boolean();
        case MetaKind::Loc:
            return v.is_positive_int();
        case MetaKind::Aa:
            return v.is_amino_acid();
        case MetaKind::IntervalAttr:
            return v.is_interval();
        case MetaKind::BndRate:
        case MetaKind::BrkRate:
        case MetaKind::ModRate:
            return v.is_rate();
        default:
            return false; // the structural kinds carry no values
    }
}

/// The meta-model MM as a structured graph. The figure in the source text is
/// reconstructed from prose: regions and residues belong to agents (residues
/// optionally to regions), flags may sit on agents, regions or residues,
/// attributes sit on their carriers, scaffolding belongs to its action.
/// residue->region, flag->{agent,region,residue} and int->agent are the
/// reconstruction latitude; the S relation is transitively closed.
inline GraphPtr metamodel() {
    static GraphPtr mm = [] {
        StructuredGraph g;
        for (const auto& [kind, name] : meta_kind_table()) g.add_node(name);
        auto s = [&](const char* child, const char* parent) { g.add_s_edge(child, parent); };
        s("region", "agent");
        s("residue", "agent");
        s("residue", "region");
        s("flag", "agent");
        s("flag", "region");
        s("flag", "residue");
        s("aa", "residue");
        s("loc", "residue");
        s("int", "region");
        s("int", "agent");
        s("is_bnd", "BND");
        s("is_bnd", "MOD");
        s("bnd_rc", "BND");
        s("brk_rc", "BND");
        s("mod_rc", "MOD");
        s("src", "BND");
        s("src", "MOD");
        s("tgt", "MOD");
        g.add_e_edge("agent", "src");
        g.add_e_edge("region", "src");
        g.add_e_edge("tgt", "flag");
        return make_graph(normalize_s(g));
    }();
    return mm;
}

inline bool mm_allows_s_edge(MetaKind child, MetaKind parent) {
    return metamodel()->has_s_edge(kind_name(child), kind_name(parent));
}

inline bool mm_allows_e_edge(MetaKind from, MetaKind to) {
    return metamodel()->has_e_edge(kind_name(from), kind_name(to));
}

using Typing = std::map<NodeId, MetaKind>;

/// A structured graph together with its typing into MM.
struct TypedGraph {
    GraphPtr graph;
    Typing typing;

    MetaKind kind_of(const NodeId& n) const {
        auto it = typing.find(n);
        if (it == typing.end()) throw std::out_of_range("typed graph: node " + n + " has no kind");
        return it->second;
    }
    bool is_kind(const NodeId& n, MetaKind k) const {
        auto it = typing.find(n);
        return it != typing.end() && it->second == k;
    }
};

/// Validates a typing map against MM: totality, edge restrictions, value
/// universes. MM value universes are checked intensionally.
inline Report check_typing(const StructuredGraph& g, const Typing& typing) {
    Report report;
    for (const auto& n : g.nodes())
        if (!typing.count(n)) report.add("typing-missing", "node " + n + " has no kind", {n});
    for (const auto& [n, k] : typing)
        if (!g.has_node(n)) report.add("typing-extra", "typing names unknown node " + n, {n});
    auto kind_at = [&](const NodeId& n) -> std::optional<MetaKind> {
        auto it = typing.find(n);
        if (it == typing.end()) return std::nullopt;
        return it->second;
    };
    for (const auto& [a, b] : g.s_edges()) {
        auto ka = kind_at(a), kb = kind_at(b);
        if (ka && kb && !mm_allows_s_edge(*ka, *kb))
            report.add("typing-s-edge",
                       "S edge " + a + " -> " + b + " (" + kind_name(*ka) + " -> " + kind_name(*kb) +
                           ") is not permitted by the meta-model",
                       {a, b});
    }
    for (const auto& [a, b] : g.e_edges()) {
        auto ka = kind_at(a), kb = kind_at(b);
        if (ka && kb && !mm_allows_e_edge(*ka, *kb))
            report.add("typing-e-edge",
                       "E edge " + a + " -> " + b + " (" + kind_name(*ka) + " -> " + kind_name(*kb) +
                           ") is not permitted by the meta-model",
                       {a, b});
    }
    for (const auto& n : g.nodes()) {
        auto k = kind_at(n);
        if (!k) continue;
        for (const auto& v : g.values_of(n))
            if (!universe_contains(*k, v))
                report.add("typing-value",
                           "value " + v.to_string() + " on node " + n + " is outside the " +
                               kind_name(*k) + " universe",
                           {n});
    }
    return report;
}

/// TypedGraph representation invariants: well-formed graph, valid typing,
/// acyclic S, and at most one direct attribute child of each kind per node.
inline Report check_typed_graph(const TypedGraph& tg) {
    Report report = validate_graph(*tg.graph);
    report.merge(check_typing(*tg.graph, tg.typing));
    if (!report.ok()) return report;
    const StructuredGraph& g = *tg.graph;
    if (!s_edges_acyclic(g)) {
        report.add("s-cycle", "the S relation has a cycle");
        return report;
    }
    for (const auto& n : g.nodes()) {
        std::map<MetaKind, std::vector<NodeId>> direct_attrs;
        for (const auto& [c, p] : g.s_edges()) {
            if (!(p == n)) continue;
            MetaKind kc = tg.kind_of(c);
            if (!is_attribute_kind(kc)) continue;
            if (!s_edge_is_direct(g, c, n)) continue;
            direct_attrs[kc].push_back(c);
        }
        for (const auto& [k, attrs] : direct_attrs)
            if (attrs.size() > 1)
                report.add("attr-duplicated",
                           "node " + n + " carries " + std::to_string(attrs.size()) + " " +
                               kind_name(k) + " attributes",
                           attrs);
    }
    return report;
}

struct NuggetReport {
    Report report;
    std::optional<NodeId> principal_action;

    bool ok() const { return report.ok(); }
};

namespace detail {

inline std::vector<NodeId> kind_children(const TypedGraph& tg, const NodeId& parent, MetaKind k) {
    std::vector<NodeId> out;
    for (const auto& [c, p] : tg.graph->s_edges())
        if (p == parent && tg.is_kind(c, k)) out.push_back(c);
    return out;
}

/// The unique attribute child of the given kind, when present.
inline std::optional<NodeId> attribute_child(const TypedGraph& tg, const NodeId& parent, MetaKind k) {
    auto cs = kind_children(tg, parent, k);
    if (cs.empty()) return std::nullopt;
    return cs.front();
}

} // namespace detail

/// Nugget well-formedness. A nugget is a connected, transitively closed
/// MM-typed graph in which attributes and flags carry exactly one value and
/// exactly one action — the principal one — lacks an is_bnd attribute.
inline NuggetReport check_nugget(const TypedGraph& tg) {
    NuggetReport out;
    out.report = check_typed_graph(tg);
    if (!out.report.ok()) return out;
    const StructuredGraph& g = *tg.graph;
    Report& report = out.report;

    if (!connected_under_s_and_e(g)) report.add("not-connected", "nugget graph is not connected");

    for (const auto& n : g.nodes()) {
        MetaKind k = tg.kind_of(n);
        if ((is_attribute_kind(k) || k == MetaKind::Flag) && g.values_of(n).size() != 1)
            report.add("attr-value-not-singleton",
                       "node " + n + " (" + kind_name(k) + ") must carry exactly one value", {n});
    }

    if (!s_transitively_closed(g)) report.add("s-not-closed", "the S relation is not transitively closed");

    std::vector<NodeId> principals;
    std::vector<NodeId> actions;
    for (const auto& n : g.nodes()) {
        if (!is_action_kind(tg.kind_of(n))) continue;
        actions.push_back(n);
        if (!detail::attribute_child(tg, n, MetaKind::IsBnd)) principals.push_back(n);
    }
    if (principals.size() != 1)
        report.add("principal-count",
                   "expected exactly one action without an is_bnd attribute, found " +
                       std::to_string(principals.size()),
                   principals);
    for (const auto& a : actions) {
        bool principal = std::find(principals.begin(), principals.end(), a) != principals.end();
        if (!principal && tg.kind_of(a) == MetaKind::Mod)
            report.add("contextual-action-invalid", "contextual actions must be BND, " + a + " is a MOD",
                       {a});
    }

    for (const auto& a : actions) {
        auto srcs = detail::kind_children(tg, a, MetaKind::Src);
        auto tgts = detail::kind_children(tg, a, MetaKind::Tgt);
        if (tg.kind_of(a) == MetaKind::Bnd) {
            if (srcs.size() != 2)
                report.add("bnd-sources",
                           "BND " + a + " must have exactly two sources, found " +
                               std::to_string(srcs.size()),
                           {a});
            for (const auto& s : srcs)
                if (g.e_predecessors(s).empty())
                    report.add("bnd-sources", "source " + s + " of BND " + a + " has no participant",
                               {a, s});
        } else {
            if (srcs.size() > 1 || tgts.size() > 1 || srcs.size() + tgts.size() == 0)
                report.add("mod-shape",
                           "MOD " + a + " must have at most one source, at most one target and at least one of the two",
                           {a});
            for (const auto& s : srcs)
                if (g.e_predecessors(s).empty())
                    report.add("src-participants", "source " + s + " of MOD " + a + " has no participant",
                               {a, s});
        }
    }

    for (const auto& n : g.nodes()) {
        MetaKind k = tg.kind_of(n);
        if (k == MetaKind::Tgt && g.e_successors(n).size() != 1)
            report.add("tgt-target", "target " + n + " must point at exactly one flag", {n});
        if (is_scaffold_kind(k)) {
            std::vector<NodeId> owners;
            for (const auto& [c, p] : g.s_edges())
                if (c == n && is_action_kind(tg.kind_of(p))) owners.push_back(p);
            if (owners.size() != 1)
                report.add("scaffold-shared", "scaffold node " + n + " must belong to exactly one action",
                           owners);
        }
    }

    if (report.ok()) out.principal_action = principals.front();
    return out;
}

/// Pre-model well-formedness: TypedGraph invariants plus non-empty value sets
/// on attributes and flags. Value sets may hold several values; a pre-model
/// summarizes variants.
inline Report check_premodel(const TypedGraph& tg) {
    Report report = check_typed_graph(tg);
    if (!report.ok()) return report;
    for (const auto& n : tg.graph->nodes()) {
        MetaKind k = tg.kind_of(n);
        if ((is_attribute_kind(k) || k == MetaKind::Flag) && tg.graph->values_of(n).empty())
            report.add("attr-value-empty",
                       "node " + n + " (" + kind_name(k) + ") must carry at least one value", {n});
    }
    return report;
}

/// Typing map rendered in the interchange format.
inline std::map<NodeId, std::string> typing_names(const Typing& typing) {
    std::map<NodeId, std::string> out;
    for (const auto& [n, k] : typing) out[n] = kind_name(k);
    return out;
}

} // namespace nf
