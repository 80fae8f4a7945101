#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "nf/model.hpp"

namespace nf {

inline const char* kGeneratorVersion = "0.1.0";

/// Which proteins a generated model represents, plus the default (wild-type)
/// amino acid per tested residue.
struct ProteinSelection {
    std::set<NodeId> agents;                              // pre-model agent node ids
    std::map<std::pair<NodeId, NodeId>, char> wildtype;   // (agent, residue) -> code
};

enum class SiteOrigin { Binding, Residue, Flag };

struct Site {
    std::string name;
    SiteOrigin origin = SiteOrigin::Binding;
    std::vector<std::string> states;  // default state first, rest sorted
    std::string default_state;        // empty for binding sites
    NodeId agent;                     // owning pre-model agent
    NodeId anchor;                    // action (binding) / residue / flag node
};

struct SiteMap {
    std::vector<Site> sites;
    std::map<NodeId, std::vector<std::size_t>> per_agent;          // canonical order per agent
    std::map<std::pair<NodeId, NodeId>, std::size_t> binding_site;  // (action, participant)
    std::map<NodeId, std::size_t> residue_site;                     // pre-model residue
    std::map<NodeId, std::size_t> flag_site;                        // pre-model flag

    const Site& at(std::size_t i) const { return sites.at(i); }
    std::size_t position(const NodeId& agent, std::size_t site) const {
        const auto& order = per_agent.at(agent);
        for (std::size_t i = 0; i < order.size(); ++i)
            if (order[i] == site) return i;
        throw std::out_of_range("site map: site not listed for agent " + agent);
    }
};

struct IntrinsicConflict {
    NodeId action;
    NodeId source;
    std::vector<NodeId> participants;  // pre-model nodes competing on this source
};

struct ConflictRelation {
    std::vector<IntrinsicConflict> intrinsic;
    std::set<std::pair<std::size_t, std::size_t>> extrinsic;  // site index pairs, i < j
};

/// One site mention inside a rule pattern: optional state tests and bond ids
/// on each side; bond -1 means the site is free on that side.
struct SiteMention {
    std::size_t site = 0;
    std::optional<std::string> lhs_state;
    std::optional<std::string> rhs_state;
    int lhs_bond = -1;
    int rhs_bond = -1;
};

struct AgentInstance {
    NodeId agent;  // pre-model agent node
    std::vector<SiteMention> mentions;
};

struct ConcreteRule {
    std::vector<AgentInstance> agents;
    std::optional<Rational> rate;
};

struct PreRuleDisjunct {
    NuggetId witness = 0;
    std::vector<NodeId> participants;  // pre-model participant nodes
    ConcreteRule rule;
    std::optional<ConcreteRule> unbind;
};

/// A pre-rule: one pre-model action with its disjunctive interpretations.
struct PreRule {
    NodeId action;
    bool is_bind = true;
    std::vector<NuggetId> witnesses;
    std::vector<PreRuleDisjunct> disjuncts;
};

struct KappaModel {
    std::vector<std::string> signatures;
    std::vector<std::string> rules;
    std::string text;
};

struct InstantiationOptions {
    bool merge_cliques = false;
};

// ---------------------------------------------------------------------------
// Applicability and shared scope
// ---------------------------------------------------------------------------

/// Nuggets all of whose agents are selected.
inline std::set<NuggetId> applicable_nuggets(const Model& model, const ProteinSelection& sel) {
    for (const auto& a : sel.agents) {
        if (!model.premodel.graph->has_node(a) || !model.premodel.is_kind(a, MetaKind::Agent))
            throw std::invalid_argument("selection: unknown agent id " + a);
    }
    std::set<NuggetId> out;
    for (const auto& [id, entry] : model.nuggets) {
        Typing mm = model.nugget_mm_typing(id);
        bool ok = true;
        for (const auto& [x, k] : mm)
            if (k == MetaKind::Agent && !sel.agents.count(entry.to_premodel.at(x))) ok = false;
        if (ok) out.insert(id);
    }
    return out;
}

namespace detail {

/// The owning agent of a pre-model node: itself for agents, otherwise the
/// first agent S-parent.
inline NodeId owner_agent(const TypedGraph& tg, const NodeId& n) {
    if (tg.is_kind(n, MetaKind::Agent)) return n;
    for (const auto& [c, p] : tg.graph->s_edges())
        if (c == n && tg.is_kind(p, MetaKind::Agent)) return p;
    throw std::invalid_argument("instantiate: node " + n + " has no owning agent");
}

/// The principal action of a stored nugget (unique action without is_bnd).
inline NodeId principal_action(const TypedGraph& tg) {
    for (const auto& n : tg.graph->nodes()) {
        if (!is_action_kind(tg.kind_of(n))) continue;
        if (!attribute_child(tg, n, MetaKind::IsBnd)) return n;
    }
    throw std::logic_error("nugget has no principal action");
}

/// Everything the applicable nuggets say about pre-model actions.
struct Scope {
    std::map<NuggetId, TypedGraph> typed;                       // applicable nuggets
    std::set<NodeId> relevant_actions;                          // pre-model action nodes
    std::map<NodeId, std::vector<NuggetId>> principal_witnesses;
    std::map<NodeId, std::set<NodeId>> sources;                 // action -> pre-model srcs
    std::map<std::pair<NodeId, NodeId>, std::set<NodeId>> participants;  // (action, src)
};

inline Scope build_scope(const Model& model, const std::set<NuggetId>& nuggets) {
    Scope scope;
    for (NuggetId id : nuggets) {
        TypedGraph tg = model.nugget_typed(id);
        const auto& to_m = model.nugget(id).to_premodel;
        NodeId principal = principal_action(tg);
        for (const auto& a : tg.graph->nodes()) {
            if (!is_action_kind(tg.kind_of(a))) continue;
            NodeId action = to_m.at(a);
            scope.relevant_actions.insert(action);
            if (a == principal) scope.principal_witnesses[action].push_back(id);
            for (const auto& sc : kind_children(tg, a, MetaKind::Src)) {
                NodeId source = to_m.at(sc);
                scope.sources[action].insert(source);
                for (const auto& p : tg.graph->e_predecessors(sc))
                    scope.participants[{action, source}].insert(to_m.at(p));
            }
        }
        scope.typed.emplace(id, std::move(tg));
    }
    for (auto& [action, ws] : scope.principal_witnesses) std::sort(ws.begin(), ws.end());
    return scope;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Site reification
// ---------------------------------------------------------------------------

/// Turns binding participations, tested residues and referenced flags of the
/// selected agents into formal sites. Naming: regions "rg<label>", direct
/// participations "b<partner>" (or "b_a<action>" when the partner side is not
/// a single agent), residues "rs<loc>", flags "<label>" prefixed by their
/// carrier. Collisions get deterministic "_2" suffixes.
inline SiteMap reify_sites(const Model& model, const std::set<NuggetId>& nuggets,
                           const ProteinSelection& sel) {
    const TypedGraph& pm = model.premodel;
    detail::Scope scope = detail::build_scope(model, nuggets);
    SiteMap out;

    auto loc_string = [&](const NodeId& residue) -> std::string {
        auto loc = detail::attribute_child(pm, residue, MetaKind::Loc);
        if (!loc || pm.graph->values_of(*loc).empty()) return residue;
        return pm.graph->values_of(*loc).begin()->to_string();
    };

    for (const auto& agent : sel.agents) {
        struct Pending {
            Site site;
            std::tuple<int, std::string, std::string, std::string> order_key;
            std::optional<std::pair<NodeId, NodeId>> binding_key;
            std::optional<NodeId> residue_key;
            std::optional<NodeId> flag_key;
        };
        std::vector<Pending> pending;

        // binding participations
        for (const auto& action : scope.relevant_actions) {
            if (!pm.is_kind(action, MetaKind::Bnd)) continue;
            std::vector<NodeId> sources(scope.sources[action].begin(), scope.sources[action].end());
            for (const auto& source : sources) {
                for (const auto& p : scope.participants[{action, source}]) {
                    if (detail::owner_agent(pm, p) != agent) continue;
                    Pending item;
                    item.binding_key = {{action, p}};
                    Site& site = item.site;
                    site.origin = SiteOrigin::Binding;
                    site.agent = agent;
                    site.anchor = action;
                    if (pm.is_kind(p, MetaKind::Region)) {
                        site.name = "rg" + pm.graph->display(p);
                    } else {
                        std::set<NodeId> partner_agents;
                        for (const auto& other : sources) {
                            if (other == source) continue;
                            for (const auto& q : scope.participants[{action, other}])
                                partner_agents.insert(detail::owner_agent(pm, q));
                        }
                        site.name = partner_agents.size() == 1
                                        ? "b" + pm.graph->display(*partner_agents.begin())
                                        : "b_a" + action;
                    }
                    item.order_key = {0, action, source, p};
                    pending.push_back(std::move(item));
                }
            }
        }

        // tested residues
        for (const auto& r : pm.graph->nodes()) {
            if (!pm.is_kind(r, MetaKind::Residue) || detail::owner_agent(pm, r) != agent) continue;
            bool tested = false;
            for (const auto& [id, tg] : scope.typed) {
                const auto& to_m = model.nugget(id).to_premodel;
                for (const auto& x : tg.graph->nodes())
                    if (tg.is_kind(x, MetaKind::Residue) && to_m.at(x) == r &&
                        detail::attribute_child(tg, x, MetaKind::Aa))
                        tested = true;
            }
            if (!tested) continue;
            auto aa = detail::attribute_child(pm, r, MetaKind::Aa);
            if (!aa) continue;
            Pending item;
            item.residue_key = r;
            Site& site = item.site;
            site.origin = SiteOrigin::Residue;
            site.agent = agent;
            site.anchor = r;
            site.name = "rs" + loc_string(r);
            std::vector<std::string> alphabet;
            for (const auto& v : pm.graph->values_of(*aa)) alphabet.push_back(v.to_string());
            std::sort(alphabet.begin(), alphabet.end());
            auto wt = sel.wildtype.find({agent, r});
            std::string def = wt != sel.wildtype.end() ? std::string(1, wt->second) : alphabet.front();
            if (std::find(alphabet.begin(), alphabet.end(), def) == alphabet.end())
                throw std::invalid_argument("selection: wild type " + def + " for residue " + r +
                                            " is outside its value set");
            site.default_state = def;
            site.states.push_back(def);
            for (const auto& s : alphabet)
                if (s != def) site.states.push_back(s);
            item.order_key = {1, site.name, r, ""};
            pending.push_back(std::move(item));
        }

        // referenced flags
        for (const auto& f : pm.graph->nodes()) {
            if (!pm.is_kind(f, MetaKind::Flag) || detail::owner_agent(pm, f) != agent) continue;
            bool referenced = false;
            for (const auto& [id, tg] : scope.typed) {
                const auto& to_m = model.nugget(id).to_premodel;
                for (const auto& x : tg.graph->nodes())
                    if (tg.is_kind(x, MetaKind::Flag) && to_m.at(x) == f) referenced = true;
            }
            if (!referenced) continue;
            // most specific carrier decides the prefix
            std::optional<NodeId> residue, region;
            for (const auto& [c, p] : pm.graph->s_edges()) {
                if (c != f || !s_edge_is_direct(*pm.graph, c, p)) continue;
                if (pm.is_kind(p, MetaKind::Residue) && (!residue || p < *residue)) residue = p;
                if (pm.is_kind(p, MetaKind::Region) && (!region || p < *region)) region = p;
            }
            Pending item;
            item.flag_key = f;
            Site& site = item.site;
            site.origin = SiteOrigin::Flag;
            site.agent = agent;
            site.anchor = f;
            if (residue)
                site.name = "rs" + loc_string(*residue) + "_" + pm.graph->display(f);
            else if (region)
                site.name = "rg" + pm.graph->display(*region) + "_" + pm.graph->display(f);
            else
                site.name = pm.graph->display(f);
            site.default_state = "0";
            site.states = {"0", "1"};
            item.order_key = {2, residue ? *residue : (region ? *region : agent), f, ""};
            pending.push_back(std::move(item));
        }

        std::sort(pending.begin(), pending.end(),
                  [](const Pending& a, const Pending& b) { return a.order_key < b.order_key; });
        std::set<std::string> names;
        for (auto& item : pending) {
            std::string base = item.site.name;
            int k = 2;
            while (!names.insert(item.site.name).second) item.site.name = base + "_" + std::to_string(k++);
            std::size_t index = out.sites.size();
            out.sites.push_back(item.site);
            out.per_agent[agent].push_back(index);
            if (item.binding_key) out.binding_site[*item.binding_key] = index;
            if (item.residue_key) out.residue_site[*item.residue_key] = index;
            if (item.flag_key) out.flag_site[*item.flag_key] = index;
        }
        out.per_agent[agent];  // agents with no sites still get a signature
    }
    return out;
}

// ---------------------------------------------------------------------------
// Conflict analysis
// ---------------------------------------------------------------------------

/// Intrinsic conflicts: several participants competing on one source of an
/// aggregated action. Extrinsic conflicts: two participations on one agent
/// whose sequence footprints (int attributes) are both specified and overlap.
inline ConflictRelation conflict_analysis(const Model& model, const std::set<NuggetId>& nuggets,
                                          const SiteMap& sites) {
    const TypedGraph& pm = model.premodel;
    detail::Scope scope = detail::build_scope(model, nuggets);
    ConflictRelation out;

    for (const auto& action : scope.relevant_actions) {
        if (!pm.is_kind(action, MetaKind::Bnd)) continue;
        for (const auto& source : scope.sources[action]) {
            const auto& ps = scope.participants[{action, source}];
            if (ps.size() >= 2)
                out.intrinsic.push_back({action, source, {ps.begin(), ps.end()}});
        }
    }

    // footprints: per (action, participant), the interval values contributed
    // by witnesses (for direct agent participations) or carried by the region
    auto footprint = [&](const NodeId& action, const NodeId& p) {
        std::set<Value> intervals;
        if (pm.is_kind(p, MetaKind::Region)) {
            auto iv = detail::attribute_child(pm, p, MetaKind::IntervalAttr);
            if (iv)
                for (const auto& v : pm.graph->values_of(*iv)) intervals.insert(v);
            return intervals;
        }
        for (const auto& [id, tg] : scope.typed) {
            const auto& to_m = model.nugget(id).to_premodel;
            for (const auto& a : tg.graph->nodes()) {
                if (!is_action_kind(tg.kind_of(a)) || to_m.at(a) != action) continue;
                for (const auto& sc : detail::kind_children(tg, a, MetaKind::Src))
                    for (const auto& px : tg.graph->e_predecessors(sc)) {
                        if (to_m.at(px) != p) continue;
                        auto iv = detail::attribute_child(tg, px, MetaKind::IntervalAttr);
                        if (iv)
                            for (const auto& v : tg.graph->values_of(*iv)) intervals.insert(v);
                    }
            }
        }
        return intervals;
    };

    std::vector<std::pair<std::pair<NodeId, NodeId>, std::size_t>> participations(
        sites.binding_site.begin(), sites.binding_site.end());
    for (std::size_t i = 0; i < participations.size(); ++i)
        for (std::size_t j = i + 1; j < participations.size(); ++j) {
            const auto& [key_i, site_i] = participations[i];
            const auto& [key_j, site_j] = participations[j];
            if (site_i == site_j) continue;
            if (sites.at(site_i).agent != sites.at(site_j).agent) continue;
            auto fp_i = footprint(key_i.first, key_i.second);
            auto fp_j = footprint(key_j.first, key_j.second);
            bool overlap = false;
            for (const auto& a : fp_i)
                for (const auto& b : fp_j)
                    if (a.as_interval().intersects(b.as_interval())) overlap = true;
            if (overlap)
                out.extrinsic.insert({std::min(site_i, site_j), std::max(site_i, site_j)});
        }
    return out;
}

/// Optional optimization: on each agent, a connected component of the
/// extrinsic conflict graph that is a clique collapses to one site (named
/// after its smallest member). Non-clique conflicts are untouched.
inline std::pair<SiteMap, ConflictRelation> merge_conflict_cliques(const SiteMap& sites,
                                                                   const ConflictRelation& conflicts) {
    SiteMap out = sites;
    ConflictRelation remaining = conflicts;

    std::map<std::size_t, std::set<std::size_t>> adjacency;
    for (const auto& [a, b] : conflicts.extrinsic) {
        adjacency[a].insert(b);
        adjacency[b].insert(a);
    }
    std::set<std::size_t> visited;
    std::map<std::size_t, std::size_t> redirect;
    for (const auto& [start, _] : adjacency) {
        if (visited.count(start)) continue;
        std::set<std::size_t> component;
        std::vector<std::size_t> stack{start};
        while (!stack.empty()) {
            std::size_t n = stack.back();
            stack.pop_back();
            if (!component.insert(n).second) continue;
            for (std::size_t m : adjacency[n])
                if (!component.count(m)) stack.push_back(m);
        }
        visited.insert(component.begin(), component.end());
        if (component.size() < 2) continue;
        bool clique = true;
        for (std::size_t a : component)
            for (std::size_t b : component)
                if (a < b && !conflicts.extrinsic.count({a, b})) clique = false;
        if (!clique) continue;
        std::size_t survivor = *component.begin();
        for (std::size_t s : component)
            if (out.at(s).name < out.at(survivor).name) survivor = s;
        for (std::size_t s : component) {
            if (s == survivor) continue;
            redirect[s] = survivor;
            for (std::size_t a : component)
                for (std::size_t b : component)
                    if (a < b) remaining.extrinsic.erase({a, b});
        }
    }
    if (redirect.empty()) return {out, remaining};

    for (auto& [key, idx] : out.binding_site) {
        auto it = redirect.find(idx);
        if (it != redirect.end()) idx = it->second;
    }
    for (auto& [agent, order] : out.per_agent) {
        std::vector<std::size_t> kept;
        for (std::size_t idx : order)
            if (!redirect.count(idx)) kept.push_back(idx);
        order = std::move(kept);
    }
    return {out, remaining};
}

// ---------------------------------------------------------------------------
// Pre-rules
// ---------------------------------------------------------------------------

namespace detail {

struct RuleBuilder {
    const SiteMap& sites;
    ConcreteRule rule;
    std::map<NodeId, std::vector<std::size_t>> instances_of;  // nugget agent node -> instances
    int next_bond = 0;

    explicit RuleBuilder(const SiteMap& site_map) : sites(site_map) {}

    std::size_t fresh_instance(const NodeId& premodel_agent, const NodeId& nugget_agent) {
        rule.agents.push_back({premodel_agent, {}});
        instances_of[nugget_agent].push_back(rule.agents.size() - 1);
        return rule.agents.size() - 1;
    }

    SiteMention& mention(std::size_t instance, std::size_t site) {
        auto& agent = rule.agents[instance];
        for (auto& m : agent.mentions)
            if (m.site == site) return m;
        agent.mentions.push_back({site, {}, {}, -1, -1});
        return agent.mentions.back();
    }

    void state_test(std::size_t instance, std::size_t site, const std::string& state) {
        SiteMention& m = mention(instance, site);
        m.lhs_state = state;
        m.rhs_state = state;
    }

    int bond(std::size_t inst_a, std::size_t site_a, std::size_t inst_b, std::size_t site_b,
             bool rhs_only) {
        int id = next_bond++;
        {
            SiteMention& m = mention(inst_a, site_a);
            if (!rhs_only) m.lhs_bond = id;
            m.rhs_bond = id;
        }
        {
            SiteMention& m = mention(inst_b, site_b);
            if (!rhs_only) m.lhs_bond = id;
            m.rhs_bond = id;
        }
        return id;
    }

    /// Canonical form: mentions in per-agent site order, bonds renumbered
    /// densely in order of appearance.
    ConcreteRule finish() {
        for (auto& agent : rule.agents)
            std::sort(agent.mentions.begin(), agent.mentions.end(),
                      [&](const SiteMention& a, const SiteMention& b) {
                          return sites.position(agent.agent, a.site) <
                                 sites.position(agent.agent, b.site);
                      });
        std::map<int, int> renumber;
        auto visit = [&](int bond) {
            if (bond >= 0 && !renumber.count(bond)) renumber[bond] = static_cast<int>(renumber.size());
        };
        for (const auto& agent : rule.agents)
            for (const auto& m : agent.mentions) visit(m.lhs_bond);
        for (const auto& agent : rule.agents)
            for (const auto& m : agent.mentions) visit(m.rhs_bond);
        for (auto& agent : rule.agents)
            for (auto& m : agent.mentions) {
                if (m.lhs_bond >= 0) m.lhs_bond = renumber.at(m.lhs_bond);
                if (m.rhs_bond >= 0) m.rhs_bond = renumber.at(m.rhs_bond);
            }
        return rule;
    }
};

inline std::optional<Rational> rate_of(const TypedGraph& tg, const NodeId& action, MetaKind kind) {
    auto child = attribute_child(tg, action, kind);
    if (!child) return std::nullopt;
    const auto& vs = tg.graph->values_of(*child);
    if (vs.size() != 1 || !vs.begin()->is_rate()) return std::nullopt;
    return vs.begin()->as_rate();
}

/// Per-witness context extraction shared by bind and mod rules.
struct WitnessContext {
    const Model& model;
    const TypedGraph& tg;          // the witness nugget
    const NodeId principal;
    std::set<NodeId> excluded_agents;  // nugget agent nodes left out of this disjunct

    bool included(const NodeId& nugget_node) const {
        NodeId owner = tg.is_kind(nugget_node, MetaKind::Agent)
                           ? nugget_node
                           : owner_agent_in(tg, nugget_node);
        return !excluded_agents.count(owner);
    }

    static NodeId owner_agent_in(const TypedGraph& tg, const NodeId& n) {
        for (const auto& [c, p] : tg.graph->s_edges())
            if (c == n && tg.is_kind(p, MetaKind::Agent)) return p;
        return n;
    }
};

inline void add_context(RuleBuilder& builder, WitnessContext& ctx, NuggetId witness,
                        const std::set<NodeId>& skip_flags) {
    const TypedGraph& tg = ctx.tg;
    const auto& to_m = ctx.model.nugget(witness).to_premodel;

    // ensure an instance exists for every included context agent
    std::vector<NodeId> agents;
    for (const auto& n : tg.graph->nodes())
        if (tg.is_kind(n, MetaKind::Agent) && ctx.included(n)) agents.push_back(n);
    std::sort(agents.begin(), agents.end(), [&](const NodeId& a, const NodeId& b) {
        return std::make_pair(to_m.at(a), a) < std::make_pair(to_m.at(b), b);
    });
    for (const auto& a : agents)
        if (!builder.instances_of.count(a)) builder.fresh_instance(to_m.at(a), a);

    // amino-acid tests
    for (const auto& r : tg.graph->nodes()) {
        if (!tg.is_kind(r, MetaKind::Residue) || !ctx.included(r)) continue;
        auto aa = attribute_child(tg, r, MetaKind::Aa);
        if (!aa) continue;
        auto site = builder.sites.residue_site.find(to_m.at(r));
        if (site == builder.sites.residue_site.end()) continue;
        const std::string state = tg.graph->values_of(*aa).begin()->to_string();
        for (std::size_t inst : builder.instances_of.at(ctx.owner_agent_in(tg, r)))
            builder.state_test(inst, site->second, state);
    }

    // flag tests
    for (const auto& f : tg.graph->nodes()) {
        if (!tg.is_kind(f, MetaKind::Flag) || !ctx.included(f) || skip_flags.count(f)) continue;
        auto site = builder.sites.flag_site.find(to_m.at(f));
        if (site == builder.sites.flag_site.end()) continue;
        const std::string state = tg.graph->values_of(f).begin()->as_boolean() ? "1" : "0";
        for (std::size_t inst : builder.instances_of.at(ctx.owner_agent_in(tg, f)))
            builder.state_test(inst, site->second, state);
    }

    // contextual bonds: is_bnd 1 tests a bond, is_bnd 0 tests both sites free
    for (const auto& c : tg.graph->nodes()) {
        if (!tg.is_kind(c, MetaKind::Bnd) || c == ctx.principal) continue;
        auto flag = attribute_child(tg, c, MetaKind::IsBnd);
        if (!flag) continue;
        bool bound = tg.graph->values_of(*flag).begin()->as_boolean();
        auto srcs = kind_children(tg, c, MetaKind::Src);
        std::sort(srcs.begin(), srcs.end());
        if (srcs.size() != 2) continue;
        auto preds_a = tg.graph->e_predecessors(srcs[0]);
        auto preds_b = tg.graph->e_predecessors(srcs[1]);
        std::sort(preds_a.begin(), preds_a.end());
        std::sort(preds_b.begin(), preds_b.end());
        NodeId action = to_m.at(c);
        for (const auto& u : preds_a)
            for (const auto& v : preds_b) {
                if (!ctx.included(u) || !ctx.included(v)) continue;
                auto site_u = builder.sites.binding_site.find({action, to_m.at(u)});
                auto site_v = builder.sites.binding_site.find({action, to_m.at(v)});
                if (site_u == builder.sites.binding_site.end() ||
                    site_v == builder.sites.binding_site.end())
                    continue;
                std::size_t inst_u = builder.instances_of.at(ctx.owner_agent_in(tg, u)).front();
                std::size_t inst_v = builder.instances_of.at(ctx.owner_agent_in(tg, v)).front();
                if (bound) {
                    builder.bond(inst_u, site_u->second, inst_v, site_v->second, false);
                } else {
                    builder.mention(inst_u, site_u->second);
                    builder.mention(inst_v, site_v->second);
                }
            }
    }
}

} // namespace detail

/// Builds the pre-rules of the instantiation: one per pre-model action with a
/// principal witness. Binding actions get one disjunct per participant pair
/// per witness (cartesian over the two sources), each carrying the witness
/// context, conflict-freeness tests and a context-less unbind counterpart.
/// Modifications flip their target flag from the complement state.
inline std::vector<PreRule> generate_prerules(const Model& model, const std::set<NuggetId>& nuggets,
                                              const SiteMap& sites, const ConflictRelation& conflicts) {
    const TypedGraph& pm = model.premodel;
    detail::Scope scope = detail::build_scope(model, nuggets);
    std::vector<PreRule> out;

    for (const auto& action : scope.relevant_actions) {
        auto ws = scope.principal_witnesses.find(action);
        if (ws == scope.principal_witnesses.end()) continue;
        PreRule pre;
        pre.action = action;
        pre.is_bind = pm.is_kind(action, MetaKind::Bnd);
        pre.witnesses = ws->second;

        for (NuggetId witness : pre.witnesses) {
            const TypedGraph& tg = scope.typed.at(witness);
            const auto& to_m = model.nugget(witness).to_premodel;
            NodeId principal = detail::principal_action(tg);

            if (pre.is_bind) {
                auto srcs = detail::kind_children(tg, principal, MetaKind::Src);
                if (srcs.size() != 2) continue;
                // order the nugget sources by their pre-model image for a
                // witness-independent left/right convention
                std::sort(srcs.begin(), srcs.end(), [&](const NodeId& a, const NodeId& b) {
                    return std::make_pair(to_m.at(a), a) < std::make_pair(to_m.at(b), b);
                });
                auto preds_left = tg.graph->e_predecessors(srcs[0]);
                auto preds_right = tg.graph->e_predecessors(srcs[1]);
                std::sort(preds_left.begin(), preds_left.end());
                std::sort(preds_right.begin(), preds_right.end());

                for (const auto& pn : preds_left)
                    for (const auto& qn : preds_right) {
                        detail::WitnessContext ctx{model, tg, principal, {}};
                        for (const auto& other : preds_left)
                            if (other != pn)
                                ctx.excluded_agents.insert(detail::WitnessContext::owner_agent_in(tg, other));
                        for (const auto& other : preds_right)
                            if (other != qn)
                                ctx.excluded_agents.insert(detail::WitnessContext::owner_agent_in(tg, other));
                        ctx.excluded_agents.erase(detail::WitnessContext::owner_agent_in(tg, pn));
                        ctx.excluded_agents.erase(detail::WitnessContext::owner_agent_in(tg, qn));

                        NodeId p = to_m.at(pn), q = to_m.at(qn);
                        auto site_p = sites.binding_site.find({action, p});
                        auto site_q = sites.binding_site.find({action, q});
                        if (site_p == sites.binding_site.end() || site_q == sites.binding_site.end())
                            throw std::logic_error("instantiate: participant without a reified site");

                        detail::RuleBuilder builder(sites);
                        NodeId pn_owner = detail::WitnessContext::owner_agent_in(tg, pn);
                        NodeId qn_owner = detail::WitnessContext::owner_agent_in(tg, qn);
                        std::size_t left = builder.fresh_instance(to_m.at(pn_owner), pn_owner);
                        // an intramolecular bond stays on one instance; a
                        // symmetric dimer needs two instances of the agent
                        std::size_t right = (pn_owner == qn_owner && pn != qn)
                                                ? left
                                                : builder.fresh_instance(to_m.at(qn_owner), qn_owner);
                        builder.bond(left, site_p->second, right, site_q->second, true);
                        // conflict-freeness: every extrinsically conflicting
                        // site of a participant site must be free
                        for (const auto& [a, b] : conflicts.extrinsic) {
                            for (std::size_t s : {site_p->second, site_q->second}) {
                                if (a != s && b != s) continue;
                                std::size_t other = a == s ? b : a;
                                std::size_t inst = s == site_p->second ? left : right;
                                if (sites.at(other).agent == builder.rule.agents[inst].agent)
                                    builder.mention(inst, other);
                            }
                        }
                        detail::add_context(builder, ctx, witness, {});
                        PreRuleDisjunct disjunct;
                        disjunct.witness = witness;
                        disjunct.participants = {p, q};
                        disjunct.rule = builder.finish();
                        disjunct.rule.rate = detail::rate_of(tg, principal, MetaKind::BndRate);

                        detail::RuleBuilder unbind(sites);
                        std::size_t ul = unbind.fresh_instance(to_m.at(pn_owner), pn_owner);
                        std::size_t ur = unbind.fresh_instance(to_m.at(qn_owner), qn_owner);
                        int bond_id = unbind.next_bond++;
                        unbind.mention(ul, site_p->second).lhs_bond = bond_id;
                        unbind.mention(ur, site_q->second).lhs_bond = bond_id;
                        ConcreteRule unbind_rule = unbind.finish();
                        unbind_rule.rate = detail::rate_of(tg, principal, MetaKind::BrkRate);
                        disjunct.unbind = std::move(unbind_rule);
                        pre.disjuncts.push_back(std::move(disjunct));
                    }
            } else {
                auto tgts = detail::kind_children(tg, principal, MetaKind::Tgt);
                if (tgts.size() != 1) continue;
                auto flags = tg.graph->e_successors(tgts.front());
                if (flags.size() != 1) continue;
                const NodeId& fn = flags.front();
                bool post = tg.graph->values_of(fn).begin()->as_boolean();
                auto site = sites.flag_site.find(to_m.at(fn));
                if (site == sites.flag_site.end())
                    throw std::logic_error("instantiate: modified flag without a reified site");

                auto srcs = detail::kind_children(tg, principal, MetaKind::Src);
                std::vector<NodeId> enzymes;
                if (!srcs.empty()) enzymes = tg.graph->e_predecessors(srcs.front());
                std::sort(enzymes.begin(), enzymes.end());
                if (enzymes.empty()) enzymes.push_back("");

                for (const auto& en : enzymes) {
                    detail::WitnessContext ctx{model, tg, principal, {}};
                    for (const auto& other : enzymes)
                        if (!other.empty() && other != en)
                            ctx.excluded_agents.insert(detail::WitnessContext::owner_agent_in(tg, other));

                    detail::RuleBuilder builder(sites);
                    if (!en.empty()) {
                        NodeId owner = detail::WitnessContext::owner_agent_in(tg, en);
                        builder.fresh_instance(to_m.at(owner), owner);
                    }
                    NodeId flag_owner = detail::WitnessContext::owner_agent_in(tg, fn);
                    if (!builder.instances_of.count(flag_owner))
                        builder.fresh_instance(to_m.at(flag_owner), flag_owner);
                    std::size_t inst = builder.instances_of.at(flag_owner).front();
                    SiteMention& m = builder.mention(inst, site->second);
                    m.lhs_state = post ? "0" : "1";
                    m.rhs_state = post ? "1" : "0";
                    detail::add_context(builder, ctx, witness, {fn});
                    PreRuleDisjunct disjunct;
                    disjunct.witness = witness;
                    if (!en.empty()) disjunct.participants.push_back(to_m.at(en));
                    disjunct.rule = builder.finish();
                    disjunct.rule.rate = detail::rate_of(tg, principal, MetaKind::ModRate);
                    pre.disjuncts.push_back(std::move(disjunct));
                }
            }
        }
        // canonical disjunct order and de-duplication across witnesses
        std::sort(pre.disjuncts.begin(), pre.disjuncts.end(),
                  [](const PreRuleDisjunct& a, const PreRuleDisjunct& b) {
                      return std::make_pair(a.participants, a.witness) <
                             std::make_pair(b.participants, b.witness);
                  });
        out.push_back(std::move(pre));
    }
    std::sort(out.begin(), out.end(), [](const PreRule& a, const PreRule& b) { return a.action < b.action; });
    return out;
}

// ---------------------------------------------------------------------------
// Kappa emission
// ---------------------------------------------------------------------------

namespace detail {

inline std::string render_side(const TypedGraph& pm, const SiteMap& sites, const ConcreteRule& rule,
                               bool rhs) {
    std::ostringstream os;
    for (std::size_t i = 0; i < rule.agents.size(); ++i) {
        if (i) os << ",";
        const auto& agent = rule.agents[i];
        os << pm.graph->display(agent.agent) << "(";
        for (std::size_t j = 0; j < agent.mentions.size(); ++j) {
            if (j) os << ",";
            const auto& m = agent.mentions[j];
            os << sites.at(m.site).name;
            const auto& state = rhs ? m.rhs_state : m.lhs_state;
            int bond = rhs ? m.rhs_bond : m.lhs_bond;
            if (state) os << "~" << *state;
            if (bond >= 0) os << "!" << bond;
        }
        os << ")";
    }
    return os.str();
}

inline std::string render_rule(const TypedGraph& pm, const SiteMap& sites, const ConcreteRule& rule) {
    std::string line = render_side(pm, sites, rule, false) + " -> " + render_side(pm, sites, rule, true);
    if (rule.rate) line += " @ " + rule.rate->to_decimal_string();
    return line;
}

} // namespace detail

/// Final compilation into Kappa text: agent signatures (default state first),
/// then the rules with disjunctions multiplied out, each bind followed by its
/// context-less unbind. Output is byte-deterministic for a given model.
inline KappaModel emit_kappa(const Model& model, const std::vector<PreRule>& prerules,
                             const SiteMap& sites, const ProteinSelection& sel) {
    const TypedGraph& pm = model.premodel;
    KappaModel out;
    std::ostringstream text;
    text << "# generated by nugget-forge " << kGeneratorVersion << "\n";

    std::set<std::string> names;
    for (const auto& agent : sel.agents) {
        std::string name = pm.graph->display(agent);
        if (!names.insert(name).second)
            throw std::invalid_argument("emit: two selected agents render the same name " + name);
        std::ostringstream sig;
        sig << "%agent: " << name << "(";
        const auto& order = sites.per_agent.at(agent);
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (i) sig << ",";
            const Site& site = sites.at(order[i]);
            sig << site.name;
            for (const auto& state : site.states) sig << "~" << state;
        }
        sig << ")";
        out.signatures.push_back(sig.str());
        text << sig.str() << "\n";
    }
    if (!out.signatures.empty()) text << "\n";

    std::set<std::string> seen_rules;
    bool first_block = true;
    for (const auto& pre : prerules) {
        for (const auto& disjunct : pre.disjuncts) {
            std::string line = detail::render_rule(pm, sites, disjunct.rule);
            if (!seen_rules.insert(line).second) continue;
            if (!first_block) text << "\n";
            first_block = false;
            out.rules.push_back(line);
            text << line << "\n";
            if (disjunct.unbind) {
                std::string back = detail::render_rule(pm, sites, *disjunct.unbind);
                if (seen_rules.insert(back).second) {
                    out.rules.push_back(back);
                    text << back << "\n";
                }
            }
        }
    }
    out.text = text.str();
    return out;
}

struct InstantiationResult {
    std::set<NuggetId> applicable;
    SiteMap sites;
    ConflictRelation conflicts;
    std::vector<PreRule> prerules;
    KappaModel kappa;
};

/// The whole pipeline: applicability, site reification, conflict analysis,
/// optional clique conflation, pre-rules, Kappa text.
inline InstantiationResult instantiate(const Model& model, const ProteinSelection& sel,
                                       const InstantiationOptions& options = {}) {
    InstantiationResult out;
    out.applicable = applicable_nuggets(model, sel);
    out.sites = reify_sites(model, out.applicable, sel);
    out.conflicts = conflict_analysis(model, out.applicable, out.sites);
    if (options.merge_cliques) {
        auto [merged_sites, merged_conflicts] = merge_conflict_cliques(out.sites, out.conflicts);
        out.sites = std::move(merged_sites);
        out.conflicts = std::move(merged_conflicts);
    }
    out.prerules = generate_prerules(model, out.applicable, out.sites, out.conflicts);
    out.kappa = emit_kappa(model, out.prerules, out.sites, sel);
    return out;
}

} // namespace nf
