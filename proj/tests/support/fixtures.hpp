#pragma once

#include "nf/model.hpp"

// The running example: EGFR, Grb2 and Shc with their binding nuggets, plus the
// phosphorylation update material used by the aggregation walkthrough.
namespace fixtures {

using namespace nf;

inline GraphPtr closed(StructuredGraph g) { return make_graph(normalize_s(std::move(g))); }

/// "EGFR binds the SH2 domain of Grb2 provided residue 90 of Grb2 is serine."
inline TypedGraph nugget_egfr_grb2() {
    StructuredGraph g;
    g.add_node("egfr", {}, "EGFR");
    g.add_node("grb2", {}, "Grb2");
    g.add_node("sh2", {}, "SH2");
    g.add_node("r90", {});
    g.add_node("r90_loc", {Value::positive_int(90)});
    g.add_node("r90_aa", {Value::amino_acid('S')});
    g.add_node("bnd_grb2", {});
    g.add_node("bnd_grb2_s1", {});
    g.add_node("bnd_grb2_s2", {});
    g.add_s_edge("sh2", "grb2");
    g.add_s_edge("r90", "grb2");
    g.add_s_edge("r90_loc", "r90");
    g.add_s_edge("r90_aa", "r90");
    g.add_s_edge("bnd_grb2_s1", "bnd_grb2");
    g.add_s_edge("bnd_grb2_s2", "bnd_grb2");
    g.add_e_edge("egfr", "bnd_grb2_s1");
    g.add_e_edge("sh2", "bnd_grb2_s2");
    TypedGraph tg;
    tg.graph = closed(std::move(g));
    tg.typing = {{"egfr", MetaKind::Agent},     {"grb2", MetaKind::Agent},
                 {"sh2", MetaKind::Region},     {"r90", MetaKind::Residue},
                 {"r90_loc", MetaKind::Loc},    {"r90_aa", MetaKind::Aa},
                 {"bnd_grb2", MetaKind::Bnd},   {"bnd_grb2_s1", MetaKind::Src},
                 {"bnd_grb2_s2", MetaKind::Src}};
    return tg;
}

/// The same nugget with the phosphorylation condition on EGFR as an
/// agent-level flag.
inline TypedGraph nugget_egfr_grb2_full() {
    TypedGraph tg = nugget_egfr_grb2();
    StructuredGraph g = *tg.graph;
    g.add_node("egfr_phos", {Value::boolean(true)}, "phos");
    g.add_s_edge("egfr_phos", "egfr");
    tg.graph = closed(std::move(g));
    tg.typing["egfr_phos"] = MetaKind::Flag;
    return tg;
}

/// "Shc binds the SH2 domain of Grb2 provided residue 90 of Grb2 is serine."
inline TypedGraph nugget_shc_grb2() {
    StructuredGraph g;
    g.add_node("shc", {}, "Shc");
    g.add_node("grb2", {}, "Grb2");
    g.add_node("sh2", {}, "SH2");
    g.add_node("r90", {});
    g.add_node("r90_loc", {Value::positive_int(90)});
    g.add_node("r90_aa", {Value::amino_acid('S')});
    g.add_node("bnd_grb2", {});
    g.add_node("bnd_grb2_s1", {});
    g.add_node("bnd_grb2_s2", {});
    g.add_s_edge("sh2", "grb2");
    g.add_s_edge("r90", "grb2");
    g.add_s_edge("r90_loc", "r90");
    g.add_s_edge("r90_aa", "r90");
    g.add_s_edge("bnd_grb2_s1", "bnd_grb2");
    g.add_s_edge("bnd_grb2_s2", "bnd_grb2");
    g.add_e_edge("shc", "bnd_grb2_s1");
    g.add_e_edge("sh2", "bnd_grb2_s2");
    TypedGraph tg;
    tg.graph = closed(std::move(g));
    tg.typing = {{"shc", MetaKind::Agent},      {"grb2", MetaKind::Agent},
                 {"sh2", MetaKind::Region},     {"r90", MetaKind::Residue},
                 {"r90_loc", MetaKind::Loc},    {"r90_aa", MetaKind::Aa},
                 {"bnd_grb2", MetaKind::Bnd},   {"bnd_grb2_s1", MetaKind::Src},
                 {"bnd_grb2_s2", MetaKind::Src}};
    return tg;
}

/// "EGFR binds Shc", no further conditions.
inline TypedGraph nugget_egfr_shc() {
    StructuredGraph g;
    g.add_node("egfr", {}, "EGFR");
    g.add_node("shc", {}, "Shc");
    g.add_node("bnd_egfr_shc", {});
    g.add_node("bnd_egfr_shc_s1", {});
    g.add_node("bnd_egfr_shc_s2", {});
    g.add_s_edge("bnd_egfr_shc_s1", "bnd_egfr_shc");
    g.add_s_edge("bnd_egfr_shc_s2", "bnd_egfr_shc");
    g.add_e_edge("egfr", "bnd_egfr_shc_s1");
    g.add_e_edge("shc", "bnd_egfr_shc_s2");
    TypedGraph tg;
    tg.graph = closed(std::move(g));
    tg.typing = {{"egfr", MetaKind::Agent},
                 {"shc", MetaKind::Agent},
                 {"bnd_egfr_shc", MetaKind::Bnd},
                 {"bnd_egfr_shc_s1", MetaKind::Src},
                 {"bnd_egfr_shc_s2", MetaKind::Src}};
    return tg;
}

/// The refinement "EGFR binds Grb2 provided EGFR is phosphorylated on Y1092":
/// the Grb2 side participates directly, the residue carries loc, amino acid
/// and the phosphorylation flag.
inline TypedGraph nugget_update_y1092() {
    StructuredGraph g;
    g.add_node("egfr", {}, "EGFR");
    g.add_node("grb2", {}, "Grb2");
    g.add_node("r1092", {});
    g.add_node("r1092_loc", {Value::positive_int(1092)});
    g.add_node("r1092_aa", {Value::amino_acid('Y')});
    g.add_node("r1092_phos", {Value::boolean(true)}, "phos");
    g.add_node("bnd_grb2", {});
    g.add_node("bnd_grb2_s1", {});
    g.add_node("bnd_grb2_s2", {});
    g.add_s_edge("r1092", "egfr");
    g.add_s_edge("r1092_loc", "r1092");
    g.add_s_edge("r1092_aa", "r1092");
    g.add_s_edge("r1092_phos", "r1092");
    g.add_s_edge("bnd_grb2_s1", "bnd_grb2");
    g.add_s_edge("bnd_grb2_s2", "bnd_grb2");
    g.add_e_edge("egfr", "bnd_grb2_s1");
    g.add_e_edge("grb2", "bnd_grb2_s2");
    TypedGraph tg;
    tg.graph = closed(std::move(g));
    tg.typing = {{"egfr", MetaKind::Agent},        {"grb2", MetaKind::Agent},
                 {"r1092", MetaKind::Residue},     {"r1092_loc", MetaKind::Loc},
                 {"r1092_aa", MetaKind::Aa},       {"r1092_phos", MetaKind::Flag},
                 {"bnd_grb2", MetaKind::Bnd},      {"bnd_grb2_s1", MetaKind::Src},
                 {"bnd_grb2_s2", MetaKind::Src}};
    return tg;
}

/// "Kinase K phosphorylates the phos flag of EGFR" (agent-level flag).
inline TypedGraph nugget_mod_agent_phos() {
    StructuredGraph g;
    g.add_node("k", {}, "K");
    g.add_node("egfr", {}, "EGFR");
    g.add_node("egfr_phos", {Value::boolean(true)}, "phos");
    g.add_node("mod", {});
    g.add_node("mod_s", {});
    g.add_node("mod_t", {});
    g.add_s_edge("egfr_phos", "egfr");
    g.add_s_edge("mod_s", "mod");
    g.add_s_edge("mod_t", "mod");
    g.add_e_edge("k", "mod_s");
    g.add_e_edge("mod_t", "egfr_phos");
    TypedGraph tg;
    tg.graph = closed(std::move(g));
    tg.typing = {{"k", MetaKind::Agent},   {"egfr", MetaKind::Agent}, {"egfr_phos", MetaKind::Flag},
                 {"mod", MetaKind::Mod},   {"mod_s", MetaKind::Src},  {"mod_t", MetaKind::Tgt}};
    return tg;
}

/// "Kinase K phosphorylates residue 1092 of EGFR."
inline TypedGraph nugget_mod_residue_phos() {
    StructuredGraph g;
    g.add_node("k", {}, "K");
    g.add_node("egfr", {}, "EGFR");
    g.add_node("r1092", {});
    g.add_node("r1092_loc", {Value::positive_int(1092)});
    g.add_node("r1092_phos", {Value::boolean(true)}, "phos");
    g.add_node("mod", {});
    g.add_node("mod_s", {});
    g.add_node("mod_t", {});
    g.add_s_edge("r1092", "egfr");
    g.add_s_edge("r1092_loc", "r1092");
    g.add_s_edge("r1092_phos", "r1092");
    g.add_s_edge("mod_s", "mod");
    g.add_s_edge("mod_t", "mod");
    g.add_e_edge("k", "mod_s");
    g.add_e_edge("mod_t", "r1092_phos");
    TypedGraph tg;
    tg.graph = closed(std::move(g));
    tg.typing = {{"k", MetaKind::Agent},          {"egfr", MetaKind::Agent},
                 {"r1092", MetaKind::Residue},    {"r1092_loc", MetaKind::Loc},
                 {"r1092_phos", MetaKind::Flag},  {"mod", MetaKind::Mod},
                 {"mod_s", MetaKind::Src},        {"mod_t", MetaKind::Tgt}};
    return tg;
}

inline TypedGraph with_interval(TypedGraph tg, const NodeId& agent, std::int64_t lo, std::int64_t hi) {
    StructuredGraph g = *tg.graph;
    NodeId id = agent + "_int";
    g.add_node(id, {Value::interval(lo, hi)});
    g.add_s_edge(id, agent);
    tg.graph = closed(std::move(g));
    tg.typing[id] = MetaKind::IntervalAttr;
    return tg;
}

inline GlueingChoice seeds(std::vector<std::pair<NodeId, NodeId>> pairs) { return {std::move(pairs)}; }

/// Three nuggets, two pre-model actions: the Grb2 binding is shared between
/// the EGFR and Shc nuggets, so its first source carries both participants.
inline Model running_model(bool with_intervals = false) {
    TypedGraph n1 = nugget_egfr_grb2();
    TypedGraph n3 = nugget_egfr_shc();
    if (with_intervals) {
        n1 = with_interval(std::move(n1), "egfr", 980, 1100);
        n3 = with_interval(std::move(n3), "egfr", 1050, 1200);
    }
    Model m = empty_model();
    m = add_nugget(m, n1, {}).model;
    m = add_nugget(m, nugget_shc_grb2(), seeds({{"grb2", "grb2"}, {"bnd_grb2", "bnd_grb2"}})).model;
    m = add_nugget(m, n3, seeds({{"egfr", "egfr"}, {"shc", "shc"}})).model;
    return m;
}

/// The running model with the Grb2 residue widened to the S/D variant
/// neighbourhood, as a curated pre-model would carry it.
inline Model running_model_sd() {
    Model m = running_model();
    StructuredGraph pg = *m.premodel.graph;
    pg.add_value("r90_aa", Value::amino_acid('D'));
    m.premodel.graph = make_graph(std::move(pg));
    return m;
}

inline std::map<std::pair<NodeId, NodeId>, char> wildtype_s() { return {{{"grb2", "r90"}, 'S'}}; }

/// Model holding just the full EGFR-Grb2 nugget; start of the aggregation
/// walkthrough.
inline Model model_for_updates() {
    Model m = empty_model();
    return add_nugget(m, nugget_egfr_grb2_full(), {}).model;
}

/// Same plus a kinase MOD acting on EGFR's agent-level phos flag.
inline Model model_with_mod() {
    Model m = model_for_updates();
    return add_nugget(m, nugget_mod_agent_phos(),
                      seeds({{"egfr", "egfr"}, {"egfr_phos", "egfr_phos"}}))
        .model;
}

inline GlueingChoice seeds_y1092() {
    return seeds({{"egfr", "egfr"}, {"grb2", "grb2"}, {"bnd_grb2", "bnd_grb2"}});
}

inline GlueingChoice seeds_y1092_move() {
    return seeds({{"egfr", "egfr"}, {"grb2", "grb2"}, {"bnd_grb2", "bnd_grb2"},
                  {"r1092_phos", "egfr_phos"}});
}

} // namespace fixtures
