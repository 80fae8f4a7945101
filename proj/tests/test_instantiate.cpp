#include <catch2/catch.hpp>

#include "nf/instantiate.hpp"
#include "support/fixtures.hpp"
#include "support/kappa_text.hpp"

using namespace nf;

namespace {

ProteinSelection select_all() {
    ProteinSelection sel;
    sel.agents = {"egfr", "grb2", "shc"};
    sel.wildtype = fixtures::wildtype_s();
    return sel;
}

const std::vector<std::string> kGoldenRules = {
    "EGFR(bShc),Shc(bEGFR) -> EGFR(bShc!0),Shc(bEGFR!0)",
    "EGFR(bShc!0),Shc(bEGFR!0) -> EGFR(bShc),Shc(bEGFR)",
    "EGFR(bGrb2),Grb2(rgSH2,rs90~S) -> EGFR(bGrb2!0),Grb2(rgSH2!0,rs90~S)",
    "EGFR(bGrb2!0),Grb2(rgSH2!0) -> EGFR(bGrb2),Grb2(rgSH2)",
    "Shc(bGrb2),Grb2(rgSH2,rs90~S) -> Shc(bGrb2!0),Grb2(rgSH2!0,rs90~S)",
    "Shc(bGrb2!0),Grb2(rgSH2!0) -> Shc(bGrb2),Grb2(rgSH2)",
};

const std::vector<std::string> kGoldenRulesWithConflict = {
    "EGFR(bShc,bGrb2),Shc(bEGFR) -> EGFR(bShc!0,bGrb2),Shc(bEGFR!0)",
    "EGFR(bShc!0),Shc(bEGFR!0) -> EGFR(bShc),Shc(bEGFR)",
    "EGFR(bShc,bGrb2),Grb2(rgSH2,rs90~S) -> EGFR(bShc,bGrb2!0),Grb2(rgSH2!0,rs90~S)",
    "EGFR(bGrb2!0),Grb2(rgSH2!0) -> EGFR(bGrb2),Grb2(rgSH2)",
    "Shc(bGrb2),Grb2(rgSH2,rs90~S) -> Shc(bGrb2!0),Grb2(rgSH2!0,rs90~S)",
    "Shc(bGrb2!0),Grb2(rgSH2!0) -> Shc(bGrb2),Grb2(rgSH2)",
};

} // namespace

TEST_CASE("applicable_nuggets filters by selected agents", "[instantiate]") {
    Model m = fixtures::running_model();
    ProteinSelection sel = select_all();
    CHECK(applicable_nuggets(m, sel) == std::set<NuggetId>{1, 2, 3});

    sel.agents = {"egfr", "grb2"};
    CHECK(applicable_nuggets(m, sel) == std::set<NuggetId>{1});

    sel.agents = {};
    CHECK(applicable_nuggets(m, sel).empty());

    sel.agents = {"nosuch"};
    CHECK_THROWS_AS(applicable_nuggets(m, sel), std::invalid_argument);
}

TEST_CASE("reify_sites produces the running example's sites", "[instantiate]") {
    Model m = fixtures::running_model_sd();
    ProteinSelection sel = select_all();
    auto nuggets = applicable_nuggets(m, sel);
    SiteMap sites = reify_sites(m, nuggets, sel);

    auto names = [&](const NodeId& agent) {
        std::vector<std::string> out;
        for (std::size_t i : sites.per_agent.at(agent)) out.push_back(sites.at(i).name);
        return out;
    };
    CHECK(names("egfr") == std::vector<std::string>{"bShc", "bGrb2"});
    CHECK(names("shc") == std::vector<std::string>{"bEGFR", "bGrb2"});
    CHECK(names("grb2") == std::vector<std::string>{"rgSH2", "rs90"});

    const Site& rs90 = sites.at(sites.residue_site.at("r90"));
    CHECK(rs90.states == std::vector<std::string>{"S", "D"});
    CHECK(rs90.default_state == "S");
}

TEST_CASE("agents with no participations get no sites", "[instantiate]") {
    Model m = fixtures::running_model();
    StructuredGraph pg = *m.premodel.graph;
    pg.add_node("idle", {}, "Idle");
    m.premodel.graph = make_graph(std::move(pg));
    m.premodel.typing["idle"] = MetaKind::Agent;

    ProteinSelection sel = select_all();
    sel.agents.insert("idle");
    auto result = instantiate(m, sel);
    CHECK(result.sites.per_agent.at("idle").empty());
    bool found = false;
    for (const auto& sig : result.kappa.signatures)
        if (sig == "%agent: Idle()") found = true;
    CHECK(found);
}

TEST_CASE("conflict analysis finds the intrinsic group and no extrinsic pairs", "[instantiate]") {
    Model m = fixtures::running_model();
    ProteinSelection sel = select_all();
    auto nuggets = applicable_nuggets(m, sel);
    SiteMap sites = reify_sites(m, nuggets, sel);
    ConflictRelation conflicts = conflict_analysis(m, nuggets, sites);

    REQUIRE(conflicts.intrinsic.size() == 1);
    CHECK(conflicts.intrinsic[0].action == "bnd_grb2");
    CHECK(conflicts.intrinsic[0].participants == std::vector<NodeId>{"egfr", "shc"});
    CHECK(conflicts.extrinsic.empty());
}

TEST_CASE("overlapping intervals yield an extrinsic conflict", "[instantiate]") {
    Model m = fixtures::running_model(true);
    ProteinSelection sel = select_all();
    auto nuggets = applicable_nuggets(m, sel);
    SiteMap sites = reify_sites(m, nuggets, sel);
    ConflictRelation conflicts = conflict_analysis(m, nuggets, sites);

    REQUIRE(conflicts.extrinsic.size() == 1);
    auto [a, b] = *conflicts.extrinsic.begin();
    std::set<std::string> pair{sites.at(a).name, sites.at(b).name};
    CHECK(pair == std::set<std::string>{"bGrb2", "bShc"});
}

TEST_CASE("clique conflation merges triangles and leaves paths alone", "[instantiate]") {
    SiteMap sites;
    for (int i = 0; i < 3; ++i) {
        Site s;
        s.name = "s" + std::to_string(i);
        s.agent = "a";
        s.anchor = "act" + std::to_string(i);
        sites.binding_site[{s.anchor, "a"}] = sites.sites.size();
        sites.per_agent["a"].push_back(sites.sites.size());
        sites.sites.push_back(s);
    }

    SECTION("triangle merges to one site") {
        ConflictRelation conflicts;
        conflicts.extrinsic = {{0, 1}, {0, 2}, {1, 2}};
        auto [merged, remaining] = merge_conflict_cliques(sites, conflicts);
        CHECK(merged.per_agent.at("a").size() == 1);
        CHECK(remaining.extrinsic.empty());
        for (const auto& [key, idx] : merged.binding_site) CHECK(merged.at(idx).name == "s0");
    }
    SECTION("path does not merge") {
        ConflictRelation conflicts;
        conflicts.extrinsic = {{0, 1}, {1, 2}};
        auto [merged, remaining] = merge_conflict_cliques(sites, conflicts);
        CHECK(merged.per_agent.at("a").size() == 3);
        CHECK(remaining.extrinsic.size() == 2);
    }
    SECTION("no conflicts is the identity") {
        auto [merged, remaining] = merge_conflict_cliques(sites, {});
        CHECK(merged.per_agent.at("a").size() == 3);
    }
}

TEST_CASE("pre-rules of the running model", "[instantiate]") {
    Model m = fixtures::running_model();
    ProteinSelection sel = select_all();
    auto nuggets = applicable_nuggets(m, sel);
    SiteMap sites = reify_sites(m, nuggets, sel);
    ConflictRelation conflicts = conflict_analysis(m, nuggets, sites);
    auto prerules = generate_prerules(m, nuggets, sites, conflicts);

    REQUIRE(prerules.size() == 2);
    CHECK(prerules[0].action == "bnd_egfr_shc");
    CHECK(prerules[0].disjuncts.size() == 1);
    CHECK(prerules[1].action == "bnd_grb2");
    REQUIRE(prerules[1].disjuncts.size() == 2);
    CHECK(prerules[1].disjuncts[0].participants == std::vector<NodeId>{"egfr", "sh2"});
    CHECK(prerules[1].disjuncts[1].participants == std::vector<NodeId>{"shc", "sh2"});
    // disjuncts of one bind compete for the identical partner-side site
    auto site_of = [&](const PreRuleDisjunct& d) {
        return sites.binding_site.at({prerules[1].action, d.participants[1]});
    };
    CHECK(site_of(prerules[1].disjuncts[0]) == site_of(prerules[1].disjuncts[1]));
    for (const auto& pre : prerules)
        for (const auto& d : pre.disjuncts) CHECK(d.unbind.has_value());
}

TEST_CASE("the running model emits the paper's six rules", "[instantiate]") {
    Model m = fixtures::running_model();
    auto result = instantiate(m, select_all());
    CHECK(kappa_text::rule_lines(result.kappa.text) == kGoldenRules);
    CHECK(result.kappa.rules == kGoldenRules);
}

TEST_CASE("the variant pre-model emits the same rules plus the S~D signature", "[instantiate]") {
    Model m = fixtures::running_model_sd();
    auto result = instantiate(m, select_all());
    CHECK(kappa_text::rule_lines(result.kappa.text) == kGoldenRules);
    bool found = false;
    for (const auto& sig : result.kappa.signatures)
        if (sig == "%agent: Grb2(rgSH2,rs90~S~D)") found = true;
    CHECK(found);
}

TEST_CASE("the interval variant swaps in the conflict-bearing rules", "[instantiate]") {
    Model m = fixtures::running_model(true);
    auto result = instantiate(m, select_all());
    CHECK(kappa_text::rule_lines(result.kappa.text) == kGoldenRulesWithConflict);
}

TEST_CASE("aggregating by nugget update gives the same Kappa as sharing the action", "[instantiate]") {
    Model m = empty_model();
    m = add_nugget(m, fixtures::nugget_egfr_grb2(), {}).model;
    m = update_nugget(m, 1, fixtures::nugget_shc_grb2(),
                      fixtures::seeds({{"grb2", "grb2"}, {"bnd_grb2", "bnd_grb2"}}), {})
            .model;
    m = add_nugget(m, fixtures::nugget_egfr_shc(), fixtures::seeds({{"egfr", "egfr"}, {"shc", "shc"}}))
            .model;
    REQUIRE(m.nuggets.size() == 2);

    auto merged = instantiate(m, select_all());
    auto shared = instantiate(fixtures::running_model(), select_all());
    CHECK(kappa_text::rule_lines(merged.kappa.text) == kappa_text::rule_lines(shared.kappa.text));

    // the merged nugget carries one pre-rule with both disjuncts
    for (const auto& pre : merged.prerules)
        if (pre.action == "bnd_grb2") CHECK(pre.disjuncts.size() == 2);
}

TEST_CASE("restricting the selection drops the other rules", "[instantiate]") {
    Model m = fixtures::running_model();
    ProteinSelection sel;
    sel.agents = {"egfr", "grb2"};
    sel.wildtype = fixtures::wildtype_s();
    auto result = instantiate(m, sel);
    CHECK(kappa_text::rule_lines(result.kappa.text) ==
          std::vector<std::string>{kGoldenRules[2], kGoldenRules[3]});
    auto names = [&](const NodeId& agent) {
        std::vector<std::string> out;
        for (std::size_t i : result.sites.per_agent.at(agent)) out.push_back(result.sites.at(i).name);
        return out;
    };
    CHECK(names("egfr") == std::vector<std::string>{"bGrb2"});
}

TEST_CASE("a modification rule flips its flag from the complement state", "[instantiate]") {
    Model m = empty_model();
    m = add_nugget(m, fixtures::nugget_mod_residue_phos(), {}).model;
    ProteinSelection sel;
    sel.agents = {"k", "egfr"};
    auto result = instantiate(m, sel);
    REQUIRE(result.kappa.rules.size() == 1);
    CHECK(result.kappa.rules[0] == "K(),EGFR(rs1092_phos~0) -> K(),EGFR(rs1092_phos~1)");
}

TEST_CASE("rates render as decimal literals only when present", "[instantiate]") {
    TypedGraph n1 = fixtures::nugget_egfr_shc();
    StructuredGraph g = *n1.graph;
    g.add_node("bnd_rate", {Value::rate(3, 2)});
    g.add_node("brk_rate", {Value::rate(1, 4)});
    g.add_s_edge("bnd_rate", "bnd_egfr_shc");
    g.add_s_edge("brk_rate", "bnd_egfr_shc");
    n1.graph = fixtures::closed(std::move(g));
    n1.typing["bnd_rate"] = MetaKind::BndRate;
    n1.typing["brk_rate"] = MetaKind::BrkRate;

    Model m = empty_model();
    m = add_nugget(m, n1, {}).model;
    ProteinSelection sel;
    sel.agents = {"egfr", "shc"};
    auto result = instantiate(m, sel);
    REQUIRE(result.kappa.rules.size() == 2);
    CHECK(result.kappa.rules[0] == "EGFR(bShc),Shc(bEGFR) -> EGFR(bShc!0),Shc(bEGFR!0) @ 1.5");
    CHECK(result.kappa.rules[1] == "EGFR(bShc!0),Shc(bEGFR!0) -> EGFR(bShc),Shc(bEGFR) @ 0.25");
}

TEST_CASE("emitted text invariants", "[instantiate][property]") {
    for (bool intervals : {false, true}) {
        Model m = fixtures::running_model(intervals);
        auto result = instantiate(m, select_all());
        auto doc = kappa_text::parse(result.kappa.text);

        // every site mentioned in a rule is declared in a signature
        std::map<std::string, std::set<std::string>> declared;
        for (const auto& sig : doc.signatures)
            for (const auto& site : sig.sites) declared[sig.name].insert(site.name);
        for (const auto& rule : doc.rules)
            for (const auto& side : {rule.lhs, rule.rhs})
                for (const auto& agent : side)
                    for (const auto& site : agent.sites) {
                        INFO(agent.name << "." << site.name);
                        CHECK(declared.at(agent.name).count(site.name));
                    }

        // residue-derived states are never modified by any rule
        std::set<std::string> aa_sites;
        for (std::size_t i = 0; i < result.sites.sites.size(); ++i)
            if (result.sites.at(i).origin == SiteOrigin::Residue) aa_sites.insert(result.sites.at(i).name);
        for (const auto& rule : doc.rules) {
            REQUIRE(rule.lhs.size() == rule.rhs.size());
            for (std::size_t i = 0; i < rule.lhs.size(); ++i)
                for (std::size_t j = 0; j < rule.lhs[i].sites.size(); ++j) {
                    const auto& l = rule.lhs[i].sites[j];
                    if (!aa_sites.count(l.name)) continue;
                    REQUIRE(j < rule.rhs[i].sites.size());
                    CHECK(rule.rhs[i].sites[j].state == l.state);
                }
        }

        // every bind rule is followed by its context-less unbind
        const auto& lines = result.kappa.rules;
        for (std::size_t i = 0; i + 1 < lines.size(); i += 2) {
            auto bind = kappa_text::parse(lines[i] + "\n").rules.at(0);
            auto unbind = kappa_text::parse(lines[i + 1] + "\n").rules.at(0);
            std::set<std::pair<std::string, std::string>> bound, released;
            for (const auto& agent : bind.rhs)
                for (const auto& site : agent.sites)
                    if (site.bond >= 0) bound.insert({agent.name, site.name});
            for (const auto& agent : unbind.lhs)
                for (const auto& site : agent.sites)
                    if (site.bond >= 0) released.insert({agent.name, site.name});
            CHECK(bound == released);
            for (const auto& agent : unbind.lhs)
                for (const auto& site : agent.sites) CHECK(site.state.empty());
        }

        // purity: a second run is byte-identical
        auto again = instantiate(m, select_all());
        CHECK(again.kappa.text == result.kappa.text);
    }
}

TEST_CASE("adding an unrelated nugget never changes existing rules", "[instantiate]") {
    Model m = fixtures::running_model();
    std::string before = instantiate(m, select_all()).kappa.text;

    StructuredGraph g;
    g.add_node("a", {}, "Alpha");
    g.add_node("b", {}, "Beta");
    g.add_node("bnd_ab", {});
    g.add_node("bnd_ab_s1", {});
    g.add_node("bnd_ab_s2", {});
    g.add_s_edge("bnd_ab_s1", "bnd_ab");
    g.add_s_edge("bnd_ab_s2", "bnd_ab");
    g.add_e_edge("a", "bnd_ab_s1");
    g.add_e_edge("b", "bnd_ab_s2");
    TypedGraph fresh;
    fresh.graph = fixtures::closed(std::move(g));
    fresh.typing = {{"a", MetaKind::Agent},
                    {"b", MetaKind::Agent},
                    {"bnd_ab", MetaKind::Bnd},
                    {"bnd_ab_s1", MetaKind::Src},
                    {"bnd_ab_s2", MetaKind::Src}};
    m = add_nugget(m, fresh, {}).model;

    std::string after = instantiate(m, select_all()).kappa.text;
    CHECK(after == before);
}

TEST_CASE("merge-cliques option conflates the interval conflict pair", "[instantiate]") {
    Model m = fixtures::running_model(true);
    InstantiationOptions options;
    options.merge_cliques = true;
    auto result = instantiate(m, select_all(), options);
    CHECK(result.sites.per_agent.at("egfr").size() == 1);
    CHECK(result.conflicts.extrinsic.empty());
    // occupancy of the shared site now enforces the exclusion
    for (const auto& line : result.kappa.rules) {
        auto rule = kappa_text::parse(line + "\n").rules.at(0);
        for (const auto& agent : rule.lhs)
            if (agent.name == "EGFR") CHECK(agent.sites.size() == 1);
    }
}
