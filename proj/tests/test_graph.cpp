#include <catch2/catch.hpp>

#include "nf/graph.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace nf;

TEST_CASE("validate_graph accepts the empty graph", "[graph]") {
    StructuredGraph g;
    CHECK(validate_graph(g).ok());
}

TEST_CASE("validate_graph reports dangling edge endpoints", "[graph]") {
    StructuredGraph g;
    g.add_node("a");
    g.add_e_edge("a", "b");
    Report r = validate_graph(g);
    REQUIRE_FALSE(r.ok());
    CHECK(r.has("dangling-e-endpoint"));
}

TEST_CASE("validate_graph accepts the EGFR/Grb2 nugget graph", "[graph]") {
    auto tg = fixtures::nugget_egfr_grb2_full();
    CHECK(validate_graph(*tg.graph).ok());
}

TEST_CASE("parallel edges collapse because relations are sets", "[graph]") {
    StructuredGraph g;
    g.add_node("a");
    g.add_node("b");
    g.add_e_edge("a", "b");
    g.add_e_edge("a", "b");
    CHECK(g.e_edges().size() == 1);
}

TEST_CASE("labels are metadata and do not affect equality", "[graph]") {
    StructuredGraph g1, g2;
    g1.add_node("a", {}, "first");
    g2.add_node("a", {}, "second");
    CHECK(g1 == g2);
}

TEST_CASE("identity homomorphism is valid and mono", "[graph]") {
    auto g = fixtures::nugget_egfr_grb2().graph;
    Homomorphism id = Homomorphism::identity(g);
    CHECK(check_homomorphism(id).ok());
    CHECK(is_mono(id));
}

TEST_CASE("value inclusion failures are reported", "[graph]") {
    StructuredGraph a, b;
    a.add_node("x", {Value::amino_acid('S'), Value::amino_acid('D')});
    b.add_node("y", {Value::amino_acid('S')});
    Homomorphism h;
    h.dom = make_graph(a);
    h.cod = make_graph(b);
    h.node_map = {{"x", "y"}};
    Report r = check_homomorphism(h);
    REQUIRE_FALSE(r.ok());
    CHECK(r.has("value-inclusion"));
}

TEST_CASE("edge preservation failures are reported", "[graph]") {
    StructuredGraph a, b;
    a.add_node("x");
    a.add_node("y");
    a.add_s_edge("x", "y");
    b.add_node("u");
    b.add_node("v");
    Homomorphism h;
    h.dom = make_graph(a);
    h.cod = make_graph(b);
    h.node_map = {{"x", "u"}, {"y", "v"}};
    CHECK(check_homomorphism(h).has("s-edge-not-preserved"));
}

TEST_CASE("collapsing two nodes is not mono, the empty map is", "[graph]") {
    StructuredGraph two, one, empty;
    two.add_node("a");
    two.add_node("b");
    one.add_node("c");
    Homomorphism collapse;
    collapse.dom = make_graph(two);
    collapse.cod = make_graph(one);
    collapse.node_map = {{"a", "c"}, {"b", "c"}};
    CHECK(check_homomorphism(collapse).ok());
    CHECK_FALSE(is_mono(collapse));

    Homomorphism nothing;
    nothing.dom = make_graph(empty);
    nothing.cod = collapse.cod;
    CHECK(check_homomorphism(nothing).ok());
    CHECK(is_mono(nothing));
}

TEST_CASE("compose respects identity laws and rejects mismatches", "[graph]") {
    auto g = fixtures::nugget_egfr_shc().graph;
    Homomorphism id = Homomorphism::identity(g);
    Homomorphism h = compose(id, id);
    CHECK(h.node_map == id.node_map);

    auto other = fixtures::nugget_egfr_grb2().graph;
    Homomorphism wrong = Homomorphism::identity(other);
    CHECK_THROWS_AS(compose(id, wrong), std::invalid_argument);
}

TEST_CASE("composition properties on random homomorphisms", "[graph][property]") {
    std::mt19937 rng(20250811);
    int checked = 0;
    for (int i = 0; i < 80; ++i) {
        auto a = oracles::random_graph(rng, 4);
        auto [b, f] = oracles::random_quotient_extension(rng, a);
        auto [c, s] = oracles::random_quotient_extension(rng, b);
        Homomorphism fh = oracles::as_hom(a, b, f);
        Homomorphism sh = oracles::as_hom(b, c, s);
        REQUIRE(check_homomorphism(fh).ok());
        REQUIRE(check_homomorphism(sh).ok());
        Homomorphism both = compose(fh, sh);
        CHECK(check_homomorphism(both).ok());
        if (is_mono(fh) && is_mono(sh)) CHECK(is_mono(both));
        // associativity against a third layer
        auto [d, t] = oracles::random_quotient_extension(rng, c);
        Homomorphism th = oracles::as_hom(c, d, t);
        Homomorphism left = compose(compose(fh, sh), th);
        Homomorphism right = compose(fh, compose(sh, th));
        CHECK(left.node_map == right.node_map);
        ++checked;
    }
    CHECK(checked == 80);
}

TEST_CASE("normalize_s closes chains and is idempotent", "[graph]") {
    StructuredGraph g;
    g.add_node("flag");
    g.add_node("residue");
    g.add_node("agent");
    g.add_s_edge("flag", "residue");
    g.add_s_edge("residue", "agent");
    StructuredGraph closed = normalize_s(g);
    CHECK(closed.has_s_edge("flag", "agent"));
    CHECK(normalize_s(closed) == closed);
    CHECK(closed.e_edges() == g.e_edges());
    CHECK(closed.values_of("flag") == g.values_of("flag"));
}

TEST_CASE("normalize_s rejects cycles", "[graph]") {
    StructuredGraph g;
    g.add_node("a");
    g.add_node("b");
    g.add_s_edge("a", "b");
    g.add_s_edge("b", "a");
    CHECK_THROWS_AS(normalize_s(g), std::invalid_argument);
}

TEST_CASE("normalize_s preserves e_edges and values on random graphs", "[graph][property]") {
    std::mt19937 rng(42);
    for (int i = 0; i < 60; ++i) {
        StructuredGraph g = *oracles::random_dag_graph(rng, 5);
        StructuredGraph closed = normalize_s(g);
        CHECK(closed.e_edges() == g.e_edges());
        for (const auto& n : g.nodes()) CHECK(closed.values_of(n) == g.values_of(n));
        CHECK(normalize_s(closed) == closed);
    }
}

TEST_CASE("canonical certificates identify relabelled graphs", "[graph]") {
    auto tg = fixtures::nugget_egfr_grb2();
    StructuredGraph relabelled;
    std::map<NodeId, NodeId> rename;
    int i = 0;
    for (const auto& n : tg.graph->nodes()) rename[n] = "node" + std::to_string(i++);
    for (const auto& n : tg.graph->nodes()) relabelled.add_node(rename[n], tg.graph->values_of(n));
    for (const auto& [a, b] : tg.graph->s_edges()) relabelled.add_s_edge(rename[a], rename[b]);
    for (const auto& [a, b] : tg.graph->e_edges()) relabelled.add_e_edge(rename[a], rename[b]);
    CHECK(is_isomorphic(*tg.graph, relabelled));

    relabelled.add_value("node0", Value::boolean(false));
    CHECK_FALSE(is_isomorphic(*tg.graph, relabelled));
}
