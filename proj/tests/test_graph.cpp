#include <catch2/catch_amalgamated.hpp>

#include "crag/graph.hpp"
#include "testutil.hpp"

using crag::CausalFaultGraph;
using crag::Variable;
using crag::VarKind;

namespace {

CausalFaultGraph chain_abc() {
    CausalFaultGraph g;
    g.add_variable({"A", VarKind::HwContext, 2});
    g.add_variable({"B", VarKind::FaultIndicator, 2});
    g.add_variable({"C", VarKind::SwContext, 2});
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    return g;
}

}  // namespace

TEST_CASE("edges reject cycles and duplicates", "[graph]") {
    auto g = chain_abc();
    REQUIRE_THROWS_AS(g.add_edge(2, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(g.add_edge(1, 1), std::invalid_argument);
    g.add_edge(0, 1);  // duplicate is a no-op
    REQUIRE(g.num_edges() == 2);
    g.remove_edge(0, 1);
    REQUIRE_FALSE(g.has_edge(0, 1));
}

TEST_CASE("markov blanket of a chain", "[graph]") {
    auto g = chain_abc();
    REQUIRE(g.markov_blanket("B") == std::vector<int>{0, 2});
}

TEST_CASE("markov blanket includes co-parents", "[graph]") {
    CausalFaultGraph g;
    g.add_variable({"A", VarKind::HwContext, 2});
    g.add_variable({"B", VarKind::HwContext, 2});
    g.add_variable({"C", VarKind::FaultIndicator, 2});
    g.add_edge(0, 2);
    g.add_edge(1, 2);
    REQUIRE(g.markov_blanket("A") == std::vector<int>{1, 2});
}

TEST_CASE("markov blanket of an isolated variable is empty", "[graph]") {
    CausalFaultGraph g;
    g.add_variable({"A", VarKind::HwContext, 2});
    g.add_variable({"B", VarKind::HwContext, 2});
    REQUIRE(g.markov_blanket("A").empty());
    REQUIRE_THROWS_AS(g.markov_blanket(5), std::out_of_range);
    REQUIRE_THROWS_AS(g.markov_blanket("missing"), std::out_of_range);
}

TEST_CASE("markov blanket matches the conditional-independence oracle on all small dags",
          "[graph][oracle]") {
    for (int n = 2; n <= 5; ++n) {
        auto dags = testutil::all_dags(n);
        for (const auto& edges : dags) {
            CausalFaultGraph g;
            for (int i = 0; i < n; ++i) g.add_variable({"v" + std::to_string(i), VarKind::HwContext, 2});
            for (auto [a, b] : edges) g.add_edge(a, b);
            for (int v = 0; v < n; ++v) REQUIRE(g.markov_blanket(v) == testutil::blanket_oracle(g, v));
        }
    }
}

TEST_CASE("topological order respects edges", "[graph]") {
    auto g = chain_abc();
    auto order = g.topo_order();
    std::vector<int> pos(3);
    for (int i = 0; i < 3; ++i) pos[order[i]] = i;
    for (auto [p, c] : g.edges()) REQUIRE(pos[p] < pos[c]);
}

TEST_CASE("cpt rows validate and serialize round trip", "[graph]") {
    auto g = chain_abc();
    g.set_cpt(0, {0.7, 0.3});
    g.set_cpt(1, {0.9, 0.1, 0.2, 0.8});
    g.set_cpt(2, {0.6, 0.4, 0.25, 0.75});
    g.set_round_label(7);
    REQUIRE_NOTHROW(g.validate_cpts());

    auto text = g.to_text();
    auto parsed = CausalFaultGraph::from_text(text);
    REQUIRE(parsed.to_text() == text);
    REQUIRE(parsed.round_label() == 7);
    REQUIRE(parsed.prob(1, 1, std::vector<int>{1, -1, -1}) == Catch::Approx(0.8));

    g.set_cpt(0, {0.7, 0.2});
    REQUIRE_THROWS(g.validate_cpts());
}

TEST_CASE("ancestral sampling honors forced distributions", "[graph]") {
    auto g = chain_abc();
    g.set_cpt(0, {0.5, 0.5});
    g.set_cpt(1, {1.0, 0.0, 1.0, 0.0});
    g.set_cpt(2, {1.0, 0.0, 1.0, 0.0});
    crag::Rng rng(42);
    std::map<int, std::vector<double>> forced{{1, {0.0, 1.0}}};
    for (int i = 0; i < 50; ++i) {
        auto s = g.sample(rng, forced);
        REQUIRE(s[1] == 1);  // forced despite its cpt saying never
    }
}

TEST_CASE("dag enumeration counts match the known series", "[graph][oracle]") {
    REQUIRE(testutil::all_dags(2).size() == 3);
    REQUIRE(testutil::all_dags(3).size() == 25);
    REQUIRE(testutil::all_dags(4).size() == 543);
}
