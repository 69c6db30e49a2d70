#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "crag/infer.hpp"
#include "testutil.hpp"

using namespace crag;
using namespace crag::infer;

namespace {

// Single binary fault with one observed feature: P(f=1)=0.2,
// P(x=1|f=1)=0.9, P(x=1|f=0)=0.1. Observing x=1 gives the posterior 9/13 and
// -ln P(x=1) = -ln 0.26.
CausalFaultGraph single_fault_net() {
    CausalFaultGraph g;
    g.add_variable({"f", VarKind::FaultIndicator, 2});
    g.add_variable({"x", VarKind::HwContext, 2});
    g.add_edge(0, 1);
    g.set_cpt(0, {0.8, 0.2});
    g.set_cpt(1, {0.9, 0.1, 0.1, 0.9});
    return g;
}

Belief belief_with(const InferenceProblem& p, const std::vector<std::vector<double>>& marginals) {
    Belief b = uniform_belief(p);
    b.marginals = marginals;
    return b;
}

CausalFaultGraph chain_net() {
    CausalFaultGraph g;
    g.add_variable({"A", VarKind::HwContext, 2});
    g.add_variable({"B", VarKind::FaultIndicator, 2});
    g.add_variable({"C", VarKind::SwContext, 2});
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    g.set_cpt(0, {0.6, 0.4});
    g.set_cpt(1, {0.9, 0.1, 0.3, 0.7});
    g.set_cpt(2, {0.8, 0.2, 0.25, 0.75});
    return g;
}

}  // namespace

TEST_CASE("free energy at the exact posterior equals -ln P(evidence)", "[infer][oracle]") {
    auto g = single_fault_net();
    auto p = make_problem(g, {{"x", 1}});
    auto b = belief_with(p, {{1.0 - 9.0 / 13, 9.0 / 13}});
    REQUIRE(free_energy(p, b) == Catch::Approx(-std::log(0.26)).margin(1e-9));
    REQUIRE(free_energy(p, b) == Catch::Approx(1.3470736479666092).margin(1e-9));
}

TEST_CASE("free energy with no evidence and prior beliefs is zero on product nets", "[infer]") {
    CausalFaultGraph g;
    g.add_variable({"f", VarKind::FaultIndicator, 2});
    g.add_variable({"h", VarKind::HwContext, 3});
    g.set_cpt(0, {0.7, 0.3});
    g.set_cpt(1, {0.5, 0.3, 0.2});
    auto p = make_problem(g, {});
    auto b = belief_with(p, {{0.7, 0.3}, {0.5, 0.3, 0.2}});
    REQUIRE(free_energy(p, b) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("free energy is bounded below by -ln P(evidence)", "[infer][property]") {
    auto g = single_fault_net();
    auto p = make_problem(g, {{"x", 1}});
    double bound = 1.3470736479666092;
    Rng rng(17);
    for (int i = 0; i < 100; ++i) {
        double q = rng.uniform01();
        auto b = belief_with(p, {{1.0 - q, q}});
        REQUIRE(free_energy(p, b) >= bound - 1e-12);
    }
}

TEST_CASE("mean field is exact on a single latent", "[infer][oracle]") {
    auto g = single_fault_net();
    auto p = make_problem(g, {{"x", 1}});
    auto b = minimize_free_energy(p);
    REQUIRE(b.converged);
    REQUIRE(b.marginal(0)[1] == Catch::Approx(9.0 / 13).margin(1e-9));
    REQUIRE(b.free_energy == Catch::Approx(1.3470736479666092).margin(1e-9));
    REQUIRE(std::abs(b.marginal(0)[0] + b.marginal(0)[1] - 1.0) < 1e-12);
}

TEST_CASE("disconnected latents converge to their priors after one sweep", "[infer]") {
    CausalFaultGraph g;
    g.add_variable({"f", VarKind::FaultIndicator, 2});
    g.add_variable({"h", VarKind::HwContext, 3});
    g.set_cpt(0, {0.7, 0.3});
    g.set_cpt(1, {0.5, 0.3, 0.2});
    auto p = make_problem(g, {});
    InferOptions opts;
    opts.max_sweeps = 1;
    auto b = minimize_free_energy(p, opts);
    REQUIRE(b.marginal(0)[1] == Catch::Approx(0.3).margin(1e-12));
    REQUIRE(b.marginal(1)[2] == Catch::Approx(0.2).margin(1e-12));

    auto full = minimize_free_energy(p);
    REQUIRE(full.converged);
    REQUIRE(full.sweeps == 2);  // second sweep only confirms convergence
}

TEST_CASE("updates touch only the markov blanket and stay within the read bound",
          "[infer][locality]") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        auto g = testutil::random_net(rng, 8, 2, 0.35);
        std::map<std::string, int> evidence;
        if (trial % 2 == 0) evidence[g.var(7).id] = 0;
        auto p = make_problem(g, evidence);
        InferStats stats;
        InferOptions opts;
        opts.stats = &stats;
        auto b = minimize_free_energy(p, opts);

        long long bound_per_sweep = 0;
        for (int v : p.latents) bound_per_sweep += 1 + static_cast<long long>(g.children(v).size());
        REQUIRE(stats.locality_ok);
        REQUIRE(stats.family_reads <= bound_per_sweep * b.sweeps);
    }
}

TEST_CASE("exact posterior on the single-fault net is 9/13", "[infer][oracle]") {
    auto g = single_fault_net();
    auto p = make_problem(g, {{"x", 1}});
    auto e = exact_posterior(p);
    REQUIRE(e.belief.marginal(0)[1] == Catch::Approx(9.0 / 13).margin(1e-12));
    REQUIRE(e.neg_log_evidence == Catch::Approx(-std::log(0.26)).margin(1e-12));
}

TEST_CASE("exact posterior with no evidence returns ancestral priors", "[infer]") {
    auto g = chain_net();
    auto p = make_problem(g, {});
    auto e = exact_posterior(p);
    // P(B=1) = 0.6*0.1 + 0.4*0.7 = 0.34
    REQUIRE(e.belief.marginal(1)[1] == Catch::Approx(0.34).margin(1e-12));
    REQUIRE(e.neg_log_evidence == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("exact posterior enforces the latent size bound", "[infer]") {
    CausalFaultGraph g;
    for (int i = 0; i < 21; ++i) {
        g.add_variable({"v" + std::to_string(i), VarKind::FaultIndicator, 2});
        g.set_cpt(i, {0.5, 0.5});
    }
    auto p = make_problem(g, {});
    REQUIRE_THROWS_AS(exact_posterior(p), SizeError);
}

TEST_CASE("free_energy_joint at the exact joint equals the evidence bound on random nets",
          "[infer][oracle]") {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        auto g = testutil::random_net(rng, 6, 2, 0.4);
        std::map<std::string, int> evidence{{g.var(5).id, 1}};
        auto p = make_problem(g, evidence);
        auto e = exact_posterior(p);
        REQUIRE(free_energy_joint(p, e.joint) == Catch::Approx(e.neg_log_evidence).margin(1e-9));
    }
}

TEST_CASE("blanket posterior matches enumeration on a chain", "[infer][oracle]") {
    auto g = chain_net();
    auto p = make_problem(g, {{"A", 1}, {"C", 1}});
    auto e = exact_posterior(p);
    auto post = blanket_posterior(g, 1, {{0, 1}, {2, 1}});
    REQUIRE(post[1] == Catch::Approx(e.belief.marginal(1)[1]).margin(1e-12));
}

TEST_CASE("blanket posterior of an isolated fault is its prior", "[infer]") {
    CausalFaultGraph g;
    g.add_variable({"f", VarKind::FaultIndicator, 2});
    g.set_cpt(0, {0.85, 0.15});
    auto post = blanket_posterior(g, 0, {});
    REQUIRE(post[1] == Catch::Approx(0.15).margin(1e-12));
}

TEST_CASE("blanket posterior ignores assignments outside the blanket and rejects gaps",
          "[infer]") {
    auto g = chain_net();
    auto with_extra = blanket_posterior(g, 1, {{0, 1}, {2, 1}});
    // Same blanket values plus an irrelevant variable changed: bit-identical.
    CausalFaultGraph g4 = g;
    g4.add_variable({"D", VarKind::SwContext, 2});
    g4.set_cpt(3, {0.5, 0.5});
    auto a = blanket_posterior(g4, 1, {{0, 1}, {2, 1}, {3, 0}});
    auto b = blanket_posterior(g4, 1, {{0, 1}, {2, 1}, {3, 1}});
    REQUIRE(a[0] == b[0]);
    REQUIRE(a[1] == b[1]);
    REQUIRE(a[1] == with_extra[1]);
    REQUIRE_THROWS_AS(blanket_posterior(g, 1, {{0, 1}}), std::invalid_argument);
}

TEST_CASE("zero-probability evidence is a model-misfit error", "[infer]") {
    CausalFaultGraph g;
    g.add_variable({"f", VarKind::FaultIndicator, 2});
    g.add_variable({"x", VarKind::HwContext, 2});
    g.add_edge(0, 1);
    g.set_cpt(0, {0.5, 0.5});
    g.set_cpt(1, {1.0, 0.0, 1.0, 0.0});  // x=1 impossible under every f
    auto p = make_problem(g, {{"x", 1}});
    auto b = uniform_belief(p);
    REQUIRE_THROWS_AS(free_energy(p, b), ModelMisfitError);
    REQUIRE_THROWS_AS(minimize_free_energy(p), ModelMisfitError);
    REQUIRE_THROWS_AS(exact_posterior(p), ModelMisfitError);
}

TEST_CASE("free energy never increases across sweeps", "[infer][property]") {
    Rng rng(123);
    for (int trial = 0; trial < 30; ++trial) {
        auto g = testutil::random_net(rng, 7, 3, 0.4);
        std::map<std::string, int> evidence;
        for (int v = 0; v < g.num_vars(); ++v)
            if (g.var(v).kind != VarKind::FaultIndicator && rng.bernoulli(0.5))
                evidence[g.var(v).id] = static_cast<int>(rng.below(g.var(v).arity));
        auto p = make_problem(g, evidence);
        if (p.latents.empty()) continue;
        auto b = minimize_free_energy(p);
        for (std::size_t s = 1; s < b.f_trace.size(); ++s)
            REQUIRE(b.f_trace[s] <= b.f_trace[s - 1] + 1e-9);
        REQUIRE(std::isfinite(b.free_energy));
    }
}

TEST_CASE("converged mean field meets the evidence lower bound", "[infer][property]") {
    Rng rng(321);
    for (int trial = 0; trial < 25; ++trial) {
        auto g = testutil::random_net(rng, 6, 2, 0.45);
        std::map<std::string, int> evidence{{g.var(3).id, 0}};
        if (g.var(3).kind == VarKind::FaultIndicator) evidence = {{g.var(1).id, 0}};
        auto p = make_problem(g, evidence);
        auto mf = minimize_free_energy(p);
        auto ex = exact_posterior(p);
        REQUIRE(mf.free_energy >= ex.neg_log_evidence - 1e-12);
    }
}

TEST_CASE("out-of-blanket evidence changes nothing when the blanket is observed",
          "[infer][robustness]") {
    // f's blanket is {x}; y sits outside it behind x.
    CausalFaultGraph g;
    g.add_variable({"f", VarKind::FaultIndicator, 2});
    g.add_variable({"x", VarKind::HwContext, 2});
    g.add_variable({"y", VarKind::SwContext, 2});
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    g.set_cpt(0, {0.8, 0.2});
    g.set_cpt(1, {0.9, 0.1, 0.2, 0.8});
    g.set_cpt(2, {0.7, 0.3, 0.4, 0.6});

    auto with_y0 = make_problem(g, {{"x", 1}, {"y", 0}});
    auto with_y1 = make_problem(g, {{"x", 1}, {"y", 1}});
    auto without_y = make_problem(g, {{"x", 1}});

    auto q0 = minimize_free_energy(with_y0).marginal(0);
    auto q1 = minimize_free_energy(with_y1).marginal(0);
    auto q2 = minimize_free_energy(without_y).marginal(0);
    REQUIRE(std::abs(q0[1] - q1[1]) < 1e-12);
    REQUIRE(std::abs(q0[1] - q2[1]) < 1e-12);
}

TEST_CASE("attribution separates hardware from software evidence", "[infer]") {
    // fault <- hw, fault -> sw; hardware observed in its fault-implying bin.
    CausalFaultGraph g;
    g.add_variable({"hw", VarKind::HwContext, 2});
    g.add_variable({"fault", VarKind::FaultIndicator, 2});
    g.add_variable({"sw", VarKind::SwContext, 2});
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    g.set_cpt(0, {0.8, 0.2});
    g.set_cpt(1, {0.95, 0.05, 0.2, 0.8});
    g.set_cpt(2, {0.9, 0.1, 0.5, 0.5});

    auto p = make_problem(g, {{"hw", 1}, {"sw", 0}});
    auto belief = minimize_free_energy(p);
    auto attr = attribute_origin(p, belief, 1);
    REQUIRE(attr.hw_score > attr.sw_score);
    REQUIRE(attr.label == "hardware");

    // Oracle check: the hw score equals enumeration with only hw clamped.
    auto hw_only = exact_posterior(make_problem(g, {{"hw", 1}}));
    REQUIRE(attr.hw_score == Catch::Approx(hw_only.belief.marginal(1)[1]).margin(1e-6));
}

TEST_CASE("attribution with no software context is driven by hardware", "[infer]") {
    CausalFaultGraph g;
    g.add_variable({"hw", VarKind::HwContext, 2});
    g.add_variable({"fault", VarKind::FaultIndicator, 2});
    g.add_edge(0, 1);
    g.set_cpt(0, {0.8, 0.2});
    g.set_cpt(1, {0.95, 0.05, 0.2, 0.8});
    auto p = make_problem(g, {{"hw", 1}});
    auto belief = minimize_free_energy(p);
    auto attr = attribute_origin(p, belief, 1);
    // The sw side has no evidence to clamp, so it falls back to the prior.
    auto prior = exact_posterior(make_problem(g, {})).belief.marginal(1)[1];
    REQUIRE(attr.sw_score == Catch::Approx(prior).margin(1e-6));
    REQUIRE(attr.hw_score > attr.sw_score);
    REQUIRE(attr.label == "hardware");
}

TEST_CASE("perfectly symmetric evidence is undetermined", "[infer]") {
    CausalFaultGraph g;
    g.add_variable({"hw", VarKind::HwContext, 2});
    g.add_variable({"fault", VarKind::FaultIndicator, 2});
    g.add_variable({"sw", VarKind::SwContext, 2});
    g.add_edge(0, 1);
    g.add_edge(2, 1);
    g.set_cpt(0, {0.8, 0.2});
    g.set_cpt(2, {0.8, 0.2});
    // Symmetric in (hw, sw): rows ordered hw*2+sw.
    g.set_cpt(1, {0.95, 0.05, 0.5, 0.5, 0.5, 0.5, 0.1, 0.9});
    auto p = make_problem(g, {{"hw", 1}, {"sw", 1}});
    auto belief = minimize_free_energy(p);
    auto attr = attribute_origin(p, belief, 1);
    REQUIRE(std::abs(attr.hw_score - attr.sw_score) < 1e-9);
    REQUIRE(attr.label == "undetermined");
}
