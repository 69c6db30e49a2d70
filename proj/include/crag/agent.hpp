#pragma once

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "crag/learn.hpp"
#include "crag/logpipe.hpp"
#include "crag/plan.hpp"

namespace crag::agent {

struct AgentConfig {
    int bins = 3;     // K quantile bins per metric, frozen after bootstrap
    int window = 50;  // evidence window W in rounds (0 = unbounded)
    learn::LearnConfig learn;
    double infer_tol = 1e-6;
    int max_sweeps = 100;
    double eps_g = 1e-9;
    double detect_threshold = 0.5;
    double preference_weight = 0.9;
    plan::CatalogConfig catalog;
    bool force_do_nothing = false;  // baseline comparator

    void validate() const {
        if (bins < 1) throw ConfigError("agent.bins: must be >= 1");
        if (window < 0) throw ConfigError("agent.window: must be >= 0");
        if (learn.ess <= 0.0) throw ConfigError("agent.ess: must be > 0");
        if (learn.max_parents < 0) throw ConfigError("agent.max_parents: must be >= 0");
        if (learn.restarts < 1) throw ConfigError("agent.restarts: must be >= 1");
        if (learn.eps < 0.0) throw ConfigError("agent.eps: must be >= 0");
        if (learn.lambda < 0.0) throw ConfigError("agent.lambda: must be >= 0");
        if (infer_tol <= 0.0) throw ConfigError("agent.tol: must be > 0");
        if (max_sweeps < 1) throw ConfigError("agent.max_sweeps: must be >= 1");
        if (eps_g < 0.0) throw ConfigError("agent.eps_g: must be >= 0");
        if (detect_threshold <= 0.0 || detect_threshold >= 1.0)
            throw ConfigError("agent.detect_threshold: must be in (0,1)");
        if (preference_weight <= 0.0 || preference_weight >= 1.0)
            throw ConfigError("agent.preference_weight: must be in (0,1)");
        if (catalog.suspect_threshold <= 0.0 || catalog.suspect_threshold >= 1.0)
            throw ConfigError("agent.catalog.suspect_threshold: must be in (0,1)");
        for (double rho : {catalog.rho_restart, catalog.rho_reassign, catalog.rho_reroute,
                           catalog.rho_reduce, catalog.rho_isolate, catalog.rho_escalate})
            if (rho < 0.0 || rho > 1.0) throw ConfigError("agent.catalog.rho: must be in [0,1]");
    }
};

struct AgentState {
    logpipe::ObservationSchema schema;
    logpipe::BinSpec bins;
    logpipe::FeatureMatrix evidence;
    std::optional<CausalFaultGraph> graph;  // previous round's fitted graph
    std::map<std::string, std::uint64_t> anchors;
    plan::NodeBeliefs beliefs;
    std::map<std::string, std::map<int, int>> node_evidence;  // clamped context per node
    plan::PlannerMemory memory;
    int round = 0;
    bool bootstrapped = false;
};

inline std::map<std::string, int> nominal_bins(const logpipe::BinSpec& bins) {
    std::map<std::string, int> out;
    for (const auto& m : bins.metrics) out[m.id] = m.nominal_bin;
    return out;
}

// Fit quantile bins on the bootstrap round and freeze the feature schema.
inline void bootstrap(AgentState& agent, const sim::ContinuumState& state,
                      const logpipe::ObservationSchema& schema, const AgentConfig& cfg) {
    agent.schema = schema;
    for (const auto& [id, node] : state.nodes) agent.anchors[id] = 0;
    auto delta = logpipe::collect_incremental(state, agent.anchors);
    agent.bins = logpipe::fit_bins(delta, schema, cfg.bins);
    agent.evidence = logpipe::normalize(delta, agent.bins);
    agent.anchors = logpipe::advance_anchors(agent.anchors, delta);
    for (const auto& key : agent.evidence.index)
        agent.memory.last_observation_round[key.node] = key.round;
    agent.round = delta.round;
    agent.bootstrapped = true;
}

struct RoundRecord {
    int round = 0;
    std::vector<Action> candidates;
    plan::EFEReport report;
    Action chosen;
    CausalFaultGraph graph;
    plan::NodeBeliefs beliefs;
    plan::NodeBeliefs post_beliefs;  // after applying the chosen intervention
    std::vector<std::pair<std::string, std::string>> detections;  // (node, fault var)
    std::vector<std::string> warnings;

    std::string decision_text() const {
        std::ostringstream os;
        os << "round " << round << "\n";
        for (const auto& e : report.entries)
            os << "candidate " << e.action_id << " risk " << fmt_double(e.risk) << " ambiguity "
               << fmt_double(e.ambiguity) << " total " << fmt_double(e.total) << "\n";
        os << "chosen " << chosen.id << "\n";
        for (const auto& [node, d] : detections) os << "detected " << node << " " << d << "\n";
        for (const auto& [node, belief] : post_beliefs) {
            for (std::size_t i = 0; i < belief.vars.size(); ++i) {
                os << "post " << node << " " << graph.var(belief.vars[i]).id;
                for (double x : belief.marginals[i]) os << " " << fmt_double(x);
                os << "\n";
            }
        }
        return os.str();
    }

    std::string belief_text() const {
        std::ostringstream os;
        for (const auto& [node, belief] : beliefs) {
            for (std::size_t i = 0; i < belief.vars.size(); ++i) {
                os << "belief " << node << " " << graph.var(belief.vars[i]).id;
                for (double x : belief.marginals[i]) os << " " << fmt_double(x);
                os << "\n";
            }
            os << "belief-summary " << node << " F " << fmt_double(belief.free_energy) << " sweeps "
               << belief.sweeps << " converged " << (belief.converged ? 1 : 0) << "\n";
        }
        return os.str();
    }
};

namespace detail {

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

}  // namespace detail

// One full perception-inference-action-update cycle. On any stage error the
// agent state is left untouched (anchors stay at the last checkpoint) and a
// StageError names the failing stage.
inline RoundRecord agent_round(AgentState& agent, sim::ContinuumState& state, const AgentConfig& cfg,
                               std::uint64_t seed) {
    if (!agent.bootstrapped) throw StageError("collect", "agent is not bootstrapped (bins not fitted)");
    AgentState next = agent;
    RoundRecord rec;
    const int round = state.round > 0 ? state.round - 1 : 0;
    rec.round = round;

    auto delta = detail::stage("collect", [&] { return logpipe::collect_incremental(state, next.anchors); });

    auto fresh = detail::stage("normalize",
                               [&] { return logpipe::normalize(delta, next.bins, &rec.warnings); });

    next.evidence =
        detail::stage("merge", [&] { return logpipe::merge_rounds(next.evidence, fresh, cfg.window); });

    detail::stage("learn", [&] {
        learn::LearnConfig lc = cfg.learn;
        lc.seed = derive_seed(seed, "learn", round);
        auto hc = learn::hill_climb(next.evidence, next.graph ? &*next.graph : nullptr, lc);
        next.graph = learn::fit_cpts(hc.graph, next.evidence, cfg.learn.ess);
        next.graph->set_round_label(round);
        return 0;
    });
    rec.graph = *next.graph;

    detail::stage("infer", [&] {
        for (int i = 0; i < fresh.num_rows(); ++i) {
            if (fresh.index[i].round != round) continue;
            const std::string& node = fresh.index[i].node;
            std::map<int, int> ev;
            for (int c = 0; c < fresh.num_cols(); ++c) {
                const auto& col = fresh.columns[c];
                if (col.kind == VarKind::FaultIndicator) continue;
                if (fresh.rows[i][c] == logpipe::kMissingValue) continue;
                ev[c] = fresh.rows[i][c];
            }
            next.node_evidence[node] = ev;
            infer::InferenceProblem problem;
            problem.graph = &*next.graph;
            problem.evidence = ev;
            for (int v = 0; v < next.graph->num_vars(); ++v)
                if (!ev.count(v)) problem.latents.push_back(v);
            infer::InferOptions opts;
            opts.tol = cfg.infer_tol;
            opts.max_sweeps = cfg.max_sweeps;
            next.beliefs[node] = infer::minimize_free_energy(problem, opts);

            next.memory.last_observation_round[node] = round;
            bool suspect = false;
            for (int v = 0; v < next.graph->num_vars(); ++v) {
                if (next.graph->var(v).kind != VarKind::FaultIndicator) continue;
                double q = plan::detail::belief_active(*next.graph, next.beliefs[node],
                                                       next.graph->var(v).id);
                if (q > cfg.catalog.suspect_threshold) suspect = true;
                if (q > cfg.detect_threshold) rec.detections.emplace_back(node, next.graph->var(v).id);
            }
            auto& streak = next.memory.suspect_streak[node];
            streak = suspect ? streak + 1 : 0;
            if (plan::detail::belief_active(*next.graph, next.beliefs[node], cfg.catalog.crash_var) <=
                cfg.catalog.suspect_threshold)
                next.memory.failed_restarts[node] = 0;
        }
        return 0;
    });
    rec.beliefs = next.beliefs;

    detail::stage("plan", [&] {
        rec.candidates = plan::enumerate_actions(state, *next.graph, next.beliefs, cfg.catalog,
                                                 next.memory, round);
        auto prefs = plan::make_default_preferences(*next.graph, nominal_bins(next.bins),
                                                    cfg.preference_weight);

        std::map<std::string, plan::EFEEntry> base;
        double base_total = 0.0, base_risk = 0.0, base_amb = 0.0;
        for (const auto& [node, belief] : next.beliefs) {
            base[node] = plan::score_predicted(*next.graph, belief, prefs, "do-nothing");
            base_total += base[node].total;
            base_risk += base[node].risk;
            base_amb += base[node].ambiguity;
        }
        for (const auto& a : rec.candidates) {
            plan::EFEEntry e;
            e.action_id = a.id;
            e.risk = base_risk;
            e.ambiguity = base_amb;
            auto bit = next.beliefs.find(a.target_node);
            if (a.type != ActionType::DoNothing && bit != next.beliefs.end()) {
                infer::InferenceProblem problem;
                problem.graph = &*next.graph;
                problem.evidence = next.node_evidence[a.target_node];
                for (int v = 0; v < next.graph->num_vars(); ++v)
                    if (!problem.evidence.count(v)) problem.latents.push_back(v);
                auto entry = plan::expected_free_energy(problem, a, bit->second, prefs);
                e.risk += entry.risk - base[a.target_node].risk;
                e.ambiguity += entry.ambiguity - base[a.target_node].ambiguity;
            }
            e.total = e.risk + e.ambiguity;
            rec.report.entries.push_back(e);
        }
        return 0;
    });

    detail::stage("select", [&] {
        if (cfg.force_do_nothing) {
            rec.chosen = rec.candidates.front();
        } else {
            rec.chosen = plan::select_action(rec.report, rec.candidates, cfg.eps_g);
        }
        rec.report.chosen_id = rec.chosen.id;
        return 0;
    });

    detail::stage("act", [&] {
        sim::apply_intervention(state, rec.chosen, seed);
        if (rec.chosen.type == ActionType::RestartNode)
            next.memory.failed_restarts[rec.chosen.target_node] += 1;
        if (rec.chosen.type == ActionType::EscalateHuman)
            next.memory.last_escalation_round[rec.chosen.target_node] = round;
        return 0;
    });

    detail::stage("update", [&] {
        rec.post_beliefs = next.beliefs;
        if (!rec.chosen.intervention.empty()) {
            auto bit = next.beliefs.find(rec.chosen.target_node);
            if (bit != next.beliefs.end()) {
                infer::InferenceProblem problem;
                problem.graph = &*next.graph;
                problem.evidence = next.node_evidence[rec.chosen.target_node];
                for (int v = 0; v < next.graph->num_vars(); ++v)
                    if (!problem.evidence.count(v)) problem.latents.push_back(v);
                rec.post_beliefs[rec.chosen.target_node] =
                    plan::predict_beliefs(problem, bit->second, rec.chosen);
            }
        }
        next.anchors = logpipe::advance_anchors(next.anchors, delta);
        next.round = round;
        return 0;
    });

    agent = std::move(next);
    return rec;
}

}  // namespace crag::agent
