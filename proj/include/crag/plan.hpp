#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "crag/action.hpp"
#include "crag/infer.hpp"
#include "crag/sim.hpp"

namespace crag::plan {

// Preferred distribution P*(x_j) over each context variable's bins. Strictly
// positive by construction so the risk KL stays finite.
struct PreferenceModel {
    std::map<int, std::vector<double>> preferred;  // context var index -> distribution

    void validate(const CausalFaultGraph& g) const {
        for (const auto& [v, dist] : preferred) {
            if (static_cast<int>(dist.size()) != g.var(v).arity)
                throw ConfigError("preferences: wrong arity for '" + g.var(v).id + "'");
            double s = 0.0;
            for (double x : dist) {
                if (x <= 0.0)
                    throw ConfigError("preferences: '" + g.var(v).id + "' must be strictly positive");
                s += x;
            }
            if (std::abs(s - 1.0) > 1e-12)
                throw ConfigError("preferences: '" + g.var(v).id + "' does not sum to 1");
        }
    }
};

// Default P*: `weight` on the nominal bin, remainder uniform. Fault
// indicators are latent state, not preferred outcomes, so they get no entry.
inline PreferenceModel make_default_preferences(const CausalFaultGraph& g,
                                                const std::map<std::string, int>& nominal_bins,
                                                double weight = 0.9) {
    PreferenceModel prefs;
    for (int v = 0; v < g.num_vars(); ++v) {
        if (g.var(v).kind == VarKind::FaultIndicator) continue;
        int r = g.var(v).arity;
        std::vector<double> dist(r, 0.0);
        if (r == 1) {
            dist[0] = 1.0;
        } else {
            int nominal = 0;
            if (auto it = nominal_bins.find(g.var(v).id); it != nominal_bins.end()) nominal = it->second;
            if (nominal < 0 || nominal >= r) nominal = 0;
            for (int k = 0; k < r; ++k) dist[k] = (1.0 - weight) / (r - 1);
            dist[nominal] = weight;
        }
        prefs.preferred[v] = std::move(dist);
    }
    prefs.validate(g);
    return prefs;
}

// Do-semantics prediction of the post-action belief. Each intervened fault f
// gets Q(f=active|a) = (1-rho) * Q(f=active) with its incoming edges cut;
// the remaining latents take one clamped mean-field pass with the intervened
// marginals frozen. An empty intervention map returns the belief unchanged.
inline infer::Belief predict_beliefs(const infer::InferenceProblem& p, const infer::Belief& belief,
                                     const Action& action) {
    if (action.intervention.empty()) return belief;
    const auto& g = *p.graph;
    infer::Belief out = belief;

    std::set<int> intervened;
    for (const auto& [var_id, rho] : action.intervention) {
        int v = g.index_of(var_id);
        if (g.var(v).arity != 2)
            throw std::invalid_argument("predict_beliefs: intervention on non-binary '" + var_id + "'");
        int slot = out.slot_of(v);
        double active = (1.0 - rho) * out.marginals[slot][1];
        out.marginals[slot] = {1.0 - active, active};
        intervened.insert(v);
    }

    auto fams = infer::detail::families_of(g);
    for (int v : g.topo_order()) {
        if (p.evidence.count(v) || intervened.count(v)) continue;
        auto vit = std::lower_bound(out.vars.begin(), out.vars.end(), v);
        if (vit == out.vars.end() || *vit != v) continue;
        int r = g.var(v).arity;
        std::vector<double> score(r, 0.0);
        for (const auto& fam : fams) {
            if (intervened.count(fam.child)) continue;  // cut edges into intervened vars
            if (std::find(fam.members.begin(), fam.members.end(), v) == fam.members.end()) continue;
            for (int k = 0; k < r; ++k) {
                if (!std::isfinite(score[k])) continue;
                score[k] += infer::detail::expected_log_family(g, fam, p.evidence, out, v, k, nullptr);
            }
        }
        double lz = logsumexp(score);
        if (!std::isfinite(lz))
            throw ModelMisfitError("predict_beliefs: no value of '" + g.var(v).id +
                                   "' is consistent with the intervention");
        int slot = static_cast<int>(vit - out.vars.begin());
        double sum = 0.0;
        std::vector<double> fresh(r);
        for (int k = 0; k < r; ++k) {
            fresh[k] = std::exp(score[k] - lz);
            sum += fresh[k];
        }
        for (int k = 0; k < r; ++k) fresh[k] /= sum;
        out.marginals[slot] = std::move(fresh);
    }
    out.converged = true;
    return out;
}

namespace detail {

// Predicted marginal of every variable under the belief: latents use their
// (possibly intervened) marginals, context variables are pushed forward
// generatively in topological order.
inline std::vector<std::vector<double>> forward_marginals(const CausalFaultGraph& g,
                                                          const infer::Belief& belief) {
    std::vector<std::vector<double>> marg(g.num_vars());
    for (int v : g.topo_order()) {
        auto it = std::lower_bound(belief.vars.begin(), belief.vars.end(), v);
        if (it != belief.vars.end() && *it == v) {
            marg[v] = belief.marginals[it - belief.vars.begin()];
            continue;
        }
        if (g.var(v).kind == VarKind::FaultIndicator)
            throw std::invalid_argument("predictive_features: fault '" + g.var(v).id + "' not in belief");
        int r = g.var(v).arity;
        std::vector<double> m(r, 0.0);
        const auto& parents = g.parents(v);
        std::vector<int> idx(parents.size(), 0);
        std::vector<int> assignment(g.num_vars(), -1);
        while (true) {
            double w = 1.0;
            for (std::size_t i = 0; i < parents.size(); ++i) {
                assignment[parents[i]] = idx[i];
                w *= marg[parents[i]][idx[i]];
            }
            if (w > 0.0) {
                auto row = g.cpt_row(v, g.parent_config_index(v, assignment));
                for (int k = 0; k < r; ++k) m[k] += w * row[k];
            }
            std::size_t k = 0;
            for (; k < parents.size(); ++k) {
                if (++idx[k] < g.var(parents[k]).arity) break;
                idx[k] = 0;
            }
            if (k == parents.size()) break;
        }
        marg[v] = std::move(m);
    }
    return marg;
}

inline double kl_divergence(const std::vector<double>& q, const std::vector<double>& p) {
    double kl = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k)
        if (q[k] > 0.0) kl += q[k] * std::log(q[k] / p[k]);
    return kl;
}

inline double entropy(std::span<const double> p) {
    double h = 0.0;
    for (double x : p)
        if (x > 0.0) h -= x * std::log(x);
    return h;
}

}  // namespace detail

// Per-context-variable predictive marginals Q(x_j | a), computed from the
// CPTs weighted by the mean-field product over each variable's parents.
inline std::map<int, std::vector<double>> predictive_features(const CausalFaultGraph& g,
                                                              const infer::Belief& predicted) {
    auto marg = detail::forward_marginals(g, predicted);
    std::map<int, std::vector<double>> out;
    for (int v = 0; v < g.num_vars(); ++v)
        if (g.var(v).kind != VarKind::FaultIndicator) out[v] = marg[v];
    return out;
}

struct EFEEntry {
    std::string action_id;
    double risk = 0.0;       // sum of KL(Q(x_j|a) || P*(x_j))
    double ambiguity = 0.0;  // sum of expected CPT-row entropies
    double total = 0.0;
};

struct EFEReport {
    std::vector<EFEEntry> entries;
    std::string chosen_id;

    const EFEEntry* find(const std::string& id) const {
        for (const auto& e : entries)
            if (e.action_id == id) return &e;
        return nullptr;
    }
};

// Risk + ambiguity of one predicted belief, factorized across context
// variables; natural-log units.
inline EFEEntry score_predicted(const CausalFaultGraph& g, const infer::Belief& predicted,
                                const PreferenceModel& prefs, const std::string& action_id) {
    auto marg = detail::forward_marginals(g, predicted);
    EFEEntry e;
    e.action_id = action_id;
    for (int v = 0; v < g.num_vars(); ++v) {
        if (g.var(v).kind == VarKind::FaultIndicator) continue;
        auto pit = prefs.preferred.find(v);
        if (pit == prefs.preferred.end())
            throw ConfigError("preferences: missing distribution for '" + g.var(v).id + "'");
        e.risk += detail::kl_divergence(marg[v], pit->second);

        const auto& parents = g.parents(v);
        std::vector<int> idx(parents.size(), 0);
        std::vector<int> assignment(g.num_vars(), -1);
        while (true) {
            double w = 1.0;
            for (std::size_t i = 0; i < parents.size(); ++i) {
                assignment[parents[i]] = idx[i];
                w *= marg[parents[i]][idx[i]];
            }
            if (w > 0.0)
                e.ambiguity += w * detail::entropy(g.cpt_row(v, g.parent_config_index(v, assignment)));
            std::size_t k = 0;
            for (; k < parents.size(); ++k) {
                if (++idx[k] < g.var(parents[k]).arity) break;
                idx[k] = 0;
            }
            if (k == parents.size()) break;
        }
    }
    e.total = e.risk + e.ambiguity;
    return e;
}

// G(a) for one action against one belief.
inline EFEEntry expected_free_energy(const infer::InferenceProblem& p, const Action& action,
                                     const infer::Belief& belief, const PreferenceModel& prefs) {
    infer::Belief predicted = predict_beliefs(p, belief, action);
    return score_predicted(*p.graph, predicted, prefs, action.id);
}

// Argmin over the report; ties within eps_g go to do-nothing, then to the
// lexicographically smallest action id. The do-nothing entry must exist.
inline const Action& select_action(const EFEReport& report, const std::vector<Action>& actions,
                                   double eps_g = 1e-9) {
    if (report.entries.empty())
        throw std::invalid_argument("select_action: empty report (do-nothing must always be scored)");
    const EFEEntry* baseline = report.find("do-nothing");
    if (!baseline)
        throw std::invalid_argument("select_action: report is missing the do-nothing baseline");

    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : report.entries) best = std::min(best, e.total);

    std::string chosen;
    if (baseline->total <= best + eps_g) {
        chosen = "do-nothing";
    } else {
        for (const auto& e : report.entries)
            if (e.total <= best + eps_g && (chosen.empty() || e.action_id < chosen)) chosen = e.action_id;
    }
    for (const auto& a : actions)
        if (a.id == chosen) return a;
    throw std::invalid_argument("select_action: chosen action '" + chosen + "' not in candidate list");
}

// Which fault variables trigger which action types, and how effective each
// action type is assumed to be. Scenario-level policy, not code.
struct CatalogConfig {
    double suspect_threshold = 0.2;
    double rho_restart = 0.9;
    double rho_reassign = 0.9;
    double rho_reroute = 0.9;
    double rho_reduce = 0.9;
    double rho_isolate = 0.5;  // containment, not repair
    double rho_escalate = 0.9;
    int max_restart_attempts = 2;
    bool isolate_needs_failed_restart = false;
    int escalate_after = 3;  // consecutive suspect rounds before escalation is offered
    std::string crash_var = "node-crash";
    std::string taskfail_var = "task-fail";
    std::string comm_var = "comm-error";
    std::string resource_var = "resource-denied";
};

// Cross-round planner bookkeeping the catalog rules depend on.
struct PlannerMemory {
    std::map<std::string, int> failed_restarts;        // node -> consecutive failed restarts
    std::map<std::string, int> suspect_streak;         // node -> consecutive suspect rounds
    std::map<std::string, int> last_escalation_round;  // node -> round of last escalate
    std::map<std::string, int> last_observation_round; // node -> last round with a fresh row
};

using NodeBeliefs = std::map<std::string, infer::Belief>;

namespace detail {

inline double belief_active(const CausalFaultGraph& g, const infer::Belief& b, const std::string& var) {
    if (!g.has_variable(var)) return 0.0;
    int v = g.index_of(var);
    auto it = std::lower_bound(b.vars.begin(), b.vars.end(), v);
    if (it == b.vars.end() || *it != v) return 0.0;
    return b.marginals[it - b.vars.begin()][1];
}

}  // namespace detail

// Candidate healing actions: always do-nothing, plus one targeted action per
// (suspect node, applicable type). Deterministic order: do-nothing first,
// then ascending action id.
inline std::vector<Action> enumerate_actions(const sim::ContinuumState& state, const CausalFaultGraph& g,
                                             const NodeBeliefs& beliefs, const CatalogConfig& cat,
                                             const PlannerMemory& memory, int round) {
    std::vector<Action> out;
    out.push_back(make_do_nothing());

    auto memory_get = [](const std::map<std::string, int>& m, const std::string& k, int dflt) {
        auto it = m.find(k);
        return it == m.end() ? dflt : it->second;
    };

    for (const auto& [node_id, belief] : beliefs) {
        const auto& node = state.nodes.at(node_id);
        double q_crash = detail::belief_active(g, belief, cat.crash_var);
        double q_taskfail = detail::belief_active(g, belief, cat.taskfail_var);
        double q_comm = detail::belief_active(g, belief, cat.comm_var);
        double q_resource = detail::belief_active(g, belief, cat.resource_var);
        int failed = memory_get(memory.failed_restarts, node_id, 0);

        if (q_crash > cat.suspect_threshold && !node.isolated) {
            if (failed < cat.max_restart_attempts) {
                Action a;
                a.type = ActionType::RestartNode;
                a.target_node = node_id;
                a.id = "restart-node:" + node_id;
                a.rho = cat.rho_restart;
                a.intervention[cat.crash_var] = cat.rho_restart;
                out.push_back(std::move(a));
            }
            if (!cat.isolate_needs_failed_restart || failed >= 1) {
                Action a;
                a.type = ActionType::IsolateNode;
                a.target_node = node_id;
                a.id = "isolate-node:" + node_id;
                a.rho = cat.rho_isolate;
                a.intervention[cat.crash_var] = cat.rho_isolate;
                out.push_back(std::move(a));
            }
        }

        if (q_comm > cat.suspect_threshold) {
            for (const auto& link : state.links) {
                if (link.first != node_id && link.second != node_id) continue;
                Action a;
                a.type = ActionType::RerouteLink;
                a.target_node = node_id;
                a.target_link = link;
                a.id = "reroute-link:" + link.first + "-" + link.second;
                a.rho = cat.rho_reroute;
                a.intervention[cat.comm_var] = cat.rho_reroute;
                out.push_back(std::move(a));
                break;  // one reroute candidate per suspect node
            }
        }

        if (q_resource > cat.suspect_threshold && !node.isolated) {
            Action a;
            a.type = ActionType::ReduceLoad;
            a.target_node = node_id;
            a.id = "reduce-load:" + node_id;
            a.rho = cat.rho_reduce;
            a.intervention[cat.resource_var] = cat.rho_reduce;
            out.push_back(std::move(a));
        }

        if (q_taskfail > cat.suspect_threshold || node.isolated) {
            for (const auto& [task_id, task] : state.tasks) {
                if (task.host != node_id) continue;
                std::string dest;
                double dest_free = -1.0;
                for (const auto& [cand_id, cand] : state.nodes) {
                    if (cand_id == node_id || cand.isolated || cand.spec.tier == sim::Tier::Sensor) continue;
                    double free = sim::free_capacity(state, cand_id);
                    if (free < task.spec.workload) continue;
                    if (free > dest_free) {
                        dest = cand_id;
                        dest_free = free;
                    }
                }
                if (dest.empty()) continue;
                Action a;
                a.type = ActionType::ReassignTask;
                a.target_node = node_id;
                a.target_task = task_id;
                a.reassign_to = dest;
                a.id = "reassign-task:" + task_id + ":" + node_id + "->" + dest;
                a.rho = cat.rho_reassign;
                a.intervention[cat.taskfail_var] = cat.rho_reassign;
                out.push_back(std::move(a));
            }
        }

        bool suspect = q_crash > cat.suspect_threshold || q_taskfail > cat.suspect_threshold ||
                       q_comm > cat.suspect_threshold || q_resource > cat.suspect_threshold;
        bool repairs_left = q_crash > cat.suspect_threshold && failed < cat.max_restart_attempts;
        if (suspect && !repairs_left &&
            memory_get(memory.suspect_streak, node_id, 0) >= cat.escalate_after &&
            memory_get(memory.last_escalation_round, node_id, -1) <
                memory_get(memory.last_observation_round, node_id, -1)) {
            Action a;
            a.type = ActionType::EscalateHuman;
            a.target_node = node_id;
            a.id = "escalate-human:" + node_id;
            a.rho = cat.rho_escalate;
            if (q_crash > cat.suspect_threshold) a.intervention[cat.crash_var] = cat.rho_escalate;
            if (q_taskfail > cat.suspect_threshold) a.intervention[cat.taskfail_var] = cat.rho_escalate;
            if (q_comm > cat.suspect_threshold) a.intervention[cat.comm_var] = cat.rho_escalate;
            if (q_resource > cat.suspect_threshold) a.intervention[cat.resource_var] = cat.rho_escalate;
            out.push_back(std::move(a));
        }
    }

    std::sort(out.begin() + 1, out.end(), [](const Action& a, const Action& b) { return a.id < b.id; });
    (void)round;
    return out;
}

}  // namespace crag::plan
