#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "crag/action.hpp"
#include "crag/scenario.hpp"

namespace crag::sim {

// Event types that are task lifecycle or agent bookkeeping, not fault
// indicators; the log pipeline skips them when filling indicator columns.
inline const std::set<std::string>& lifecycle_events() {
    static const std::set<std::string> kEvents = {
        "metrics",  "task-start", "task-complete", "deadline-missed", "checkpoint",
        "restart",  "isolate",    "reassign",      "reroute",         "reduce-load",
        "escalate",
    };
    return kEvents;
}

struct LogEntry {
    std::string node;
    std::uint64_t ts = 0;  // strictly increasing per node
    int round = 0;
    std::string event_type;
    std::string severity;
    std::map<std::string, double> metrics;
    std::string detail;
    std::uint64_t event_id = 0;  // per-node sequence, for dedup

    // Fixed field order; metrics sorted by key. One line per entry.
    std::string to_line() const {
        std::ostringstream os;
        os << node << "\t" << ts << "\t" << round << "\t" << event_type << "\t" << severity << "\t";
        bool first = true;
        for (const auto& [k, v] : metrics) {
            if (!first) os << ";";
            os << k << "=" << fmt_double(v);
            first = false;
        }
        if (metrics.empty()) os << "-";
        os << "\t" << (detail.empty() ? "-" : detail) << "\t" << event_id;
        return os.str();
    }
};

// Per-task recovery anchor: state token s, completed-subtask count D, and a
// parameter digest; restoring resumes at subtask D+1.
struct Checkpoint {
    std::string state_token;
    int completed = 0;
    std::string params_digest;
    int round = -1;  // analysis round of the last write; -1 = never written
};

enum class Phase { Init, Compute, Complete };  // alpha, beta, gamma

inline std::string to_string(Phase p) {
    switch (p) {
        case Phase::Init: return "alpha";
        case Phase::Compute: return "beta";
        case Phase::Complete: return "gamma";
    }
    return "?";
}

struct TaskState {
    TaskSpec spec;
    std::string host;
    Phase phase = Phase::Init;
    int completed_subtasks = 0;
    int rounds_elapsed = 0;  // rounds consumed by the current attempt
    int attempt = 0;
    bool missed_marked = false;
    Checkpoint checkpoint;
    int attempts_hit = 0;
    int attempts_missed = 0;
};

struct NodeState {
    NodeSpec spec;
    bool isolated = false;
    bool crashed = false;
    std::vector<LogEntry> log;
    std::uint64_t next_ts = 1;
    std::uint64_t next_event_id = 0;
};

struct ContinuumState {
    ScenarioConfig scenario;
    std::map<std::string, NodeState> nodes;
    std::vector<std::pair<std::string, std::string>> links;
    std::vector<std::pair<std::string, std::string>> backup_pool;
    std::map<std::string, TaskState> tasks;
    std::vector<Hazard> overrides;  // installed at runtime (e.g. crash persistence)
    std::vector<std::string> escalations;
    int round = 0;  // next round to execute
};

struct RoundTrace {
    int round = 0;
    std::vector<std::pair<std::string, std::string>> injected;  // (node, fault var), sorted
    std::vector<std::string> advanced;                          // task ids that progressed
    std::vector<std::string> completions;                       // "task:attempt:rounds:hit"
    std::vector<std::string> misses;                            // task ids marked deadline-missed
    int checkpoints_written = 0;
    int entries_added = 0;

    std::string to_text() const {
        std::ostringstream os;
        os << "round " << round << "\n";
        for (const auto& [n, v] : injected) os << "injected " << n << " " << v << "\n";
        for (const auto& t : advanced) os << "advanced " << t << "\n";
        for (const auto& c : completions) os << "completed " << c << "\n";
        for (const auto& m : misses) os << "missed " << m << "\n";
        os << "checkpoints " << checkpoints_written << "\n";
        os << "entries " << entries_added << "\n";
        return os.str();
    }
};

namespace detail {

inline void append_entry(ContinuumState& state, NodeState& node, int round, std::string event_type,
                         std::string severity, std::map<std::string, double> metrics, std::string detail,
                         RoundTrace* trace) {
    LogEntry e;
    e.node = node.spec.id;
    e.ts = node.next_ts++;
    e.round = round;
    e.event_type = std::move(event_type);
    e.severity = std::move(severity);
    e.metrics = std::move(metrics);
    e.detail = std::move(detail);
    e.event_id = node.next_event_id++;
    node.log.push_back(std::move(e));
    if (trace) ++trace->entries_added;
    (void)state;
}

inline bool hazard_active(const Hazard& h, const std::string& node_id, int round) {
    if (!h.node.empty() && h.node != node_id) return false;
    if (round < h.from_round) return false;
    if (h.to_round >= 0 && round > h.to_round) return false;
    return true;
}

}  // namespace detail

inline double used_capacity(const ContinuumState& state, const std::string& node_id) {
    double used = 0.0;
    for (const auto& [id, t] : state.tasks)
        if (t.host == node_id) used += t.spec.workload;
    return used;
}

inline double free_capacity(const ContinuumState& state, const std::string& node_id) {
    return state.nodes.at(node_id).spec.capacity - used_capacity(state, node_id);
}

inline ContinuumState build_continuum(const ScenarioConfig& scenario) {
    ContinuumState s;
    s.scenario = scenario;
    for (const auto& n : scenario.nodes) {
        NodeState ns;
        ns.spec = n;
        s.nodes.emplace(n.id, std::move(ns));
    }
    s.links = scenario.links;
    s.backup_pool = scenario.backup_links;
    for (const auto& t : scenario.tasks) {
        if (s.nodes.at(t.host).spec.tier == Tier::Sensor)
            throw ConfigError("tasks[].host: sensor node '" + t.host + "' cannot host task '" + t.id + "'");
        TaskState ts;
        ts.spec = t;
        ts.host = t.host;
        s.tasks.emplace(t.id, std::move(ts));
    }
    s.round = 0;
    return s;
}

// Advance the continuum one round: sample the hidden truth net per node,
// emit metric and fault-event log entries, advance every runnable task by at
// most one phase/subtask, and write checkpoints on progress.
inline RoundTrace step_round(ContinuumState& state, const CausalFaultGraph& truth, std::uint64_t seed) {
    const int r = state.round;
    RoundTrace trace;
    trace.round = r;

    // Indicator activity per node this round, used for task blocking below.
    std::map<std::string, std::set<std::string>> active_faults;

    for (auto& [node_id, node] : state.nodes) {
        if (node.isolated) continue;
        Rng rng(derive_seed(seed, "node", node_id));

        std::map<int, std::vector<double>> forced;
        auto apply_hazards = [&](const std::vector<Hazard>& hs) {
            for (const auto& h : hs) {
                if (!detail::hazard_active(h, node_id, r)) continue;
                int v = truth.index_of(h.variable);
                if (h.bin < 0) {
                    forced[v] = {1.0 - h.p, h.p};
                } else {
                    int arity = truth.var(v).arity;
                    std::vector<double> dist(arity, arity > 1 ? (1.0 - h.p) / (arity - 1) : 0.0);
                    dist[h.bin] = arity > 1 ? h.p : 1.0;
                    forced[v] = std::move(dist);
                }
            }
        };
        apply_hazards(state.scenario.hazards);
        apply_hazards(state.overrides);

        std::vector<int> assignment = truth.sample(rng, forced);

        std::map<std::string, double> metric_values;
        for (const auto& m : state.scenario.metrics) {
            int bin = assignment[truth.index_of(m.id)];
            auto [lo, hi] = m.ranges[bin];
            metric_values[m.id] = rng.uniform(lo, hi);
        }
        detail::append_entry(state, node, r, "metrics", "info", std::move(metric_values), "", &trace);

        for (const auto& ind : state.scenario.indicators) {
            int v = truth.index_of(ind.id);
            if (assignment[v] != 1) continue;
            detail::append_entry(state, node, r, ind.id, ind.severity, {}, "", &trace);
            trace.injected.emplace_back(node_id, ind.id);
            active_faults[node_id].insert(ind.id);
            if (ind.id == "node-crash" && !node.crashed) {
                node.crashed = true;
                Hazard persist;
                persist.variable = "node-crash";
                persist.node = node_id;
                persist.p = 1.0;
                persist.from_round = r + 1;
                persist.to_round = -1;
                persist.healed_by = "restart-node";
                state.overrides.push_back(persist);
            }
        }
    }

    for (auto& [task_id, task] : state.tasks) {
        auto& host = state.nodes.at(task.host);
        task.rounds_elapsed += 1;

        const auto& faults = active_faults[task.host];
        bool blocked = host.isolated || host.crashed || faults.count("task-fail") ||
                       faults.count("user-abort") || faults.count("resource-denied");
        if (!blocked) {
            switch (task.phase) {
                case Phase::Init:
                    detail::append_entry(state, host, r, "task-start", "info", {},
                                         "task=" + task_id + " attempt=" + std::to_string(task.attempt),
                                         &trace);
                    task.phase = Phase::Compute;
                    trace.advanced.push_back(task_id);
                    break;
                case Phase::Compute: {
                    task.completed_subtasks += 1;
                    task.checkpoint.state_token = task_id + "@r" + std::to_string(r);
                    task.checkpoint.completed = task.completed_subtasks;
                    task.checkpoint.params_digest =
                        "theta-" + std::to_string(derive_seed(seed, "digest", task_id, r) & 0xffffffu);
                    task.checkpoint.round = r;
                    ++trace.checkpoints_written;
                    detail::append_entry(state, host, r, "checkpoint", "info", {},
                                         "task=" + task_id + " completed=" +
                                             std::to_string(task.completed_subtasks),
                                         &trace);
                    if (task.completed_subtasks == static_cast<int>(task.spec.subtasks.size()))
                        task.phase = Phase::Complete;
                    trace.advanced.push_back(task_id);
                    break;
                }
                case Phase::Complete: {
                    bool hit = task.rounds_elapsed <= task.spec.deadline;
                    if (hit)
                        task.attempts_hit += 1;
                    detail::append_entry(state, host, r, "task-complete", "info", {},
                                         "task=" + task_id + " attempt=" + std::to_string(task.attempt) +
                                             " rounds=" + std::to_string(task.rounds_elapsed) +
                                             " deadline=" + std::to_string(task.spec.deadline) +
                                             " hit=" + (hit ? std::string("1") : std::string("0")),
                                         &trace);
                    trace.completions.push_back(task_id + ":" + std::to_string(task.attempt) + ":" +
                                                std::to_string(task.rounds_elapsed) + ":" + (hit ? "1" : "0"));
                    task.phase = Phase::Init;
                    task.completed_subtasks = 0;
                    task.rounds_elapsed = 0;
                    task.attempt += 1;
                    task.missed_marked = false;
                    trace.advanced.push_back(task_id);
                    break;
                }
            }
        }

        if (!task.missed_marked && task.rounds_elapsed > task.spec.deadline) {
            task.missed_marked = true;
            task.attempts_missed += 1;
            trace.misses.push_back(task_id);
            if (!host.isolated)
                detail::append_entry(state, host, r, "deadline-missed", "warn", {},
                                     "task=" + task_id + " attempt=" + std::to_string(task.attempt) +
                                         " deadline=" + std::to_string(task.spec.deadline),
                                     &trace);
        }
    }

    state.round = r + 1;
    return trace;
}

// Execute one healing action against the continuum. Restart clears crash
// state with probability rho; isolate is permanent; reassign resumes from the
// task checkpoint; reroute swaps in a backup link; escalate only records a
// terminal event.
inline void apply_intervention(ContinuumState& state, const Action& action, std::uint64_t seed) {
    const int r = state.round;
    Rng rng(derive_seed(seed, "action", action.id));

    auto clear_healed = [&](std::initializer_list<std::string> node_ids, const std::string& action_type) {
        bool success = rng.bernoulli(action.rho);
        if (!success) return false;
        auto matches = [&](const Hazard& h) {
            if (h.healed_by != action_type) return false;
            for (const auto& id : node_ids)
                if (h.node == id) return true;
            return false;
        };
        std::vector<Hazard> kept;
        for (const auto& h : state.overrides)
            if (!matches(h)) kept.push_back(h);
        state.overrides = std::move(kept);
        // Scenario hazards can also be declared healable.
        for (auto& h : state.scenario.hazards)
            if (matches(h)) h.to_round = r - 1;
        return true;
    };

    switch (action.type) {
        case ActionType::DoNothing:
            return;
        case ActionType::RestartNode: {
            auto it = state.nodes.find(action.target_node);
            if (it == state.nodes.end())
                throw std::invalid_argument("restart-node: unknown node '" + action.target_node + "'");
            auto& node = it->second;
            if (node.isolated) return;
            bool success = clear_healed({action.target_node}, "restart-node");
            if (success) node.crashed = false;
            detail::append_entry(state, node, r, "restart", "info", {},
                                 std::string("success=") + (success ? "1" : "0"), nullptr);
            return;
        }
        case ActionType::IsolateNode: {
            auto it = state.nodes.find(action.target_node);
            if (it == state.nodes.end())
                throw std::invalid_argument("isolate-node: unknown node '" + action.target_node + "'");
            auto& node = it->second;
            if (node.isolated) return;
            detail::append_entry(state, node, r, "isolate", "warn", {}, "", nullptr);
            node.isolated = true;
            return;
        }
        case ActionType::ReassignTask: {
            auto tit = state.tasks.find(action.target_task);
            if (tit == state.tasks.end())
                throw std::invalid_argument("reassign-task: unknown task '" + action.target_task + "'");
            auto nit = state.nodes.find(action.reassign_to);
            if (nit == state.nodes.end())
                throw std::invalid_argument("reassign-task: unknown node '" + action.reassign_to + "'");
            auto& task = tit->second;
            auto& dest = nit->second;
            if (dest.spec.id == task.host) return;

            auto log_denied = [&](const std::string& why) {
                NodeState* sink = nullptr;
                auto& cur = state.nodes.at(task.host);
                if (!cur.isolated)
                    sink = &cur;
                else if (!dest.isolated)
                    sink = &dest;
                if (sink)
                    detail::append_entry(state, *sink, r, "resource-denied", "error", {},
                                         "task=" + task.spec.id + " to=" + dest.spec.id + " why=" + why,
                                         nullptr);
            };
            if (dest.isolated) {
                log_denied("isolated");
                return;
            }
            if (dest.spec.tier == Tier::Sensor) {
                log_denied("sensor");
                return;
            }
            if (free_capacity(state, dest.spec.id) < task.spec.workload) {
                log_denied("capacity");
                return;
            }
            std::string from = task.host;
            task.host = dest.spec.id;
            task.completed_subtasks = task.checkpoint.round >= 0 ? task.checkpoint.completed : 0;
            if (task.completed_subtasks >= static_cast<int>(task.spec.subtasks.size()))
                task.phase = Phase::Complete;
            else
                task.phase = task.completed_subtasks > 0 ? Phase::Compute : Phase::Init;
            detail::append_entry(state, dest, r, "reassign", "info", {},
                                 "task=" + task.spec.id + " from=" + from + " resume_at=" +
                                     std::to_string(task.completed_subtasks + 1),
                                 nullptr);
            return;
        }
        case ActionType::RerouteLink: {
            auto [a, b] = action.target_link;
            auto match = [&](const std::pair<std::string, std::string>& l) {
                return (l.first == a && l.second == b) || (l.first == b && l.second == a);
            };
            auto lit = std::find_if(state.links.begin(), state.links.end(), match);
            if (lit == state.links.end())
                throw std::invalid_argument("reroute-link: unknown link '" + a + "-" + b + "'");
            std::string swapped = "none";
            for (auto bit = state.backup_pool.begin(); bit != state.backup_pool.end(); ++bit) {
                if (std::find(state.links.begin(), state.links.end(), *bit) != state.links.end()) continue;
                swapped = bit->first + "-" + bit->second;
                *lit = *bit;
                state.backup_pool.erase(bit);
                break;
            }
            clear_healed({a, b}, "reroute-link");
            auto& na = state.nodes.at(a);
            auto& nb = state.nodes.at(b);
            auto& sink = !na.isolated ? na : nb;
            if (!sink.isolated)
                detail::append_entry(state, sink, r, "reroute", "info", {},
                                     "link=" + a + "-" + b + " swapped=" + swapped, nullptr);
            return;
        }
        case ActionType::ReduceLoad: {
            auto it = state.nodes.find(action.target_node);
            if (it == state.nodes.end())
                throw std::invalid_argument("reduce-load: unknown node '" + action.target_node + "'");
            if (it->second.isolated) return;
            clear_healed({action.target_node}, "reduce-load");
            detail::append_entry(state, it->second, r, "reduce-load", "info", {}, "", nullptr);
            return;
        }
        case ActionType::EscalateHuman: {
            auto it = state.nodes.find(action.target_node);
            if (it == state.nodes.end())
                throw std::invalid_argument("escalate-human: unknown node '" + action.target_node + "'");
            state.escalations.push_back(action.target_node + "@r" + std::to_string(r));
            if (!it->second.isolated)
                detail::append_entry(state, it->second, r, "escalate", "critical", {}, "terminal", nullptr);
            return;
        }
    }
}

// Line-delimited export of every node's log, node ids sorted, fixed field
// order; used by golden tests and the artifact tree.
inline std::string export_logs(const ContinuumState& state) {
    std::ostringstream os;
    for (const auto& [id, node] : state.nodes)
        for (const auto& e : node.log) os << e.to_line() << "\n";
    return os.str();
}

}  // namespace crag::sim
