#pragma once

#include <map>
#include <string>
#include <utility>

namespace crag {

enum class ActionType {
    DoNothing,
    RestartNode,
    ReassignTask,
    RerouteLink,
    ReduceLoad,
    IsolateNode,
    EscalateHuman,
};

inline std::string to_string(ActionType t) {
    switch (t) {
        case ActionType::DoNothing: return "do-nothing";
        case ActionType::RestartNode: return "restart-node";
        case ActionType::ReassignTask: return "reassign-task";
        case ActionType::RerouteLink: return "reroute-link";
        case ActionType::ReduceLoad: return "reduce-load";
        case ActionType::IsolateNode: return "isolate-node";
        case ActionType::EscalateHuman: return "escalate-human";
    }
    return "?";
}

// A healing action. `intervention` maps fault-variable ids to the probability
// that the action forces them inactive (do-calculus with effectiveness rho);
// do-nothing carries an empty map. `rho` is the execution success probability
// used by the simulator.
struct Action {
    std::string id;  // stable, e.g. "restart-node:edge0"
    ActionType type = ActionType::DoNothing;
    std::string target_node;
    std::string target_task;
    std::pair<std::string, std::string> target_link;
    std::string reassign_to;
    std::map<std::string, double> intervention;
    double rho = 0.9;
};

inline Action make_do_nothing() {
    Action a;
    a.id = "do-nothing";
    a.type = ActionType::DoNothing;
    a.rho = 0.0;
    return a;
}

}  // namespace crag
