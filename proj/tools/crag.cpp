// Scenario runner, report, and replay verification for the resilience agent.
//
// Exit codes: 0 ok, 1 config error, 2 runtime error, 3 replay divergence.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "crag/experiment.hpp"

namespace {

nlohmann::json summary_json(const crag::harness::MetricsSummary& m) {
    nlohmann::json j;
    j["rounds"] = m.rounds;
    j["deadline_hits"] = m.deadline_hits;
    j["deadline_misses"] = m.deadline_misses;
    j["deadline_hit_rate"] = m.deadline_hit_rate;
    if (m.mttr_defined) j["mean_time_to_recovery"] = m.mean_time_to_recovery;
    j["actions"] = m.actions_by_type;
    if (m.detection_defined) {
        j["detection_precision"] = m.detection_precision;
        j["detection_recall"] = m.detection_recall;
    }
    if (m.skeleton_defined) j["skeleton_f1"] = m.skeleton_f1;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"crag - causal-graph resilience agent on a simulated compute continuum"};
    app.require_subcommand(1);

    crag::harness::ExperimentConfig cfg;
    double rho_all = -1.0;

    auto* run = app.add_subcommand("run", "run a seeded experiment");
    run->add_option("--scenario", cfg.scenario_path, "scenario json file")->required();
    run->add_option("--rounds", cfg.rounds, "agent rounds after bootstrap");
    run->add_option("--seed", cfg.seed, "master seed");
    run->add_option("--out", cfg.out_dir, "artifact output directory")->required();
    run->add_flag("--baseline", cfg.agent.force_do_nothing, "force do-nothing every round");
    run->add_option("--bins", cfg.agent.bins, "quantile bins per metric (K)");
    run->add_option("--window", cfg.agent.window, "evidence window in rounds (0 = unbounded)");
    run->add_option("--ess", cfg.agent.learn.ess, "BDeu equivalent sample size");
    run->add_option("--max-parents", cfg.agent.learn.max_parents, "parent cap in structure search");
    run->add_option("--restarts", cfg.agent.learn.restarts, "hill-climb restarts");
    run->add_option("--eps", cfg.agent.learn.eps, "minimum accepted score gain");
    run->add_option("--lambda", cfg.agent.learn.lambda, "structural prior strength");
    run->add_option("--tol", cfg.agent.infer_tol, "mean-field convergence tolerance");
    run->add_option("--max-sweeps", cfg.agent.max_sweeps, "mean-field sweep cap");
    run->add_option("--eps-g", cfg.agent.eps_g, "EFE tie tolerance");
    run->add_option("--detect-threshold", cfg.agent.detect_threshold, "fault reporting threshold");
    run->add_option("--preference-weight", cfg.agent.preference_weight, "P* mass on the nominal bin");
    run->add_option("--suspect-threshold", cfg.agent.catalog.suspect_threshold,
                    "belief level that makes a node a suspect");
    run->add_option("--rho", rho_all, "effectiveness for all repair actions");
    run->add_option("--rho-restart", cfg.agent.catalog.rho_restart, "restart effectiveness");
    run->add_option("--rho-isolate", cfg.agent.catalog.rho_isolate, "isolate effectiveness");
    run->add_option("--rho-reassign", cfg.agent.catalog.rho_reassign, "reassign effectiveness");
    run->add_option("--rho-reroute", cfg.agent.catalog.rho_reroute, "reroute effectiveness");
    run->add_option("--rho-reduce", cfg.agent.catalog.rho_reduce, "reduce-load effectiveness");

    std::string in_dir, baseline_dir, format = "text";
    auto* rep = app.add_subcommand("report", "summarize an artifact directory");
    rep->add_option("--in", in_dir, "artifact directory")->required();
    rep->add_option("--baseline-in", baseline_dir, "baseline artifact directory for comparison plots");
    rep->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

    std::string replay_dir;
    auto* rpl = app.add_subcommand("replay", "re-run and byte-compare an artifact directory");
    rpl->add_option("--in", replay_dir, "artifact directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (rho_all >= 0.0) {
                cfg.agent.catalog.rho_restart = rho_all;
                cfg.agent.catalog.rho_reassign = rho_all;
                cfg.agent.catalog.rho_reroute = rho_all;
                cfg.agent.catalog.rho_reduce = rho_all;
                cfg.agent.catalog.rho_escalate = rho_all;
            }
            auto result = crag::harness::run_experiment(cfg);
            if (!result.ok) {
                std::cerr << "error: " << result.error << "\n";
                return 2;
            }
            std::cout << "wrote " << result.dir.string() << " (" << result.completed_rounds
                      << " rounds)\n";
            return 0;
        }
        if (rep->parsed()) {
            std::optional<crag::harness::fs::path> base;
            if (!baseline_dir.empty()) base = baseline_dir;
            auto m = crag::harness::report(in_dir, base);
            if (format == "json")
                std::cout << summary_json(m).dump(2) << "\n";
            else
                std::cout << m.to_text();
            return 0;
        }
        if (rpl->parsed()) {
            auto verdict = crag::harness::replay(replay_dir);
            std::cout << verdict.to_text();
            return verdict.pass ? 0 : 3;
        }
    } catch (const crag::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
