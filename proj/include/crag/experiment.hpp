#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "crag/agent.hpp"

namespace crag::harness {

namespace fs = std::filesystem;

struct ExperimentConfig {
    std::string scenario_path;
    int rounds = 20;
    std::uint64_t seed = 1;
    agent::AgentConfig agent;
    std::string out_dir;

    void validate() const {
        if (rounds < 1) throw ConfigError("rounds: must be >= 1");
        if (scenario_path.empty()) throw ConfigError("scenario: path required");
        if (out_dir.empty()) throw ConfigError("out: output directory required");
        agent.validate();
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["scenario"] = "scenario.json";  // artifact-relative copy
        j["rounds"] = rounds;
        j["seed"] = seed;
        j["baseline"] = agent.force_do_nothing;
        j["bins"] = agent.bins;
        j["window"] = agent.window;
        j["ess"] = agent.learn.ess;
        j["max_parents"] = agent.learn.max_parents;
        j["restarts"] = agent.learn.restarts;
        j["eps"] = agent.learn.eps;
        j["lambda"] = agent.learn.lambda;
        j["tol"] = agent.infer_tol;
        j["max_sweeps"] = agent.max_sweeps;
        j["eps_g"] = agent.eps_g;
        j["detect_threshold"] = agent.detect_threshold;
        j["preference_weight"] = agent.preference_weight;
        auto& c = j["catalog"];
        c["suspect_threshold"] = agent.catalog.suspect_threshold;
        c["rho_restart"] = agent.catalog.rho_restart;
        c["rho_reassign"] = agent.catalog.rho_reassign;
        c["rho_reroute"] = agent.catalog.rho_reroute;
        c["rho_reduce"] = agent.catalog.rho_reduce;
        c["rho_isolate"] = agent.catalog.rho_isolate;
        c["rho_escalate"] = agent.catalog.rho_escalate;
        c["max_restart_attempts"] = agent.catalog.max_restart_attempts;
        c["isolate_needs_failed_restart"] = agent.catalog.isolate_needs_failed_restart;
        c["escalate_after"] = agent.catalog.escalate_after;
        c["crash_var"] = agent.catalog.crash_var;
        c["taskfail_var"] = agent.catalog.taskfail_var;
        c["comm_var"] = agent.catalog.comm_var;
        c["resource_var"] = agent.catalog.resource_var;
        return j;
    }

    static ExperimentConfig from_json(const nlohmann::json& j) {
        ExperimentConfig cfg;
        cfg.scenario_path = j.at("scenario").get<std::string>();
        cfg.rounds = j.at("rounds").get<int>();
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.agent.force_do_nothing = j.at("baseline").get<bool>();
        cfg.agent.bins = j.at("bins").get<int>();
        cfg.agent.window = j.at("window").get<int>();
        cfg.agent.learn.ess = j.at("ess").get<double>();
        cfg.agent.learn.max_parents = j.at("max_parents").get<int>();
        cfg.agent.learn.restarts = j.at("restarts").get<int>();
        cfg.agent.learn.eps = j.at("eps").get<double>();
        cfg.agent.learn.lambda = j.at("lambda").get<double>();
        cfg.agent.infer_tol = j.at("tol").get<double>();
        cfg.agent.max_sweeps = j.at("max_sweeps").get<int>();
        cfg.agent.eps_g = j.at("eps_g").get<double>();
        cfg.agent.detect_threshold = j.at("detect_threshold").get<double>();
        cfg.agent.preference_weight = j.at("preference_weight").get<double>();
        const auto& c = j.at("catalog");
        cfg.agent.catalog.suspect_threshold = c.at("suspect_threshold").get<double>();
        cfg.agent.catalog.rho_restart = c.at("rho_restart").get<double>();
        cfg.agent.catalog.rho_reassign = c.at("rho_reassign").get<double>();
        cfg.agent.catalog.rho_reroute = c.at("rho_reroute").get<double>();
        cfg.agent.catalog.rho_reduce = c.at("rho_reduce").get<double>();
        cfg.agent.catalog.rho_isolate = c.at("rho_isolate").get<double>();
        cfg.agent.catalog.rho_escalate = c.at("rho_escalate").get<double>();
        cfg.agent.catalog.max_restart_attempts = c.at("max_restart_attempts").get<int>();
        cfg.agent.catalog.isolate_needs_failed_restart = c.at("isolate_needs_failed_restart").get<bool>();
        cfg.agent.catalog.escalate_after = c.at("escalate_after").get<int>();
        cfg.agent.catalog.crash_var = c.at("crash_var").get<std::string>();
        cfg.agent.catalog.taskfail_var = c.at("taskfail_var").get<std::string>();
        cfg.agent.catalog.comm_var = c.at("comm_var").get<std::string>();
        cfg.agent.catalog.resource_var = c.at("resource_var").get<std::string>();
        return cfg;
    }
};

namespace detail {

inline std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + p.string() + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

inline void write_file(const fs::path& p, const std::string& content) {
    fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
    f << content;
}

inline std::string round_dir_name(int round) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "r%04d", round);
    return buf;
}

}  // namespace detail

struct RunResult {
    fs::path dir;
    int completed_rounds = 0;
    bool ok = true;
    std::string error;  // "round <r> <stage>: message" when !ok
};

// Bootstrap round, then N agent rounds, persisting per-round graph, beliefs,
// decision records, plus logs, ground-truth trace, and metrics. Byte
// deterministic for a fixed (config, seed). On a stage error the partial
// artifact tree is retained and the error is recorded in error.txt.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    std::string scenario_bytes = detail::read_file(cfg.scenario_path);
    sim::ScenarioConfig scenario = sim::load_scenario(cfg.scenario_path);

    fs::path out(cfg.out_dir);
    fs::create_directories(out / "rounds");
    detail::write_file(out / "scenario.json", scenario_bytes);
    detail::write_file(out / "experiment.json", cfg.to_json().dump(2) + "\n");

    RunResult result;
    result.dir = out;

    auto state = sim::build_continuum(scenario);
    agent::AgentState ag;
    std::ostringstream truth_text;
    for (auto [a, b] : scenario.truth.skeleton())
        truth_text << "skeleton " << scenario.truth.var(a).id << " " << scenario.truth.var(b).id << "\n";

    auto record_injections = [&](const sim::RoundTrace& trace) {
        for (const auto& [node, var] : trace.injected)
            truth_text << "injected " << trace.round << " " << node << " " << var << "\n";
    };

    auto trace0 = sim::step_round(state, scenario.truth, derive_seed(cfg.seed, "sim", 0));
    record_injections(trace0);
    agent::bootstrap(ag, state, logpipe::schema_from_scenario(scenario), cfg.agent);

    for (int r = 1; r <= cfg.rounds; ++r) {
        auto trace = sim::step_round(state, scenario.truth, derive_seed(cfg.seed, "sim", r));
        record_injections(trace);
        try {
            auto rec = agent::agent_round(ag, state, cfg.agent, derive_seed(cfg.seed, "agent", r));
            fs::path rd = out / "rounds" / detail::round_dir_name(r);
            detail::write_file(rd / "graph.txt", rec.graph.to_text());
            detail::write_file(rd / "beliefs.txt", rec.belief_text());
            detail::write_file(rd / "decision.txt", rec.decision_text());
            result.completed_rounds = r;
        } catch (const StageError& e) {
            result.ok = false;
            result.error = "round " + std::to_string(r) + " " + e.what();
            detail::write_file(out / "error.txt", result.error + "\n");
            break;
        }
    }

    detail::write_file(out / "logs.txt", sim::export_logs(state));
    detail::write_file(out / "truth.txt", truth_text.str());
    detail::write_file(out / "evidence.txt", logpipe::export_feature_matrix(ag.evidence));
    return result;
}

// ---------------------------------------------------------------------------
// Metrics and report.
// ---------------------------------------------------------------------------

struct MetricsSummary {
    int rounds = 0;
    int deadline_hits = 0;
    int deadline_misses = 0;
    double deadline_hit_rate = 1.0;  // 1.0 when no attempt resolved
    std::map<int, std::pair<int, int>> per_round;  // round -> (hits, misses)
    bool mttr_defined = false;
    double mean_time_to_recovery = 0.0;
    std::map<std::string, int> actions_by_type;
    std::map<int, double> f_trace;  // round -> mean free energy over nodes
    bool detection_defined = false;
    double detection_precision = 0.0;
    double detection_recall = 0.0;
    bool skeleton_defined = false;
    double skeleton_f1 = 0.0;

    std::string to_text() const {
        std::ostringstream os;
        os << "rounds " << rounds << "\n";
        os << "deadline_hits " << deadline_hits << "\n";
        os << "deadline_misses " << deadline_misses << "\n";
        os << "deadline_hit_rate " << fmt_double(deadline_hit_rate) << "\n";
        os << "mttr_defined " << (mttr_defined ? 1 : 0) << "\n";
        if (mttr_defined) os << "mean_time_to_recovery " << fmt_double(mean_time_to_recovery) << "\n";
        for (const auto& [type, n] : actions_by_type) os << "action " << type << " " << n << "\n";
        for (const auto& [r, f] : f_trace) os << "free_energy " << r << " " << fmt_double(f) << "\n";
        if (detection_defined) {
            os << "detection_precision " << fmt_double(detection_precision) << "\n";
            os << "detection_recall " << fmt_double(detection_recall) << "\n";
        }
        if (skeleton_defined) os << "skeleton_f1 " << fmt_double(skeleton_f1) << "\n";
        for (const auto& [r, hm] : per_round)
            os << "per_round " << r << " hits " << hm.first << " misses " << hm.second << "\n";
        return os.str();
    }
};

namespace detail {

struct ParsedLog {
    // (round, task detail) extracted from completion / miss events
    std::vector<std::pair<int, bool>> resolved;  // (round, hit?)
};

inline std::map<std::string, std::string> parse_detail(const std::string& detail) {
    std::map<std::string, std::string> kv;
    for (const auto& part : split(detail, ' ')) {
        auto eq = part.find('=');
        if (eq != std::string::npos) kv[part.substr(0, eq)] = part.substr(eq + 1);
    }
    return kv;
}

}  // namespace detail

// Recompute the metrics summary from the persisted artifacts alone; this is
// the single implementation used both at run time and by `report`.
inline MetricsSummary compute_metrics(const fs::path& dir) {
    MetricsSummary m;
    auto exp = nlohmann::json::parse(detail::read_file(dir / "experiment.json"));
    int rounds = exp.at("rounds").get<int>();

    std::vector<int> missing;
    int last_round = 0;
    for (int r = 1; r <= rounds; ++r) {
        if (!fs::exists(dir / "rounds" / detail::round_dir_name(r))) {
            missing.push_back(r);
        } else {
            last_round = r;
        }
    }
    if (last_round == 0) throw std::runtime_error("report: no completed rounds in '" + dir.string() + "'");
    if (!missing.empty() && !fs::exists(dir / "error.txt")) {
        std::string list;
        for (int r : missing) list += (list.empty() ? "" : ", ") + std::to_string(r);
        throw std::runtime_error("report: missing rounds " + list);
    }
    m.rounds = last_round;

    // Deadline accounting from the raw logs.
    std::istringstream logs(detail::read_file(dir / "logs.txt"));
    std::string line;
    while (std::getline(logs, line)) {
        if (line.empty()) continue;
        auto fields = split(line, '\t');
        if (fields.size() < 7) continue;
        int round = std::stoi(fields[2]);
        const std::string& event = fields[3];
        if (event == "task-complete") {
            auto kv = detail::parse_detail(fields[6]);
            bool hit = kv["hit"] == "1";
            if (hit) {
                m.deadline_hits += 1;
                m.per_round[round].first += 1;
            }
        } else if (event == "deadline-missed") {
            m.deadline_misses += 1;
            m.per_round[round].second += 1;
        }
    }
    int resolved = m.deadline_hits + m.deadline_misses;
    m.deadline_hit_rate = resolved == 0 ? 1.0 : static_cast<double>(m.deadline_hits) / resolved;

    // Actions, detections, free energy from per-round artifacts.
    std::map<int, std::set<std::pair<std::string, std::string>>> detections;
    for (int r = 1; r <= last_round; ++r) {
        fs::path rd = dir / "rounds" / detail::round_dir_name(r);
        if (!fs::exists(rd)) continue;
        std::istringstream dec(detail::read_file(rd / "decision.txt"));
        while (std::getline(dec, line)) {
            auto fields = split(line, ' ');
            if (fields.size() >= 2 && fields[0] == "chosen") {
                auto colon = fields[1].find(':');
                m.actions_by_type[fields[1].substr(0, colon)] += 1;
            } else if (fields.size() >= 3 && fields[0] == "detected") {
                detections[r].insert({fields[1], fields[2]});
            }
        }
        std::istringstream bel(detail::read_file(rd / "beliefs.txt"));
        double f_sum = 0.0;
        int f_n = 0;
        while (std::getline(bel, line)) {
            auto fields = split(line, ' ');
            if (fields.size() >= 4 && fields[0] == "belief-summary") {
                f_sum += std::stod(fields[3]);
                f_n += 1;
            }
        }
        if (f_n > 0) m.f_trace[r] = f_sum / f_n;
    }

    // Detection quality and recovery time against the ground-truth trace.
    std::map<int, std::set<std::pair<std::string, std::string>>> injected;
    std::set<std::pair<std::string, std::string>> truth_skeleton;
    std::istringstream truth(detail::read_file(dir / "truth.txt"));
    while (std::getline(truth, line)) {
        auto fields = split(line, ' ');
        if (fields.size() >= 4 && fields[0] == "injected") {
            int r = std::stoi(fields[1]);
            if (r >= 1) injected[r].insert({fields[2], fields[3]});
        } else if (fields.size() >= 3 && fields[0] == "skeleton") {
            truth_skeleton.insert({std::min(fields[1], fields[2]), std::max(fields[1], fields[2])});
        }
    }

    long tp = 0, fp = 0, fn = 0;
    for (int r = 1; r <= last_round; ++r) {
        const auto& det = detections[r];
        const auto& inj = injected[r];
        for (const auto& d : det)
            (inj.count(d) ? tp : fp) += 1;
        for (const auto& i : inj)
            if (!det.count(i)) fn += 1;
    }
    bool any_truth = false;
    for (const auto& [r, s] : injected) any_truth = any_truth || !s.empty();
    if (any_truth || tp + fp > 0) {
        m.detection_defined = true;
        m.detection_precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp);
        m.detection_recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / (tp + fn);
    }

    // Episodes: maximal consecutive injected runs per (node, var). Recovery =
    // first round at/after the start where the fault is gone and the belief
    // is clear, given it was detected at least once.
    std::map<std::pair<std::string, std::string>, std::vector<std::pair<int, int>>> episodes;
    {
        std::map<std::pair<std::string, std::string>, int> open_start;
        for (int r = 1; r <= last_round + 1; ++r) {
            std::set<std::pair<std::string, std::string>> inj =
                r <= last_round ? injected[r] : std::set<std::pair<std::string, std::string>>{};
            for (const auto& key : inj)
                if (!open_start.count(key)) open_start[key] = r;
            for (auto it = open_start.begin(); it != open_start.end();) {
                if (!inj.count(it->first)) {
                    episodes[it->first].push_back({it->second, r - 1});
                    it = open_start.erase(it);
                } else {
                    ++it;
                }
            }
        }
    }
    double ttr_sum = 0.0;
    int ttr_n = 0;
    for (const auto& [key, runs] : episodes) {
        for (auto [start, end] : runs) {
            bool detected = false;
            for (int r = start; r <= std::min(end + 1, last_round) && !detected; ++r)
                detected = detections[r].count(key) != 0;
            if (!detected) continue;
            for (int r = end + 1; r <= last_round; ++r) {
                if (!detections[r].count(key)) {
                    ttr_sum += r - start;
                    ttr_n += 1;
                    break;
                }
            }
        }
    }
    if (ttr_n > 0) {
        m.mttr_defined = true;
        m.mean_time_to_recovery = ttr_sum / ttr_n;
    }

    // Skeleton F1 of the last learned graph against the ground-truth net.
    {
        auto g = CausalFaultGraph::from_text(
            detail::read_file(dir / "rounds" / detail::round_dir_name(last_round) / "graph.txt"));
        std::set<std::pair<std::string, std::string>> learned;
        for (auto [p, c] : g.edges()) {
            std::string a = g.var(p).id, b = g.var(c).id;
            learned.insert({std::min(a, b), std::max(a, b)});
        }
        long stp = 0, sfp = 0, sfn = 0;
        for (const auto& e : learned)
            (truth_skeleton.count(e) ? stp : sfp) += 1;
        for (const auto& e : truth_skeleton)
            if (!learned.count(e)) sfn += 1;
        if (!truth_skeleton.empty() || !learned.empty()) {
            m.skeleton_defined = true;
            double prec = stp + sfp == 0 ? 1.0 : static_cast<double>(stp) / (stp + sfp);
            double rec = stp + sfn == 0 ? 1.0 : static_cast<double>(stp) / (stp + sfn);
            m.skeleton_f1 = prec + rec == 0.0 ? 0.0 : 2.0 * prec * rec / (prec + rec);
        }
    }
    return m;
}

namespace detail {

inline std::string svg_polyline(const std::vector<std::pair<double, double>>& pts, double w, double h,
                                const std::string& color) {
    if (pts.empty()) return "";
    double xmin = pts.front().first, xmax = pts.front().first;
    double ymin = pts.front().second, ymax = pts.front().second;
    for (auto [x, y] : pts) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    std::ostringstream os;
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (auto [x, y] : pts) {
        double px = 40 + (x - xmin) / (xmax - xmin) * (w - 60);
        double py = h - 30 - (y - ymin) / (ymax - ymin) * (h - 60);
        os << fmt_fixed(px, 2) << "," << fmt_fixed(py, 2) << " ";
    }
    os << "\"/>";
    return os.str();
}

inline std::string svg_chart(const std::string& title,
                             const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>&
                                 series) {
    const double w = 640, h = 360;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"20\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
    int ci = 0;
    for (const auto& [name, pts] : series) {
        const char* color = colors[ci % 4];
        os << svg_polyline(pts, w, h, color) << "\n";
        os << "<text x=\"" << 20 + 140 * ci << "\" y=\"" << h - 8
           << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color << "\">" << name
           << "</text>\n";
        ++ci;
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace detail

// Compute the summary and emit static SVG plots (free-energy trace, detection
// timeline, per-round deadline-hit rate, optionally against a baseline run).
inline MetricsSummary report(const fs::path& dir, const std::optional<fs::path>& baseline_dir = {}) {
    MetricsSummary m = compute_metrics(dir);
    std::optional<MetricsSummary> base;
    if (baseline_dir) base = compute_metrics(*baseline_dir);

    fs::path rp = dir / "report";
    fs::create_directories(rp);

    {
        std::vector<std::pair<double, double>> pts;
        for (const auto& [r, f] : m.f_trace) pts.emplace_back(r, f);
        detail::write_file(rp / "free_energy.svg",
                           detail::svg_chart("mean variational free energy per round", {{"agent", pts}}));
    }
    {
        auto cumulative = [](const MetricsSummary& s) {
            std::vector<std::pair<double, double>> pts;
            double hits = 0, total = 0;
            for (int r = 1; r <= s.rounds; ++r) {
                auto it = s.per_round.find(r);
                if (it != s.per_round.end()) {
                    hits += it->second.first;
                    total += it->second.first + it->second.second;
                }
                pts.emplace_back(r, total == 0 ? 1.0 : hits / total);
            }
            return pts;
        };
        std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> series;
        series.emplace_back("agent", cumulative(m));
        if (base) series.emplace_back("baseline", cumulative(*base));
        detail::write_file(rp / "hit_rate.svg",
                           detail::svg_chart("cumulative deadline-hit rate", series));
    }
    {
        // Detection timeline: detections per round vs injected faults per round.
        std::vector<std::pair<double, double>> det, inj;
        std::map<int, int> det_n, inj_n;
        std::istringstream truth(detail::read_file(dir / "truth.txt"));
        std::string line;
        while (std::getline(truth, line)) {
            auto f = split(line, ' ');
            if (f.size() >= 4 && f[0] == "injected" && std::stoi(f[1]) >= 1) inj_n[std::stoi(f[1])] += 1;
        }
        for (int r = 1; r <= m.rounds; ++r) {
            fs::path rd = dir / "rounds" / detail::round_dir_name(r);
            if (fs::exists(rd)) {
                std::istringstream dec(detail::read_file(rd / "decision.txt"));
                while (std::getline(dec, line))
                    if (line.rfind("detected ", 0) == 0) det_n[r] += 1;
            }
            det.emplace_back(r, det_n[r]);
            inj.emplace_back(r, inj_n[r]);
        }
        detail::write_file(rp / "detection.svg",
                           detail::svg_chart("injected faults vs detections per round",
                                             {{"injected", inj}, {"detected", det}}));
    }
    detail::write_file(rp / "metrics.txt", m.to_text());
    return m;
}

struct ReplayVerdict {
    bool pass = true;
    std::string first_divergence;  // artifact-relative path
    int round = -1;                // parsed from rounds/rNNNN when applicable

    std::string to_text() const {
        if (pass) return "replay pass\n";
        std::ostringstream os;
        os << "replay fail " << first_divergence;
        if (round >= 0) os << " (round " << round << ")";
        os << "\n";
        return os.str();
    }
};

// Re-run from the persisted config + scenario copy and byte-compare every
// artifact; reports the first divergent file.
inline ReplayVerdict replay(const fs::path& dir) {
    if (!fs::exists(dir / "experiment.json"))
        throw std::runtime_error("replay: missing experiment.json in '" + dir.string() + "'");
    auto cfg = ExperimentConfig::from_json(nlohmann::json::parse(detail::read_file(dir / "experiment.json")));
    fs::path tmp = dir / ".replay";
    fs::remove_all(tmp);
    cfg.scenario_path = (dir / "scenario.json").string();
    cfg.out_dir = tmp.string();
    run_experiment(cfg);

    std::vector<std::string> files;
    for (auto it = fs::recursive_directory_iterator(dir); it != fs::recursive_directory_iterator(); ++it) {
        if (!it->is_regular_file()) continue;
        auto rel = fs::relative(it->path(), dir).generic_string();
        if (rel.rfind(".replay", 0) == 0 || rel.rfind("report", 0) == 0) continue;
        files.push_back(rel);
    }
    std::sort(files.begin(), files.end());

    ReplayVerdict verdict;
    for (const auto& rel : files) {
        bool same = fs::exists(tmp / rel) && detail::read_file(dir / rel) == detail::read_file(tmp / rel);
        if (!same) {
            verdict.pass = false;
            verdict.first_divergence = rel;
            if (rel.rfind("rounds/r", 0) == 0) verdict.round = std::stoi(rel.substr(8, 4));
            break;
        }
    }
    fs::remove_all(tmp);
    return verdict;
}

}  // namespace crag::harness
