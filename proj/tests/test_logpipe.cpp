#include <catch2/catch_amalgamated.hpp>

#include "crag/logpipe.hpp"
#include "testutil.hpp"

using namespace crag;
using namespace crag::logpipe;

namespace {

// Quantile oracle: plain sort + linear interpolation, written independently
// of BinSpec fitting.
double quantile_oracle(std::vector<double> xs, double q) {
    std::sort(xs.begin(), xs.end());
    double pos = q * (xs.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= xs.size()) return xs.back();
    return xs[lo] + (pos - lo) * (xs[lo + 1] - xs[lo]);
}

sim::ContinuumState make_state_with_entries() {
    auto sc = testutil::small_scenario();
    auto state = sim::build_continuum(sc);
    auto& node = state.nodes.at("edge0");
    for (int ts = 5; ts <= 15; ++ts) {
        sim::LogEntry e;
        e.node = "edge0";
        e.ts = ts;
        e.round = ts / 4;
        e.event_type = "metrics";
        e.severity = "info";
        e.metrics = {{"power", 0.9}};
        e.event_id = node.next_event_id++;
        node.log.push_back(e);
        node.next_ts = ts + 1;
    }
    state.round = 4;
    return state;
}

ObservationSchema small_schema() {
    return schema_from_scenario(testutil::small_scenario());
}

LogDelta delta_with_values(const std::vector<double>& values, const std::string& metric = "exec_time") {
    LogDelta d;
    d.round = 0;
    std::uint64_t ts = 1;
    for (double v : values) {
        sim::LogEntry e;
        e.node = "edge0";
        e.ts = ts;
        e.round = 0;
        e.event_type = "metrics";
        e.severity = "info";
        e.metrics = {{metric, v}};
        e.event_id = ts;
        d.per_node["edge0"].push_back(e);
        ++ts;
    }
    return d;
}

}  // namespace

TEST_CASE("collect returns exactly the entries after the anchor", "[logpipe]") {
    auto state = make_state_with_entries();
    std::map<std::string, std::uint64_t> anchors;
    for (const auto& [id, n] : state.nodes) anchors[id] = 0;
    anchors["edge0"] = 10;
    auto delta = collect_incremental(state, anchors);
    REQUIRE(delta.per_node.at("edge0").size() == 5);
    for (const auto& e : delta.per_node.at("edge0")) REQUIRE(e.ts > 10);
}

TEST_CASE("no new entries gives an empty delta but the round still advances", "[logpipe]") {
    auto state = make_state_with_entries();
    std::map<std::string, std::uint64_t> anchors;
    for (const auto& [id, n] : state.nodes) anchors[id] = 100;
    auto delta = collect_incremental(state, anchors);
    REQUIRE(delta.total_entries() == 0);
    REQUIRE(delta.round == 3);
}

TEST_CASE("duplicated entries appear once", "[logpipe]") {
    auto state = make_state_with_entries();
    auto& log = state.nodes.at("edge0").log;
    log.push_back(log.back());  // same node, ts, event id
    std::map<std::string, std::uint64_t> anchors;
    for (const auto& [id, n] : state.nodes) anchors[id] = 0;
    auto delta = collect_incremental(state, anchors);
    REQUIRE(delta.per_node.at("edge0").size() == 11);
}

TEST_CASE("missing anchor for a live node is an error", "[logpipe]") {
    auto state = make_state_with_entries();
    std::map<std::string, std::uint64_t> anchors{{"edge0", 0}};
    REQUIRE_THROWS_AS(collect_incremental(state, anchors), std::invalid_argument);
    // Isolated nodes do not need anchors.
    for (auto& [id, n] : state.nodes)
        if (id != "edge0") n.isolated = true;
    auto delta = collect_incremental(state, anchors);
    REQUIRE(delta.per_node.size() == 1);
}

TEST_CASE("quantile bins on 1..9 with K=3", "[logpipe][oracle]") {
    auto delta = delta_with_values({1, 2, 3, 4, 5, 6, 7, 8, 9});
    auto bins = fit_bins(delta, small_schema(), 3);
    const auto* col = bins.find("exec_time");
    REQUIRE(col != nullptr);
    REQUIRE(col->thresholds.size() == 2);
    REQUIRE(col->thresholds[0] == Catch::Approx(quantile_oracle({1, 2, 3, 4, 5, 6, 7, 8, 9}, 1.0 / 3)));
    REQUIRE(col->thresholds[1] == Catch::Approx(quantile_oracle({1, 2, 3, 4, 5, 6, 7, 8, 9}, 2.0 / 3)));
    REQUIRE(col->thresholds[0] == Catch::Approx(3.6666666666666665));
    REQUIRE(col->thresholds[1] == Catch::Approx(6.333333333333333));
}

TEST_CASE("constant metrics collapse to a degenerate single bin", "[logpipe]") {
    auto delta = delta_with_values({4, 4, 4, 4, 4});
    auto bins = fit_bins(delta, small_schema(), 3);
    const auto* col = bins.find("exec_time");
    REQUIRE(col->arity() == 1);
    REQUIRE(col->degenerate);
}

TEST_CASE("K=1 means a single bin and no thresholds", "[logpipe]") {
    auto delta = delta_with_values({1, 2, 3});
    auto bins = fit_bins(delta, small_schema(), 1);
    REQUIRE(bins.find("exec_time")->thresholds.empty());
    REQUIRE(bins.find("exec_time")->arity() == 1);
}

TEST_CASE("normalize bins metrics and flags fault indicators", "[logpipe]") {
    auto delta = delta_with_values({1, 2, 3, 4, 5, 6, 7, 8, 9});
    auto bins = fit_bins(delta, small_schema(), 3);

    LogDelta fresh;
    fresh.round = 1;
    sim::LogEntry m;
    m.node = "edge0";
    m.ts = 100;
    m.round = 1;
    m.event_type = "metrics";
    m.metrics = {{"exec_time", 7.0}};
    m.event_id = 1;
    fresh.per_node["edge0"].push_back(m);
    sim::LogEntry crash;
    crash.node = "edge0";
    crash.ts = 101;
    crash.round = 1;
    crash.event_type = "node-crash";
    crash.event_id = 2;
    fresh.per_node["edge0"].push_back(crash);

    auto fm = normalize(fresh, bins);
    REQUIRE(fm.num_rows() == 1);
    REQUIRE(fm.rows[0][fm.column_of("exec_time")] == 2);
    REQUIRE(fm.rows[0][fm.column_of("node-crash")] == 1);
    REQUIRE(fm.rows[0][fm.column_of("task-fail")] == 0);
    REQUIRE(fm.rows[0][fm.column_of("power")] == kMissingValue);
}

TEST_CASE("unknown event types land on the reserved other column with a warning", "[logpipe]") {
    auto delta = delta_with_values({1, 2, 3});
    auto bins = fit_bins(delta, small_schema(), 3);
    LogDelta fresh;
    fresh.round = 1;
    sim::LogEntry e;
    e.node = "edge0";
    e.ts = 50;
    e.round = 1;
    e.event_type = "gamma-ray-burst";
    e.event_id = 9;
    fresh.per_node["edge0"].push_back(e);

    std::vector<std::string> warnings;
    auto fm = normalize(fresh, bins, &warnings);
    REQUIRE(fm.rows[0][fm.column_of("other")] == 1);
    REQUIRE(warnings.size() == 1);
    REQUIRE(warnings[0].find("gamma-ray-burst") != std::string::npos);
}

TEST_CASE("empty delta normalizes to a zero-row matrix with the full schema", "[logpipe]") {
    auto delta = delta_with_values({1, 2, 3});
    auto bins = fit_bins(delta, small_schema(), 3);
    LogDelta empty;
    empty.round = 2;
    auto fm = normalize(empty, bins);
    REQUIRE(fm.num_rows() == 0);
    REQUIRE(fm.num_cols() == 3 + 3 + 1);  // metrics + indicators + other
    REQUIRE(fm.round_label == 2);
}

TEST_CASE("normalization is deterministic on the same delta", "[logpipe][property]") {
    auto sc = testutil::small_scenario(0.5);
    auto state = sim::build_continuum(sc);
    for (int r = 0; r < 4; ++r) sim::step_round(state, sc.truth, derive_seed(2, "sim", r));
    std::map<std::string, std::uint64_t> anchors;
    for (const auto& [id, n] : state.nodes) anchors[id] = 0;
    auto delta = collect_incremental(state, anchors);
    auto bins = fit_bins(delta, small_schema(), 3);
    REQUIRE(export_feature_matrix(normalize(delta, bins)) ==
            export_feature_matrix(normalize(delta, bins)));
}

TEST_CASE("every row is witnessed by at least one log entry", "[logpipe][property]") {
    auto sc = testutil::small_scenario(0.5);
    auto state = sim::build_continuum(sc);
    for (int r = 0; r < 6; ++r) sim::step_round(state, sc.truth, derive_seed(8, "sim", r));
    std::map<std::string, std::uint64_t> anchors;
    for (const auto& [id, n] : state.nodes) anchors[id] = 0;
    auto delta = collect_incremental(state, anchors);
    auto bins = fit_bins(delta, small_schema(), 3);
    auto fm = normalize(delta, bins);
    for (int i = 0; i < fm.num_rows(); ++i) {
        bool witnessed = false;
        for (const auto& e : delta.per_node.at(fm.index[i].node))
            witnessed = witnessed || e.round == fm.index[i].round;
        REQUIRE(witnessed);
    }
}

TEST_CASE("deltas across rounds are pairwise disjoint and union to the full log",
          "[logpipe][property]") {
    auto sc = testutil::small_scenario(0.5);
    auto state = sim::build_continuum(sc);
    std::map<std::string, std::uint64_t> anchors;
    for (const auto& [id, n] : state.nodes) anchors[id] = 0;

    std::set<std::pair<std::string, std::uint64_t>> seen;
    std::size_t total = 0;
    for (int r = 0; r < 8; ++r) {
        sim::step_round(state, sc.truth, derive_seed(4, "sim", r));
        auto delta = collect_incremental(state, anchors);
        for (const auto& [node, entries] : delta.per_node)
            for (const auto& e : entries) {
                REQUIRE(seen.insert({node, e.ts}).second);  // disjoint
                ++total;
            }
        anchors = advance_anchors(anchors, delta);
    }
    std::size_t emitted = 0;
    for (const auto& [id, n] : state.nodes) emitted += n.log.size();
    REQUIRE(total == emitted);  // union equals the full stream
}

TEST_CASE("merge keeps the newest W rounds of rows", "[logpipe]") {
    auto schema = small_schema();
    auto bins = fit_bins(delta_with_values({1, 2, 3}), schema, 3);
    auto cols = feature_columns(bins);

    auto make_fm = [&](int round_lo, int round_hi, int rows_per_round) {
        FeatureMatrix fm;
        fm.columns = cols;
        fm.round_label = round_hi;
        for (int r = round_lo; r <= round_hi; ++r)
            for (int i = 0; i < rows_per_round; ++i) {
                fm.index.push_back({r, "n" + std::to_string(i)});
                fm.rows.push_back(std::vector<int>(cols.size(), 0));
            }
        return fm;
    };

    auto history = make_fm(1, 8, 5);   // 40 rows
    auto fresh = make_fm(9, 10, 5);    // 10 rows
    auto merged = merge_rounds(history, fresh, 9);
    REQUIRE(merged.num_rows() == 45);  // rounds 2..10 survive
    for (const auto& k : merged.index) REQUIRE(k.round >= 2);

    auto unbounded = merge_rounds(history, fresh, 0);
    REQUIRE(unbounded.num_rows() == 50);

    auto newest = merge_rounds(history, fresh, 1);
    REQUIRE(newest.num_rows() == 5);
    for (const auto& k : newest.index) REQUIRE(k.round == 10);
}

TEST_CASE("merge rejects schema changes", "[logpipe]") {
    auto bins = fit_bins(delta_with_values({1, 2, 3}), small_schema(), 3);
    auto fm = normalize(delta_with_values({1, 2, 3}), bins);
    auto other = fm;
    other.columns[0].arity += 1;
    REQUIRE_THROWS_AS(merge_rounds(fm, other, 10), std::invalid_argument);
}
