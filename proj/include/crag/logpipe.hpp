#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "crag/sim.hpp"

namespace crag::logpipe {

constexpr int kMissingValue = -1;

// Incremental per-node log updates, strictly after each node's anchor.
struct LogDelta {
    int round = 0;
    std::map<std::string, std::vector<sim::LogEntry>> per_node;

    std::size_t total_entries() const {
        std::size_t n = 0;
        for (const auto& [id, es] : per_node) n += es.size();
        return n;
    }
};

// What the agent is allowed to know about the monitoring feed: which metrics
// exist (and their hw/sw kind), which fault-event types exist. Derived from
// the scenario, never from the truth net's structure or probabilities.
struct ObservationSchema {
    struct Metric {
        std::string id;
        VarKind kind = VarKind::HwContext;
        double nominal_value = 0.0;  // healthy operating point
    };
    std::vector<Metric> metrics;
    std::vector<std::string> indicators;
};

inline ObservationSchema schema_from_scenario(const sim::ScenarioConfig& sc) {
    ObservationSchema s;
    for (const auto& m : sc.metrics) s.metrics.push_back({m.id, m.kind, m.nominal_value});
    for (const auto& i : sc.indicators) s.indicators.push_back(i.id);
    return s;
}

// Pure read: every entry with timestamp strictly after that node's anchor.
// Duplicate (ts, event_id) pairs are dropped. Isolated nodes contribute an
// empty sub-delta and need no anchor.
inline LogDelta collect_incremental(const sim::ContinuumState& state,
                                    const std::map<std::string, std::uint64_t>& anchors) {
    LogDelta delta;
    delta.round = state.round > 0 ? state.round - 1 : 0;
    for (const auto& [node_id, node] : state.nodes) {
        auto it = anchors.find(node_id);
        if (it == anchors.end()) {
            if (node.isolated) continue;
            throw std::invalid_argument("collect_incremental: missing anchor for node '" + node_id + "'");
        }
        std::uint64_t anchor = it->second;
        std::vector<sim::LogEntry> entries;
        std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
        for (const auto& e : node.log) {
            if (e.ts <= anchor) continue;
            if (!seen.insert({e.ts, e.event_id}).second) continue;
            entries.push_back(e);
        }
        delta.per_node.emplace(node_id, std::move(entries));
    }
    return delta;
}

inline std::map<std::string, std::uint64_t> advance_anchors(const std::map<std::string, std::uint64_t>& anchors,
                                                            const LogDelta& delta) {
    auto out = anchors;
    for (const auto& [node_id, entries] : delta.per_node)
        for (const auto& e : entries) out[node_id] = std::max(out[node_id], e.ts);
    return out;
}

struct BinColumn {
    std::string id;
    VarKind kind = VarKind::HwContext;
    std::vector<double> thresholds;  // strictly increasing; arity = size+1
    int nominal_bin = 0;
    bool degenerate = false;  // single bin; excluded from structure search

    int arity() const { return static_cast<int>(thresholds.size()) + 1; }

    int bin(double x) const {
        int b = 0;
        for (double t : thresholds)
            if (x >= t) ++b;
        return b;
    }
};

struct BinSpec {
    std::vector<BinColumn> metrics;
    std::vector<std::string> indicators;  // binary event columns, schema order
    int bins_per_metric = 3;

    const BinColumn* find(const std::string& id) const {
        for (const auto& c : metrics)
            if (c.id == id) return &c;
        return nullptr;
    }
};

namespace detail {

// Linear-interpolated quantile of a sorted sample (R type 7).
inline double quantile_sorted(const std::vector<double>& xs, double q) {
    if (xs.size() == 1) return xs[0];
    double pos = q * static_cast<double>(xs.size() - 1);
    auto lo = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= xs.size()) return xs.back();
    return xs[lo] + frac * (xs[lo + 1] - xs[lo]);
}

}  // namespace detail

// Freeze per-metric quantile thresholds from the bootstrap round. Metrics
// with fewer than K samples or no spread collapse to a degenerate single bin.
inline BinSpec fit_bins(const LogDelta& bootstrap, const ObservationSchema& schema, int K) {
    if (K < 1) throw ConfigError("bins: K must be >= 1");
    BinSpec spec;
    spec.bins_per_metric = K;
    spec.indicators = schema.indicators;

    std::map<std::string, std::vector<double>> samples;
    for (const auto& [node_id, entries] : bootstrap.per_node)
        for (const auto& e : entries)
            for (const auto& [k, v] : e.metrics) samples[k].push_back(v);

    for (const auto& m : schema.metrics) {
        BinColumn col;
        col.id = m.id;
        col.kind = m.kind;
        auto& xs = samples[m.id];
        std::sort(xs.begin(), xs.end());
        if (K > 1 && static_cast<int>(xs.size()) >= K) {
            for (int i = 1; i < K; ++i) {
                double t = detail::quantile_sorted(xs, static_cast<double>(i) / K);
                if (t <= xs.front()) continue;  // constant prefix: no empty bottom bin
                if (col.thresholds.empty() || t > col.thresholds.back()) col.thresholds.push_back(t);
            }
        }
        col.degenerate = col.arity() < 2;
        col.nominal_bin = col.bin(m.nominal_value);
        spec.metrics.push_back(std::move(col));
    }
    return spec;
}

struct FeatureColumn {
    std::string id;
    VarKind kind = VarKind::SwContext;
    int arity = 2;
    bool degenerate = false;
};

struct RowKey {
    int round = 0;
    std::string node;
    bool operator<(const RowKey& o) const { return std::tie(round, node) < std::tie(o.round, o.node); }
    bool operator==(const RowKey& o) const { return round == o.round && node == o.node; }
};

// Discrete observation matrix: one row per (node, round) aggregate, one
// column per metric or fault indicator, kMissingValue for absent metrics.
struct FeatureMatrix {
    std::vector<FeatureColumn> columns;
    std::vector<RowKey> index;
    std::vector<std::vector<int>> rows;
    int round_label = 0;

    int num_rows() const { return static_cast<int>(rows.size()); }
    int num_cols() const { return static_cast<int>(columns.size()); }

    int column_of(const std::string& id) const {
        for (int i = 0; i < num_cols(); ++i)
            if (columns[i].id == id) return i;
        throw std::out_of_range("feature matrix has no column '" + id + "'");
    }

    bool same_schema(const FeatureMatrix& o) const {
        if (columns.size() != o.columns.size()) return false;
        for (std::size_t i = 0; i < columns.size(); ++i) {
            const auto& a = columns[i];
            const auto& b = o.columns[i];
            if (a.id != b.id || a.kind != b.kind || a.arity != b.arity || a.degenerate != b.degenerate)
                return false;
        }
        return true;
    }
};

inline std::vector<FeatureColumn> feature_columns(const BinSpec& bins) {
    std::vector<FeatureColumn> cols;
    for (const auto& m : bins.metrics) cols.push_back({m.id, m.kind, m.arity(), m.degenerate});
    for (const auto& ind : bins.indicators) cols.push_back({ind, VarKind::FaultIndicator, 2, false});
    cols.push_back({"other", VarKind::FaultIndicator, 2, false});
    return cols;
}

// One row per (node, round) with at least one entry. Metrics are averaged
// over the interval then binned; indicator columns go active iff a matching
// event occurred; unknown event types land on the reserved "other" column.
inline FeatureMatrix normalize(const LogDelta& delta, const BinSpec& bins,
                               std::vector<std::string>* warnings = nullptr) {
    FeatureMatrix fm;
    fm.columns = feature_columns(bins);
    fm.round_label = delta.round;

    std::set<std::string> indicator_set(bins.indicators.begin(), bins.indicators.end());
    std::map<RowKey, std::vector<const sim::LogEntry*>> groups;
    for (const auto& [node_id, entries] : delta.per_node)
        for (const auto& e : entries) groups[{e.round, node_id}].push_back(&e);

    for (const auto& [key, entries] : groups) {
        std::vector<int> row(fm.columns.size(), kMissingValue);
        std::map<std::string, std::pair<double, int>> sums;
        for (const auto* e : entries)
            for (const auto& [k, v] : e->metrics) {
                auto& [s, n] = sums[k];
                s += v;
                n += 1;
            }
        int c = 0;
        for (const auto& m : bins.metrics) {
            auto it = sums.find(m.id);
            row[c++] = it == sums.end() ? kMissingValue : m.bin(it->second.first / it->second.second);
        }
        for (std::size_t i = 0; i < bins.indicators.size(); ++i) row[c + i] = 0;
        row.back() = 0;
        for (const auto* e : entries) {
            if (indicator_set.count(e->event_type)) {
                row[fm.column_of(e->event_type)] = 1;
            } else if (!sim::lifecycle_events().count(e->event_type)) {
                row.back() = 1;
                if (warnings)
                    warnings->push_back("unknown event type '" + e->event_type + "' on " + key.node +
                                        " round " + std::to_string(key.round));
            }
        }
        fm.index.push_back(key);
        fm.rows.push_back(std::move(row));
    }
    return fm;
}

// Sliding evidence window: keep rows from the newest W rounds (W <= 0 keeps
// everything). Schemas are frozen after bootstrap, so a mismatch is an error.
inline FeatureMatrix merge_rounds(const FeatureMatrix& history, const FeatureMatrix& fresh, int window) {
    if (!history.columns.empty() && !history.same_schema(fresh))
        throw std::invalid_argument("merge_rounds: schema mismatch (schema is frozen after bootstrap)");
    FeatureMatrix out;
    out.columns = fresh.columns;
    out.round_label = fresh.round_label;
    int max_round = fresh.round_label;
    for (const auto& k : history.index) max_round = std::max(max_round, k.round);
    for (const auto& k : fresh.index) max_round = std::max(max_round, k.round);
    int cutoff = window > 0 ? max_round - window + 1 : std::numeric_limits<int>::min();
    for (int i = 0; i < history.num_rows(); ++i) {
        if (history.index[i].round < cutoff) continue;
        out.index.push_back(history.index[i]);
        out.rows.push_back(history.rows[i]);
    }
    for (int i = 0; i < fresh.num_rows(); ++i) {
        if (fresh.index[i].round < cutoff) continue;
        out.index.push_back(fresh.index[i]);
        out.rows.push_back(fresh.rows[i]);
    }
    return out;
}

// Delimited export with a schema header line; '?' marks missing cells.
inline std::string export_feature_matrix(const FeatureMatrix& fm) {
    std::ostringstream os;
    os << "round\tnode";
    for (const auto& c : fm.columns) os << "\t" << c.id << ":" << to_string(c.kind) << ":" << c.arity;
    os << "\n";
    for (int i = 0; i < fm.num_rows(); ++i) {
        os << fm.index[i].round << "\t" << fm.index[i].node;
        for (int v : fm.rows[i]) {
            if (v == kMissingValue)
                os << "\t?";
            else
                os << "\t" << v;
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace crag::logpipe
