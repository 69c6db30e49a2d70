#pragma once

#include <cassert>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "crag/common.hpp"

namespace crag {

enum class VarKind { FaultIndicator, HwContext, SwContext };

inline std::string to_string(VarKind k) {
    switch (k) {
        case VarKind::FaultIndicator: return "fault-indicator";
        case VarKind::HwContext: return "hw-context";
        case VarKind::SwContext: return "sw-context";
    }
    return "?";
}

inline VarKind var_kind_from_string(const std::string& s) {
    if (s == "fault-indicator") return VarKind::FaultIndicator;
    if (s == "hw-context") return VarKind::HwContext;
    if (s == "sw-context") return VarKind::SwContext;
    throw ConfigError("unknown variable kind '" + s + "'");
}

struct Variable {
    std::string id;
    VarKind kind = VarKind::SwContext;
    int arity = 2;
};

// Discrete directed acyclic model over fault indicators and context features.
// Parent sets are kept sorted by variable index; a parent configuration is the
// mixed-radix number over parents in that order (first parent most
// significant). CPTs are row-major: cpt[v][config * arity(v) + value].
class CausalFaultGraph {
public:
    CausalFaultGraph() = default;

    explicit CausalFaultGraph(std::vector<Variable> vars) {
        for (auto& v : vars) add_variable(v);
    }

    int add_variable(const Variable& v) {
        if (index_.count(v.id)) throw ConfigError("duplicate variable '" + v.id + "'");
        if (v.arity < 1) throw ConfigError("variable '" + v.id + "' has arity < 1");
        int idx = static_cast<int>(vars_.size());
        index_[v.id] = idx;
        vars_.push_back(v);
        parents_.emplace_back();
        cpts_.emplace_back();
        return idx;
    }

    int num_vars() const { return static_cast<int>(vars_.size()); }
    const Variable& var(int i) const { return vars_.at(i); }
    const std::vector<Variable>& variables() const { return vars_; }

    int index_of(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) throw std::out_of_range("unknown variable '" + id + "'");
        return it->second;
    }
    bool has_variable(const std::string& id) const { return index_.count(id) != 0; }

    const std::vector<int>& parents(int v) const { return parents_.at(v); }

    std::vector<int> children(int v) const {
        std::vector<int> out;
        for (int c = 0; c < num_vars(); ++c) {
            for (int p : parents_[c])
                if (p == v) { out.push_back(c); break; }
        }
        return out;
    }

    bool has_edge(int from, int to) const {
        const auto& ps = parents_.at(to);
        return std::find(ps.begin(), ps.end(), from) != ps.end();
    }

    // Would from->to close a directed cycle? (Checks reachability to->...->from.)
    bool creates_cycle(int from, int to) const {
        if (from == to) return true;
        std::vector<int> stack{from};
        std::vector<char> seen(vars_.size(), 0);
        seen[from] = 1;
        while (!stack.empty()) {
            int x = stack.back();
            stack.pop_back();
            for (int p : parents_[x]) {
                if (p == to) return true;
                if (!seen[p]) {
                    seen[p] = 1;
                    stack.push_back(p);
                }
            }
        }
        return false;
    }

    void add_edge(int from, int to) {
        if (has_edge(from, to)) return;
        if (creates_cycle(from, to))
            throw std::invalid_argument("edge " + vars_[from].id + "->" + vars_[to].id + " closes a cycle");
        auto& ps = parents_[to];
        ps.insert(std::upper_bound(ps.begin(), ps.end(), from), from);
        cpts_[to].clear();
    }

    void remove_edge(int from, int to) {
        auto& ps = parents_[to];
        auto it = std::find(ps.begin(), ps.end(), from);
        if (it != ps.end()) {
            ps.erase(it);
            cpts_[to].clear();
        }
    }

    std::vector<std::pair<int, int>> edges() const {
        std::vector<std::pair<int, int>> out;
        for (int c = 0; c < num_vars(); ++c)
            for (int p : parents_[c]) out.emplace_back(p, c);
        return out;
    }

    int num_edges() const {
        int n = 0;
        for (const auto& ps : parents_) n += static_cast<int>(ps.size());
        return n;
    }

    // Undirected adjacency pairs (min,max), for skeleton comparisons.
    std::set<std::pair<int, int>> skeleton() const {
        std::set<std::pair<int, int>> out;
        for (auto [p, c] : edges()) out.emplace(std::min(p, c), std::max(p, c));
        return out;
    }

    // Parents, children, and children's other parents; excludes v itself.
    std::vector<int> markov_blanket(int v) const {
        if (v < 0 || v >= num_vars()) throw std::out_of_range("markov_blanket: bad variable index");
        std::set<int> mb(parents_[v].begin(), parents_[v].end());
        for (int c : children(v)) {
            mb.insert(c);
            for (int p : parents_[c]) mb.insert(p);
        }
        mb.erase(v);
        return {mb.begin(), mb.end()};
    }

    std::vector<int> markov_blanket(const std::string& id) const { return markov_blanket(index_of(id)); }

    // Deterministic topological order (Kahn, smallest index first).
    std::vector<int> topo_order() const {
        std::vector<int> indeg(vars_.size(), 0);
        for (int c = 0; c < num_vars(); ++c) indeg[c] = static_cast<int>(parents_[c].size());
        std::set<int> ready;
        for (int v = 0; v < num_vars(); ++v)
            if (indeg[v] == 0) ready.insert(v);
        std::vector<int> order;
        order.reserve(vars_.size());
        while (!ready.empty()) {
            int v = *ready.begin();
            ready.erase(ready.begin());
            order.push_back(v);
            for (int c : children(v))
                if (--indeg[c] == 0) ready.insert(c);
        }
        if (order.size() != vars_.size()) throw std::logic_error("graph has a cycle");
        return order;
    }

    int parent_config_count(int v) const {
        int q = 1;
        for (int p : parents_[v]) q *= vars_[p].arity;
        return q;
    }

    int parent_config_index(int v, std::span<const int> assignment) const {
        int idx = 0;
        for (int p : parents_[v]) idx = idx * vars_[p].arity + assignment[p];
        return idx;
    }

    bool has_cpt(int v) const { return !cpts_[v].empty(); }

    void set_cpt(int v, std::vector<double> table) {
        int expect = parent_config_count(v) * vars_[v].arity;
        if (static_cast<int>(table.size()) != expect)
            throw std::invalid_argument("cpt for '" + vars_[v].id + "' has wrong size");
        cpts_[v] = std::move(table);
    }

    void set_cpt_row(int v, int config, std::span<const double> row) {
        int r = vars_[v].arity;
        if (cpts_[v].empty()) cpts_[v].assign(parent_config_count(v) * r, 0.0);
        for (int k = 0; k < r; ++k) cpts_[v][config * r + k] = row[k];
    }

    std::span<const double> cpt_row(int v, int config) const {
        int r = vars_[v].arity;
        return {cpts_[v].data() + static_cast<std::size_t>(config) * r, static_cast<std::size_t>(r)};
    }

    double prob(int v, int value, std::span<const int> assignment) const {
        return cpt_row(v, parent_config_index(v, assignment))[value];
    }

    int round_label() const { return round_; }
    void set_round_label(int r) { round_ = r; }

    // Rows must sum to 1 within tol.
    void validate_cpts(double tol = 1e-12) const {
        for (int v = 0; v < num_vars(); ++v) {
            if (cpts_[v].empty()) throw std::logic_error("variable '" + vars_[v].id + "' has no cpt");
            int r = vars_[v].arity;
            for (int j = 0; j < parent_config_count(v); ++j) {
                double s = 0.0;
                for (int k = 0; k < r; ++k) s += cpts_[v][j * r + k];
                if (std::abs(s - 1.0) > tol)
                    throw std::logic_error("cpt row of '" + vars_[v].id + "' sums to " + fmt_double(s));
            }
        }
    }

    // Ancestral sample. `forced` replaces the conditional of a variable with a
    // fixed distribution over its values (its incoming edges are ignored).
    std::vector<int> sample(Rng& rng, const std::map<int, std::vector<double>>& forced = {}) const {
        std::vector<int> value(vars_.size(), -1);
        for (int v : topo_order()) {
            auto it = forced.find(v);
            if (it != forced.end()) {
                value[v] = rng.categorical(it->second);
            } else {
                value[v] = rng.categorical(cpt_row(v, parent_config_index(v, value)));
            }
        }
        return value;
    }

    // -----------------------------------------------------------------------
    // Persistence: edge-list plus CPT dump, stable ordering, diffable across
    // rounds.
    // -----------------------------------------------------------------------

    std::string to_text() const {
        std::ostringstream os;
        os << "cfg round " << round_ << "\n";
        for (const auto& v : vars_)
            os << "var " << v.id << " " << to_string(v.kind) << " " << v.arity << "\n";
        for (auto [p, c] : edges()) os << "edge " << vars_[p].id << " " << vars_[c].id << "\n";
        for (int v = 0; v < num_vars(); ++v) {
            if (cpts_[v].empty()) continue;
            for (int j = 0; j < parent_config_count(v); ++j) {
                os << "cpt " << vars_[v].id << " " << j;
                for (double x : cpt_row(v, j)) os << " " << fmt_double(x);
                os << "\n";
            }
        }
        return os.str();
    }

    static CausalFaultGraph from_text(const std::string& text) {
        CausalFaultGraph g;
        std::istringstream is(text);
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::string tag;
            ls >> tag;
            if (tag == "cfg") {
                std::string kw;
                int r;
                ls >> kw >> r;
                g.set_round_label(r);
            } else if (tag == "var") {
                std::string id, kind;
                int arity;
                ls >> id >> kind >> arity;
                g.add_variable({id, var_kind_from_string(kind), arity});
            } else if (tag == "edge") {
                std::string from, to;
                ls >> from >> to;
                g.add_edge(g.index_of(from), g.index_of(to));
            } else if (tag == "cpt") {
                std::string id;
                int config;
                ls >> id >> config;
                int v = g.index_of(id);
                std::vector<double> row;
                double x;
                while (ls >> x) row.push_back(x);
                g.set_cpt_row(v, config, row);
            } else {
                throw ConfigError("graph text: unknown record '" + tag + "'");
            }
        }
        return g;
    }

private:
    std::vector<Variable> vars_;
    std::map<std::string, int> index_;
    std::vector<std::vector<int>> parents_;
    std::vector<std::vector<double>> cpts_;
    int round_ = 0;
};

}  // namespace crag
