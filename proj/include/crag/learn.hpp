#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crag/graph.hpp"
#include "crag/logpipe.hpp"

namespace crag::learn {

struct LearnConfig {
    double ess = 1.0;     // equivalent sample size
    int max_parents = 3;
    int restarts = 5;
    double eps = 1e-9;    // minimum accepted score gain
    double lambda = 1.0;  // structural-prior strength
    std::uint64_t seed = 0;
};

struct StructureScore {
    double total = 0.0;
    std::vector<double> family;  // one component per variable
    double prior_penalty = 0.0;
};

inline CausalFaultGraph graph_from_columns(const logpipe::FeatureMatrix& fm) {
    CausalFaultGraph g;
    for (const auto& c : fm.columns) g.add_variable({c.id, c.kind, c.arity});
    g.set_round_label(fm.round_label);
    return g;
}

namespace detail {

// BDeu family term with available-case analysis: rows with a missing child or
// parent value are skipped for this family only.
inline double family_score(const logpipe::FeatureMatrix& fm, int child, const std::vector<int>& parents,
                           double ess) {
    int r = fm.columns[child].arity;
    if (r < 2)
        throw std::invalid_argument("bde_score: degenerate variable '" + fm.columns[child].id +
                                    "' cannot be scored");
    long q = 1;
    for (int p : parents) {
        if (fm.columns[p].arity < 2)
            throw std::invalid_argument("bde_score: degenerate variable '" + fm.columns[p].id +
                                        "' cannot be scored");
        q *= fm.columns[p].arity;
    }
    double a_ijk = ess / static_cast<double>(q * r);
    double a_ij = ess / static_cast<double>(q);

    std::vector<int> counts(static_cast<std::size_t>(q) * r, 0);
    for (const auto& row : fm.rows) {
        int cv = row[child];
        if (cv == logpipe::kMissingValue) continue;
        long j = 0;
        bool skip = false;
        for (int p : parents) {
            if (row[p] == logpipe::kMissingValue) {
                skip = true;
                break;
            }
            j = j * fm.columns[p].arity + row[p];
        }
        if (skip) continue;
        counts[static_cast<std::size_t>(j) * r + cv] += 1;
    }

    double score = 0.0;
    for (long j = 0; j < q; ++j) {
        long n_ij = 0;
        for (int k = 0; k < r; ++k) n_ij += counts[static_cast<std::size_t>(j) * r + k];
        if (n_ij == 0) continue;
        score += std::lgamma(a_ij) - std::lgamma(a_ij + static_cast<double>(n_ij));
        for (int k = 0; k < r; ++k) {
            int n_ijk = counts[static_cast<std::size_t>(j) * r + k];
            if (n_ijk > 0) score += std::lgamma(a_ijk + n_ijk) - std::lgamma(a_ijk);
        }
    }
    return score;
}

}  // namespace detail

// BDeu log marginal likelihood of the evidence under the DAG. Decomposable:
// the result is the sum of per-family terms.
inline double bde_score(const CausalFaultGraph& dag, const logpipe::FeatureMatrix& fm, double ess) {
    if (ess <= 0.0) throw std::invalid_argument("bde_score: ess must be > 0");
    if (dag.num_vars() != fm.num_cols())
        throw std::invalid_argument("bde_score: dag variables do not match evidence schema");
    double total = 0.0;
    for (int v = 0; v < dag.num_vars(); ++v) total += detail::family_score(fm, v, dag.parents(v), ess);
    return total;
}

// -lambda times the directed edge-set Hamming distance to the previous
// round's graph.
inline double structural_prior(const CausalFaultGraph& dag, const CausalFaultGraph& previous, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("structural_prior: lambda must be >= 0");
    if (dag.num_vars() != previous.num_vars())
        throw std::invalid_argument("structural_prior: variable sets differ");
    for (int v = 0; v < dag.num_vars(); ++v)
        if (dag.var(v).id != previous.var(v).id)
            throw std::invalid_argument("structural_prior: variable sets differ");
    std::set<std::pair<int, int>> a, b;
    for (auto e : dag.edges()) a.insert(e);
    for (auto e : previous.edges()) b.insert(e);
    int hamming = 0;
    for (auto e : a)
        if (!b.count(e)) ++hamming;
    for (auto e : b)
        if (!a.count(e)) ++hamming;
    return -lambda * hamming;
}

inline StructureScore score_structure(const CausalFaultGraph& dag, const logpipe::FeatureMatrix& fm,
                                      double ess, const CausalFaultGraph* previous, double lambda) {
    StructureScore s;
    for (int v = 0; v < dag.num_vars(); ++v) {
        double f = fm.columns[v].degenerate ? 0.0 : detail::family_score(fm, v, dag.parents(v), ess);
        s.family.push_back(f);
        s.total += f;
    }
    if (previous) {
        s.prior_penalty = structural_prior(dag, *previous, lambda);
        s.total += s.prior_penalty;
    }
    return s;
}

struct HillClimbResult {
    CausalFaultGraph graph;  // structure only; call fit_cpts for tables
    double total_score = 0.0;
    std::vector<double> accepted_gains;  // every accepted move's gain, in order
};

namespace detail {

struct SearchState {
    std::vector<int> cols;                // searchable column indices, ascending
    std::vector<std::vector<int>> pa;     // parent lists (searchable-local indices)
    std::set<std::pair<int, int>> edges;  // (from,to) local

    bool has_edge(int u, int v) const { return edges.count({u, v}) != 0; }

    bool would_cycle(int from, int to) const {
        if (from == to) return true;
        std::vector<int> stack{to};
        std::set<int> seen{to};
        while (!stack.empty()) {
            int x = stack.back();
            stack.pop_back();
            for (auto& [a, b] : edges) {
                if (a != x || seen.count(b)) continue;
                if (b == from) return true;
                seen.insert(b);
                stack.push_back(b);
            }
        }
        return false;
    }

    void add(int u, int v) {
        edges.insert({u, v});
        auto& ps = pa[v];
        ps.insert(std::upper_bound(ps.begin(), ps.end(), u), u);
    }
    void del(int u, int v) {
        edges.erase({u, v});
        auto& ps = pa[v];
        ps.erase(std::find(ps.begin(), ps.end(), u));
    }
};

}  // namespace detail

// Greedy add/delete/reverse search over DAGs with BDeu scoring plus the
// structural prior. The first round starts from the empty graph, later rounds
// from the previous graph; additional restarts perturb from random DAGs.
// Ties break by lexicographic (move-type, edge-id) order, so results are
// deterministic. Degenerate columns sit out the search and come back as
// disconnected variables.
inline HillClimbResult hill_climb(const logpipe::FeatureMatrix& fm, const CausalFaultGraph* previous,
                                  const LearnConfig& cfg) {
    if (fm.num_rows() == 0) throw std::invalid_argument("hill_climb: evidence is empty");

    // Degenerate columns sit out; so do columns with no observed variation.
    // A constant column carries no dependence signal, but BDeu's shrinking
    // pseudo-counts would still reward giving it parents.
    std::vector<int> cols;
    for (int c = 0; c < fm.num_cols(); ++c) {
        if (fm.columns[c].degenerate || fm.columns[c].arity < 2) continue;
        int first = logpipe::kMissingValue;
        bool varies = false;
        for (const auto& row : fm.rows) {
            if (row[c] == logpipe::kMissingValue) continue;
            if (first == logpipe::kMissingValue)
                first = row[c];
            else if (row[c] != first)
                varies = true;
        }
        if (varies) cols.push_back(c);
    }
    int n = static_cast<int>(cols.size());

    // Previous-round edges, in searchable-local indices.
    std::set<std::pair<int, int>> prev_edges;
    if (previous) {
        std::map<std::string, int> local;
        for (int i = 0; i < n; ++i) local[fm.columns[cols[i]].id] = i;
        for (auto [p, c] : previous->edges()) {
            auto pi = local.find(previous->var(p).id);
            auto ci = local.find(previous->var(c).id);
            if (pi != local.end() && ci != local.end()) prev_edges.insert({pi->second, ci->second});
        }
    }

    std::map<std::pair<int, std::vector<int>>, double> cache;
    auto family = [&](int local_child, const std::vector<int>& local_parents) {
        std::vector<int> ps;
        for (int p : local_parents) ps.push_back(cols[p]);
        auto key = std::make_pair(local_child, local_parents);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        double s = detail::family_score(fm, cols[local_child], ps, cfg.ess);
        cache.emplace(std::move(key), s);
        return s;
    };

    // Lexicographic order of variables by id, for deterministic tie-breaks.
    std::vector<int> lex(n);
    for (int i = 0; i < n; ++i) lex[i] = i;
    std::sort(lex.begin(), lex.end(),
              [&](int a, int b) { return fm.columns[cols[a]].id < fm.columns[cols[b]].id; });

    auto prior_delta = [&](int u, int v, int sign) {
        // sign +1 = edge (u,v) added, -1 = removed; returns score-prior change.
        if (cfg.lambda == 0.0 || !previous) return 0.0;
        bool in_prev = prev_edges.count({u, v}) != 0;
        double hamming_change = sign > 0 ? (in_prev ? -1.0 : 1.0) : (in_prev ? 1.0 : -1.0);
        return -cfg.lambda * hamming_change;
    };

    struct Best {
        detail::SearchState state;
        double score = -std::numeric_limits<double>::infinity();
        std::vector<double> gains;
        bool valid = false;
    } best;

    int restarts = std::max(1, cfg.restarts);
    for (int restart = 0; restart < restarts; ++restart) {
        detail::SearchState st;
        st.cols = cols;
        st.pa.assign(n, {});

        if (restart == 0) {
            for (auto [u, v] : prev_edges) st.add(u, v);
        } else {
            Rng rng(derive_seed(cfg.seed, "restart", restart));
            std::vector<int> order(n);
            for (int i = 0; i < n; ++i) order[i] = i;
            for (int i = n - 1; i > 0; --i)
                std::swap(order[i], order[static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)))]);
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j)
                    if (rng.bernoulli(0.15) &&
                        static_cast<int>(st.pa[order[j]].size()) < cfg.max_parents)
                        st.add(order[i], order[j]);
        }

        double score = 0.0;
        for (int v = 0; v < n; ++v) score += family(v, st.pa[v]);
        for (auto e : st.edges) score += prior_delta(e.first, e.second, +1);
        // Baseline prior: distance of the empty graph to previous.
        if (previous) score += -cfg.lambda * static_cast<double>(prev_edges.size());

        std::vector<double> gains;
        for (int iter = 0; iter < 4 * n * n + 64; ++iter) {
            double best_gain = cfg.eps;
            int best_move = -1, best_u = -1, best_v = -1;
            auto consider = [&](int move, int u, int v, double gain) {
                if (gain > best_gain) {
                    best_gain = gain;
                    best_move = move;
                    best_u = u;
                    best_v = v;
                }
            };
            // Moves in (move-type, orientation, from-id, to-id) order; the
            // strict '>' above keeps the earliest of tied candidates. Within
            // a Markov equivalence class the data cannot orient edges, so
            // among exact ties moves that point a fault indicator at a
            // context feature win: the planner's predictive push-forward
            // needs the generative direction.
            auto generative = [&](int u, int v) {
                return fm.columns[cols[u]].kind == VarKind::FaultIndicator &&
                       fm.columns[cols[v]].kind != VarKind::FaultIndicator;
            };
            for (int pass = 0; pass < 2; ++pass)
                for (int ui = 0; ui < n; ++ui)
                    for (int vi = 0; vi < n; ++vi) {
                        int u = lex[ui], v = lex[vi];
                        if (generative(u, v) != (pass == 0)) continue;
                        if (u == v || st.has_edge(u, v)) continue;
                        if (static_cast<int>(st.pa[v].size()) >= cfg.max_parents) continue;
                        if (st.would_cycle(u, v)) continue;
                        auto with = st.pa[v];
                        with.insert(std::upper_bound(with.begin(), with.end(), u), u);
                        consider(0, u, v, family(v, with) - family(v, st.pa[v]) + prior_delta(u, v, +1));
                    }
            for (int ui = 0; ui < n; ++ui)
                for (int vi = 0; vi < n; ++vi) {
                    int u = lex[ui], v = lex[vi];
                    if (!st.has_edge(u, v)) continue;
                    auto without = st.pa[v];
                    without.erase(std::find(without.begin(), without.end(), u));
                    consider(1, u, v, family(v, without) - family(v, st.pa[v]) + prior_delta(u, v, -1));
                }
            for (int pass = 0; pass < 2; ++pass)
                for (int ui = 0; ui < n; ++ui)
                    for (int vi = 0; vi < n; ++vi) {
                        int u = lex[ui], v = lex[vi];
                        if (generative(v, u) != (pass == 0)) continue;  // reversal creates v->u
                        if (!st.has_edge(u, v)) continue;
                        if (static_cast<int>(st.pa[u].size()) >= cfg.max_parents) continue;
                        st.del(u, v);
                        bool ok = !st.would_cycle(v, u);
                        st.add(u, v);
                        if (!ok) continue;
                        auto v_without = st.pa[v];
                        v_without.erase(std::find(v_without.begin(), v_without.end(), u));
                        auto u_with = st.pa[u];
                        u_with.insert(std::upper_bound(u_with.begin(), u_with.end(), v), v);
                        double gain = family(v, v_without) - family(v, st.pa[v]) + family(u, u_with) -
                                      family(u, st.pa[u]) + prior_delta(u, v, -1) + prior_delta(v, u, +1);
                        consider(2, u, v, gain);
                    }
            if (best_move < 0) break;
            if (best_move == 0) {
                st.add(best_u, best_v);
            } else if (best_move == 1) {
                st.del(best_u, best_v);
            } else {
                st.del(best_u, best_v);
                st.add(best_v, best_u);
            }
            score += best_gain;
            gains.push_back(best_gain);
        }

        if (!best.valid || score > best.score) {
            best.state = std::move(st);
            best.score = score;
            best.gains = std::move(gains);
            best.valid = true;
        }
    }

    HillClimbResult result;
    result.graph = graph_from_columns(fm);
    for (auto [u, v] : best.state.edges) result.graph.add_edge(cols[u], cols[v]);
    result.total_score = best.score;
    result.accepted_gains = std::move(best.gains);
    return result;
}

// Dirichlet-posterior-mean CPTs with BDeu pseudo-counts; rows with no data
// fall back to uniform (pure prior).
inline CausalFaultGraph fit_cpts(const CausalFaultGraph& dag, const logpipe::FeatureMatrix& fm, double ess) {
    if (dag.num_vars() != fm.num_cols())
        throw std::invalid_argument("fit_cpts: dag variables do not match evidence schema");
    CausalFaultGraph g = dag;
    for (int v = 0; v < g.num_vars(); ++v) {
        int r = g.var(v).arity;
        long q = g.parent_config_count(v);
        double a_ijk = ess / static_cast<double>(q * r);
        double a_ij = ess / static_cast<double>(q);
        std::vector<double> counts(static_cast<std::size_t>(q) * r, 0.0);
        for (const auto& row : fm.rows) {
            int cv = row[v];
            if (cv == logpipe::kMissingValue) continue;
            long j = 0;
            bool skip = false;
            for (int p : g.parents(v)) {
                if (row[p] == logpipe::kMissingValue) {
                    skip = true;
                    break;
                }
                j = j * g.var(p).arity + row[p];
            }
            if (skip) continue;
            counts[static_cast<std::size_t>(j) * r + cv] += 1.0;
        }
        std::vector<double> table(static_cast<std::size_t>(q) * r, 0.0);
        for (long j = 0; j < q; ++j) {
            double n_ij = 0.0;
            for (int k = 0; k < r; ++k) n_ij += counts[static_cast<std::size_t>(j) * r + k];
            for (int k = 0; k < r; ++k)
                table[static_cast<std::size_t>(j) * r + k] =
                    (counts[static_cast<std::size_t>(j) * r + k] + a_ijk) / (n_ij + a_ij);
        }
        g.set_cpt(v, std::move(table));
    }
    g.set_round_label(fm.round_label);
    return g;
}

}  // namespace crag::learn
