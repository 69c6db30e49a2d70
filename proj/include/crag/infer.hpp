#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crag/graph.hpp"

namespace crag::infer {

// Clamped context evidence plus the latent complement (fault indicators are
// always latent at inference time; history is where they were observed).
struct InferenceProblem {
    const CausalFaultGraph* graph = nullptr;
    std::map<int, int> evidence;  // variable index -> observed value
    std::vector<int> latents;     // ascending variable indices
};

inline InferenceProblem make_problem(const CausalFaultGraph& graph,
                                     const std::map<std::string, int>& evidence_by_id) {
    InferenceProblem p;
    p.graph = &graph;
    for (const auto& [id, value] : evidence_by_id) {
        int v = graph.index_of(id);
        if (value < 0 || value >= graph.var(v).arity)
            throw std::invalid_argument("evidence value out of range for '" + id + "'");
        p.evidence[v] = value;
    }
    for (int v = 0; v < graph.num_vars(); ++v)
        if (!p.evidence.count(v)) p.latents.push_back(v);
    return p;
}

// Factored marginal belief over the latent variables plus the attained
// variational free energy.
struct Belief {
    std::vector<int> vars;  // latent indices, ascending
    std::vector<std::vector<double>> marginals;
    double free_energy = std::numeric_limits<double>::quiet_NaN();
    int sweeps = 0;
    bool converged = false;
    std::vector<double> f_trace;  // free energy after each sweep

    int slot_of(int var) const {
        auto it = std::lower_bound(vars.begin(), vars.end(), var);
        if (it == vars.end() || *it != var) throw std::out_of_range("belief has no such latent");
        return static_cast<int>(it - vars.begin());
    }
    const std::vector<double>& marginal(int var) const { return marginals[slot_of(var)]; }
};

inline Belief uniform_belief(const InferenceProblem& p) {
    Belief b;
    b.vars = p.latents;
    for (int v : p.latents)
        b.marginals.emplace_back(p.graph->var(v).arity, 1.0 / p.graph->var(v).arity);
    return b;
}

struct InferStats {
    long long family_reads = 0;   // CPT families touched across all updates
    long long updates = 0;        // single-variable coordinate updates
    bool locality_ok = true;      // every update read only Markov-blanket vars
};

struct InferOptions {
    double tol = 1e-6;
    int max_sweeps = 100;
    InferStats* stats = nullptr;
};

namespace detail {

struct Family {
    int child;
    std::vector<int> members;  // child + parents, ascending
};

inline std::vector<Family> families_of(const CausalFaultGraph& g) {
    std::vector<Family> fams;
    for (int v = 0; v < g.num_vars(); ++v) {
        Family f;
        f.child = v;
        f.members = g.parents(v);
        f.members.insert(std::upper_bound(f.members.begin(), f.members.end(), v), v);
        fams.push_back(std::move(f));
    }
    return fams;
}

// Expectation of ln P(child | parents) for one family under the mean-field
// product, with `pin` (if any) fixing one variable's value. Returns -inf when
// a positive-weight configuration hits a zero CPT entry.
inline double expected_log_family(const CausalFaultGraph& g, const Family& fam,
                                  const std::map<int, int>& evidence, const Belief& b, int pin_var,
                                  int pin_value, std::set<int>* touched) {
    std::vector<int> free_vars;
    std::vector<int> assignment(g.num_vars(), -1);
    for (int m : fam.members) {
        if (m == pin_var) {
            assignment[m] = pin_value;
        } else if (auto it = evidence.find(m); it != evidence.end()) {
            assignment[m] = it->second;
            if (touched) touched->insert(m);
        } else {
            free_vars.push_back(m);
            if (touched) touched->insert(m);
        }
    }
    double total = 0.0;
    std::vector<int> idx(free_vars.size(), 0);
    while (true) {
        double w = 1.0;
        for (std::size_t i = 0; i < free_vars.size(); ++i) {
            assignment[free_vars[i]] = idx[i];
            w *= b.marginal(free_vars[i])[idx[i]];
        }
        if (w > 0.0) {
            double p = g.prob(fam.child, assignment[fam.child], assignment);
            if (p <= 0.0) return -std::numeric_limits<double>::infinity();
            total += w * std::log(p);
        }
        std::size_t k = 0;
        for (; k < free_vars.size(); ++k) {
            if (++idx[k] < g.var(free_vars[k]).arity) break;
            idx[k] = 0;
        }
        if (k == free_vars.size()) break;
    }
    return total;
}

}  // namespace detail

// Variational free energy of a factored belief: E_Q[ln Q] minus the expected
// log of every CPT family, exact under the mean-field factorization.
inline double free_energy(const InferenceProblem& p, const Belief& b) {
    const auto& g = *p.graph;
    double entropy_term = 0.0;
    for (const auto& m : b.marginals)
        for (double q : m)
            if (q > 0.0) entropy_term += q * std::log(q);

    double cross = 0.0;
    for (const auto& fam : detail::families_of(g)) {
        double e = detail::expected_log_family(g, fam, p.evidence, b, -1, -1, nullptr);
        if (!std::isfinite(e))
            throw ModelMisfitError("free_energy: clamped evidence has zero probability under the model");
        cross += e;
    }
    return entropy_term - cross;
}

// Free energy of an arbitrary joint distribution over the latent configs
// (mixed radix, first latent most significant). This is the oracle route: at
// the exact posterior it equals -ln P(evidence) for any model.
inline double free_energy_joint(const InferenceProblem& p, const std::vector<double>& joint) {
    const auto& g = *p.graph;
    std::vector<int> assignment(g.num_vars(), -1);
    for (const auto& [v, val] : p.evidence) assignment[v] = val;

    double f = 0.0;
    std::vector<int> idx(p.latents.size(), 0);
    std::size_t flat = 0;
    while (true) {
        double q = joint.at(flat);
        if (q > 0.0) {
            for (std::size_t i = 0; i < p.latents.size(); ++i) assignment[p.latents[i]] = idx[i];
            double logp = 0.0;
            for (int v = 0; v < g.num_vars(); ++v) {
                double pv = g.prob(v, assignment[v], assignment);
                if (pv <= 0.0) throw ModelMisfitError("free_energy_joint: belief mass on zero-probability config");
                logp += std::log(pv);
            }
            f += q * (std::log(q) - logp);
        }
        std::size_t k = idx.size();
        while (k > 0) {
            --k;
            if (++idx[k] < g.var(p.latents[k]).arity) break;
            idx[k] = 0;
            if (k == 0) return f;
        }
        if (idx.empty()) return f;
        flat += 1;
    }
}

// Coordinate-ascent mean field: each latent is refreshed in topological order
// from the freshest neighbor marginals; an update reads only the families
// containing that variable, i.e. only its Markov blanket.
inline Belief minimize_free_energy(const InferenceProblem& p, const Belief* init, const InferOptions& opts) {
    if (opts.tol <= 0.0) throw std::invalid_argument("minimize_free_energy: tol must be > 0");
    const auto& g = *p.graph;
    Belief b = init ? *init : uniform_belief(p);
    if (b.vars != p.latents) throw std::invalid_argument("minimize_free_energy: init covers wrong latents");
    b.sweeps = 0;
    b.converged = false;
    b.f_trace.clear();

    auto fams = detail::families_of(g);
    std::vector<std::vector<int>> touching(g.num_vars());
    for (std::size_t fi = 0; fi < fams.size(); ++fi)
        for (int m : fams[fi].members)
            if (!p.evidence.count(m)) touching[m].push_back(static_cast<int>(fi));

    std::vector<int> order;
    for (int v : g.topo_order())
        if (!p.evidence.count(v)) order.push_back(v);

    for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
        double max_delta = 0.0;
        for (int v : order) {
            int r = g.var(v).arity;
            std::set<int> touched;
            std::vector<double> score(r, 0.0);
            for (int fi : touching[v]) {
                if (opts.stats) opts.stats->family_reads += 1;
                for (int k = 0; k < r; ++k) {
                    if (!std::isfinite(score[k])) continue;
                    score[k] += detail::expected_log_family(g, fams[fi], p.evidence, b, v, k,
                                                            opts.stats ? &touched : nullptr);
                }
            }
            double lz = logsumexp(score);
            if (!std::isfinite(lz))
                throw ModelMisfitError("minimize_free_energy: no latent value is consistent with evidence");
            int slot = b.slot_of(v);
            double sum = 0.0;
            std::vector<double> fresh(r);
            for (int k = 0; k < r; ++k) {
                fresh[k] = std::exp(score[k] - lz);
                sum += fresh[k];
            }
            for (int k = 0; k < r; ++k) {
                fresh[k] /= sum;
                max_delta = std::max(max_delta, std::abs(fresh[k] - b.marginals[slot][k]));
            }
            b.marginals[slot] = std::move(fresh);
            if (opts.stats) {
                opts.stats->updates += 1;
                touched.erase(v);
                auto mb = g.markov_blanket(v);
                for (int t : touched)
                    if (!std::binary_search(mb.begin(), mb.end(), t)) opts.stats->locality_ok = false;
            }
        }
        b.sweeps = sweep;
        b.free_energy = free_energy(p, b);
        b.f_trace.push_back(b.free_energy);
        if (max_delta < opts.tol) {
            b.converged = true;
            break;
        }
    }
    return b;
}

inline Belief minimize_free_energy(const InferenceProblem& p, const InferOptions& opts = {}) {
    return minimize_free_energy(p, nullptr, opts);
}

struct ExactPosterior {
    Belief belief;              // exact marginals; free_energy = -ln P(evidence)
    std::vector<double> joint;  // normalized joint over latent configs
    double neg_log_evidence = 0.0;
};

// Brute-force enumeration oracle, bounded at 2^20 binary-equivalent latents.
inline ExactPosterior exact_posterior(const InferenceProblem& p) {
    const auto& g = *p.graph;
    double bits = 0.0;
    for (int v : p.latents) bits += std::log2(static_cast<double>(g.var(v).arity));
    if (bits > 20.0 + 1e-9)
        throw SizeError("exact_posterior: more than 20 binary-equivalent latent variables");

    std::size_t configs = 1;
    for (int v : p.latents) configs *= static_cast<std::size_t>(g.var(v).arity);

    ExactPosterior out;
    out.belief.vars = p.latents;
    for (int v : p.latents) out.belief.marginals.emplace_back(g.var(v).arity, 0.0);
    out.joint.assign(configs, 0.0);

    std::vector<int> assignment(g.num_vars(), -1);
    for (const auto& [v, val] : p.evidence) assignment[v] = val;

    std::vector<int> idx(p.latents.size(), 0);
    double z = 0.0;
    for (std::size_t flat = 0; flat < configs; ++flat) {
        for (std::size_t i = 0; i < p.latents.size(); ++i) assignment[p.latents[i]] = idx[i];
        double pr = 1.0;
        for (int v = 0; v < g.num_vars() && pr > 0.0; ++v) pr *= g.prob(v, assignment[v], assignment);
        out.joint[flat] = pr;
        z += pr;
        for (std::size_t i = 0; i < p.latents.size(); ++i)
            out.belief.marginals[i][idx[i]] += pr;
        std::size_t k = idx.size();
        while (k > 0) {
            --k;
            if (++idx[k] < g.var(p.latents[k]).arity) break;
            idx[k] = 0;
        }
    }
    if (z <= 0.0) throw ModelMisfitError("exact_posterior: evidence has zero probability under the model");
    for (auto& x : out.joint) x /= z;
    for (auto& m : out.belief.marginals)
        for (auto& x : m) x /= z;
    out.neg_log_evidence = -std::log(z);
    out.belief.free_energy = out.neg_log_evidence;
    out.belief.converged = true;
    return out;
}

// P(f | blanket assignment) via the product of f's own family and its
// children's families; reads nothing outside the blanket.
inline std::vector<double> blanket_posterior(const CausalFaultGraph& g, int v,
                                             const std::map<int, int>& assignment) {
    std::vector<int> values(g.num_vars(), -1);
    auto need = [&](int u) {
        auto it = assignment.find(u);
        if (it == assignment.end())
            throw std::invalid_argument("blanket_posterior: missing assignment for '" + g.var(u).id + "'");
        values[u] = it->second;
    };
    for (int p : g.parents(v)) need(p);
    auto children = g.children(v);
    for (int c : children) {
        need(c);
        for (int p : g.parents(c))
            if (p != v) need(p);
    }

    int r = g.var(v).arity;
    std::vector<double> post(r, 0.0);
    double z = 0.0;
    for (int k = 0; k < r; ++k) {
        values[v] = k;
        double pr = g.prob(v, k, values);
        for (int c : children) pr *= g.prob(c, values[c], values);
        post[k] = pr;
        z += pr;
    }
    if (z <= 0.0) throw ModelMisfitError("blanket_posterior: blanket assignment has zero probability");
    for (auto& x : post) x /= z;
    return post;
}

struct Attribution {
    double hw_score = 0.0;
    double sw_score = 0.0;
    std::string label;  // "hardware", "software", or "undetermined"
};

// Conditional marginalization by context kind: the fault's posterior with
// only hardware-context (resp. software-context) evidence clamped. Exact by
// enumeration on tractable nets, mean field beyond the size bound.
inline Attribution attribute_origin(const InferenceProblem& p, const Belief& belief, int fault_var,
                                    const InferOptions& opts = {}) {
    const auto& g = *p.graph;
    auto run = [&](VarKind keep) {
        InferenceProblem sub;
        sub.graph = p.graph;
        for (const auto& [v, val] : p.evidence)
            if (g.var(v).kind == keep) sub.evidence[v] = val;
        double bits = 0.0;
        for (int v = 0; v < g.num_vars(); ++v)
            if (!sub.evidence.count(v)) {
                sub.latents.push_back(v);
                bits += std::log2(static_cast<double>(g.var(v).arity));
            }
        if (bits <= 20.0) return exact_posterior(sub).belief.marginal(fault_var)[1];
        Belief init = uniform_belief(sub);
        for (std::size_t i = 0; i < init.vars.size(); ++i) {
            auto it = std::lower_bound(belief.vars.begin(), belief.vars.end(), init.vars[i]);
            if (it != belief.vars.end() && *it == init.vars[i])
                init.marginals[i] = belief.marginals[it - belief.vars.begin()];
        }
        InferOptions local = opts;
        local.stats = nullptr;
        Belief q = minimize_free_energy(sub, &init, local);
        return q.marginal(fault_var)[1];
    };
    Attribution a;
    a.hw_score = run(VarKind::HwContext);
    a.sw_score = run(VarKind::SwContext);
    if (std::abs(a.hw_score - a.sw_score) < 0.05)
        a.label = "undetermined";
    else
        a.label = a.hw_score > a.sw_score ? "hardware" : "software";
    return a;
}

}  // namespace crag::infer
