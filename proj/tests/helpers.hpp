#pragma once

// Shared generators and tiny oracles for the test suites.

#include <cmath>
#include <vector>

#include "pgm/bp.hpp"
#include "pgm/canonical.hpp"
#include "pgm/exact.hpp"
#include "pgm/graph.hpp"
#include "pgm/junction.hpp"
#include "pgm/learning.hpp"

namespace th {

using namespace pgm;

inline Factor random_factor(Rng& rng, std::vector<VarId> scope, std::vector<int> cards,
                            double lo = 0.1, double hi = 1.0) {
    std::size_t n = 1;
    for (int c : cards) n *= static_cast<std::size_t>(c);
    std::vector<double> table(n);
    for (double& v : table) v = rng.uniform(lo, hi);
    return Factor(std::move(scope), std::move(cards), std::move(table));
}

/// Random labeled tree over ids 1..n with node and edge factors.
inline FactorGraph random_tree_model(Rng& rng, int n, double lo = 0.1, double hi = 1.0) {
    FactorGraph g;
    for (int v = 1; v <= n; ++v) g.add_variable(v, 2);
    for (int v = 1; v <= n; ++v) g.add_factor(random_factor(rng, {v}, {2}, lo, hi));
    for (int v = 2; v <= n; ++v) {
        int parent = 1 + rng.uniform_int(v - 1);
        g.add_factor(random_factor(rng, {parent, v}, {2, 2}, lo, hi));
    }
    return g;
}

/// Random pairwise model over ids 1..n: a spanning tree plus extra edges.
inline FactorGraph random_pairwise_model(Rng& rng, int n, double extra_edge_prob = 0.3,
                                         double lo = 0.1, double hi = 1.0) {
    FactorGraph g;
    for (int v = 1; v <= n; ++v) g.add_variable(v, 2);
    for (int v = 1; v <= n; ++v) g.add_factor(random_factor(rng, {v}, {2}, lo, hi));
    for (int v = 2; v <= n; ++v)
        g.add_factor(random_factor(rng, {1 + rng.uniform_int(v - 1), v}, {2, 2}, lo, hi));
    for (int a = 1; a <= n; ++a)
        for (int b = a + 1; b <= n; ++b)
            if (rng.uniform01() < extra_edge_prob && g.neighbors(a).count(b) == 0)
                g.add_factor(random_factor(rng, {a, b}, {2, 2}, lo, hi));
    return g;
}

/// Random model with mixed factor arities (1..3) over ids 1..n.
inline FactorGraph random_model(Rng& rng, int n, double lo = 0.1, double hi = 1.0) {
    FactorGraph g;
    for (int v = 1; v <= n; ++v) g.add_variable(v, 2);
    for (int v = 1; v <= n; ++v) g.add_factor(random_factor(rng, {v}, {2}, lo, hi));
    int extra = 1 + rng.uniform_int(n);
    for (int f = 0; f < extra; ++f) {
        int arity = 2 + (n >= 3 ? rng.uniform_int(2) : 0);
        std::vector<VarId> scope;
        while (static_cast<int>(scope.size()) < arity) {
            VarId v = 1 + rng.uniform_int(n);
            bool dup = false;
            for (VarId s : scope) dup = dup || s == v;
            if (!dup) scope.push_back(v);
        }
        g.add_factor(random_factor(rng, scope, std::vector<int>(scope.size(), 2), lo, hi));
    }
    return g;
}

/// The five-variable model with maximal cliques {1,2,3}, {2,3,4}, {2,4,5},
/// with tables filled from the generator (alphabet size k).
inline FactorGraph clique_chain_model(Rng& rng, int k = 2) {
    FactorGraph g;
    for (int v = 1; v <= 5; ++v) g.add_variable(v, k);
    g.add_factor(random_factor(rng, {1, 2, 3}, {k, k, k}));
    g.add_factor(random_factor(rng, {2, 3, 4}, {k, k, k}));
    g.add_factor(random_factor(rng, {2, 4, 5}, {k, k, k}));
    return g;
}

inline std::vector<Assignment> all_assignments(const std::vector<VarId>& vars,
                                               const std::vector<int>& cards) {
    std::vector<Assignment> out;
    std::vector<int> digits(vars.size(), 0);
    while (true) {
        Assignment a;
        for (std::size_t i = 0; i < vars.size(); ++i) a.set(vars[i], digits[i]);
        out.push_back(a);
        int axis = static_cast<int>(vars.size()) - 1;
        while (axis >= 0 && ++digits[static_cast<std::size_t>(axis)] ==
                                cards[static_cast<std::size_t>(axis)]) {
            digits[static_cast<std::size_t>(axis)] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
    return out;
}

inline std::vector<Assignment> all_assignments(const FactorGraph& g) {
    std::vector<int> cards;
    for (VarId v : g.variables()) cards.push_back(g.card(v));
    return all_assignments(g.variables(), cards);
}

/// Graph diameter (max BFS eccentricity) of the interaction graph.
inline int interaction_diameter(const FactorGraph& g) {
    int diam = 0;
    for (VarId s : g.variables()) {
        std::map<VarId, int> dist{{s, 0}};
        std::vector<VarId> queue{s};
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            VarId v = queue[qi];
            for (VarId u : g.neighbors(v)) {
                if (dist.count(u)) continue;
                dist[u] = dist[v] + 1;
                diam = std::max(diam, dist[u]);
                queue.push_back(u);
            }
        }
    }
    return diam;
}

inline double slope_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace th
