#include "pgm/junction.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace pgm {

UGraph UGraph::from_factor_graph(const FactorGraph& g) {
    UGraph u;
    for (VarId v : g.variables()) u.add_vertex(v);
    for (auto [a, b] : g.interaction_edges()) u.add_edge(a, b);
    return u;
}

UGraph UGraph::from_edges(const std::vector<VarId>& vertices,
                          const std::vector<std::pair<VarId, VarId>>& edges) {
    UGraph u;
    for (VarId v : vertices) u.add_vertex(v);
    for (auto [a, b] : edges) u.add_edge(a, b);
    return u;
}

void UGraph::add_vertex(VarId v) { adj_[v]; }

void UGraph::add_edge(VarId a, VarId b) {
    if (a == b) throw ValidationError("self-loop");
    adj_[a].insert(b);
    adj_[b].insert(a);
}

bool UGraph::has_edge(VarId a, VarId b) const {
    auto it = adj_.find(a);
    return it != adj_.end() && it->second.count(b) != 0;
}

const std::set<VarId>& UGraph::neighbors(VarId v) const {
    auto it = adj_.find(v);
    if (it == adj_.end()) throw ValidationError("unknown vertex " + std::to_string(v));
    return it->second;
}

std::vector<VarId> UGraph::vertices() const {
    std::vector<VarId> out;
    out.reserve(adj_.size());
    for (const auto& [v, _] : adj_) out.push_back(v);
    return out;
}

std::vector<std::pair<VarId, VarId>> UGraph::edges() const {
    std::vector<std::pair<VarId, VarId>> out;
    for (const auto& [v, nbrs] : adj_)
        for (VarId u : nbrs)
            if (v < u) out.emplace_back(v, u);
    return out;
}

namespace {

// Shortest path from s to t inside the vertex set `allowed`, or empty.
std::vector<VarId> bfs_path(const UGraph& g, VarId s, VarId t, const std::set<VarId>& allowed) {
    std::map<VarId, VarId> parent;
    std::deque<VarId> queue{s};
    parent[s] = s;
    while (!queue.empty()) {
        VarId v = queue.front();
        queue.pop_front();
        if (v == t) {
            std::vector<VarId> path{t};
            while (path.back() != s) path.push_back(parent[path.back()]);
            std::reverse(path.begin(), path.end());
            return path;
        }
        for (VarId u : g.neighbors(v)) {
            if (!allowed.count(u) || parent.count(u)) continue;
            parent[u] = v;
            queue.push_back(u);
        }
    }
    return {};
}

// A chordless cycle through some vertex v with two nonadjacent neighbors.
std::vector<VarId> find_chordless_cycle(const UGraph& g) {
    for (VarId v : g.vertices()) {
        const auto& nbrs = g.neighbors(v);
        for (auto i = nbrs.begin(); i != nbrs.end(); ++i) {
            for (auto j = std::next(i); j != nbrs.end(); ++j) {
                if (g.has_edge(*i, *j)) continue;
                // Connect the two neighbors while avoiding v and the rest of
                // N(v); a shortest such path closes a chordless cycle.
                std::set<VarId> allowed;
                for (VarId u : g.vertices()) allowed.insert(u);
                allowed.erase(v);
                for (VarId u : nbrs)
                    if (u != *i && u != *j) allowed.erase(u);
                auto path = bfs_path(g, *i, *j, allowed);
                if (!path.empty()) {
                    std::vector<VarId> cycle{v};
                    cycle.insert(cycle.end(), path.begin(), path.end());
                    return cycle;
                }
            }
        }
    }
    return {};
}

}  // namespace

ChordalityResult is_chordal(const UGraph& g) {
    ChordalityResult res;
    const auto vertices = g.vertices();
    const int n = static_cast<int>(vertices.size());

    // Maximum-cardinality search: repeatedly visit the vertex with the most
    // visited neighbors (ties to the lowest id). Reversing the visit order
    // gives a perfect elimination order iff the graph is chordal.
    std::map<VarId, int> weight;
    std::set<VarId> visited;
    for (VarId v : vertices) weight[v] = 0;
    std::vector<VarId> visit_order;
    for (int step = 0; step < n; ++step) {
        VarId best = 0;
        int best_w = -1;
        for (VarId v : vertices) {
            if (visited.count(v)) continue;
            if (weight[v] > best_w) {
                best = v;
                best_w = weight[v];
            }
        }
        visited.insert(best);
        visit_order.push_back(best);
        for (VarId u : g.neighbors(best))
            if (!visited.count(u)) ++weight[u];
    }

    std::vector<VarId> peo(visit_order.rbegin(), visit_order.rend());
    std::map<VarId, int> pos;
    for (int i = 0; i < n; ++i) pos[peo[static_cast<std::size_t>(i)]] = i;

    for (int i = 0; i < n; ++i) {
        VarId v = peo[static_cast<std::size_t>(i)];
        // Later neighbors must form a clique once their earliest member is fixed.
        VarId parent = 0;
        int parent_pos = n;
        for (VarId u : g.neighbors(v))
            if (pos[u] > i && pos[u] < parent_pos) {
                parent = u;
                parent_pos = pos[u];
            }
        if (parent_pos == n) continue;
        for (VarId u : g.neighbors(v)) {
            if (pos[u] > i && u != parent && !g.has_edge(parent, u)) {
                res.chordal = false;
                res.chordless_cycle = find_chordless_cycle(g);
                return res;
            }
        }
    }
    res.chordal = true;
    res.peo = std::move(peo);
    return res;
}

TriangulationResult triangulate(const UGraph& g, const EliminationOrder& order) {
    std::set<VarId> remaining;
    for (VarId v : g.vertices()) remaining.insert(v);
    for (VarId v : order)
        if (!remaining.count(v))
            throw ValidationError("triangulation order has an unknown or repeated vertex");
    if (order.size() != remaining.size())
        throw ValidationError("triangulation order must cover all vertices");

    TriangulationResult res;
    res.graph = g;
    std::map<VarId, std::set<VarId>> live;
    for (VarId v : g.vertices()) live[v] = g.neighbors(v);

    for (VarId v : order) {
        const auto nbrs = live[v];
        for (auto i = nbrs.begin(); i != nbrs.end(); ++i) {
            for (auto j = std::next(i); j != nbrs.end(); ++j) {
                if (!live[*i].count(*j)) {
                    live[*i].insert(*j);
                    live[*j].insert(*i);
                    res.graph.add_edge(*i, *j);
                    res.fill_edges.emplace_back(std::min(*i, *j), std::max(*i, *j));
                }
            }
        }
        for (VarId u : nbrs) live[u].erase(v);
        live.erase(v);
    }
    return res;
}

CliqueSet maximal_cliques(const UGraph& g) {
    auto chordality = is_chordal(g);
    if (!chordality.chordal)
        throw ValidationError("maximal_cliques requires a chordal graph");

    std::map<VarId, int> pos;
    for (int i = 0; i < static_cast<int>(chordality.peo.size()); ++i)
        pos[chordality.peo[static_cast<std::size_t>(i)]] = i;

    CliqueSet candidates;
    for (VarId v : chordality.peo) {
        std::vector<VarId> clique{v};
        for (VarId u : g.neighbors(v))
            if (pos[u] > pos[v]) clique.push_back(u);
        std::sort(clique.begin(), clique.end());
        candidates.push_back(std::move(clique));
    }

    CliqueSet cliques;
    for (const auto& c : candidates) {
        bool maximal = true;
        for (const auto& other : candidates) {
            if (&other == &c || other.size() <= c.size()) continue;
            if (std::includes(other.begin(), other.end(), c.begin(), c.end())) {
                maximal = false;
                break;
            }
        }
        if (maximal && std::find(cliques.begin(), cliques.end(), c) == cliques.end())
            cliques.push_back(c);
    }
    std::sort(cliques.begin(), cliques.end());
    return cliques;
}

JunctionTree JunctionTree::from_edges(CliqueSet cliques,
                                      const std::vector<std::pair<int, int>>& edge_list) {
    JunctionTree t;
    t.cliques = std::move(cliques);
    for (auto& c : t.cliques) std::sort(c.begin(), c.end());
    for (auto [a, b] : edge_list) {
        if (a == b || a < 0 || b < 0 || a >= static_cast<int>(t.cliques.size()) ||
            b >= static_cast<int>(t.cliques.size()))
            throw ValidationError("junction tree edge references an invalid clique");
        Edge e;
        e.a = std::min(a, b);
        e.b = std::max(a, b);
        std::set_intersection(t.cliques[static_cast<std::size_t>(e.a)].begin(),
                              t.cliques[static_cast<std::size_t>(e.a)].end(),
                              t.cliques[static_cast<std::size_t>(e.b)].begin(),
                              t.cliques[static_cast<std::size_t>(e.b)].end(),
                              std::back_inserter(e.separator));
        e.weight = static_cast<int>(e.separator.size());
        t.total_weight += e.weight;
        t.edges.push_back(std::move(e));
    }
    t.is_forest = t.edges.size() + 1 < t.cliques.size();
    return t;
}

std::vector<std::vector<int>> JunctionTree::adjacency() const {
    std::vector<std::vector<int>> adj(cliques.size());
    for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
        adj[static_cast<std::size_t>(edges[static_cast<std::size_t>(e)].a)].push_back(e);
        adj[static_cast<std::size_t>(edges[static_cast<std::size_t>(e)].b)].push_back(e);
    }
    return adj;
}

JunctionTree build_junction_tree(const CliqueSet& cliques) {
    CliqueSet sorted = cliques;
    for (auto& c : sorted) std::sort(c.begin(), c.end());

    struct Candidate {
        int weight, a, b;
    };
    std::vector<Candidate> candidates;
    for (int i = 0; i < static_cast<int>(sorted.size()); ++i) {
        for (int j = i + 1; j < static_cast<int>(sorted.size()); ++j) {
            std::vector<VarId> inter;
            std::set_intersection(sorted[static_cast<std::size_t>(i)].begin(),
                                  sorted[static_cast<std::size_t>(i)].end(),
                                  sorted[static_cast<std::size_t>(j)].begin(),
                                  sorted[static_cast<std::size_t>(j)].end(),
                                  std::back_inserter(inter));
            if (!inter.empty())
                candidates.push_back({static_cast<int>(inter.size()), i, j});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
        if (x.weight != y.weight) return x.weight > y.weight;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });

    std::vector<int> dsu(sorted.size());
    std::iota(dsu.begin(), dsu.end(), 0);
    auto find = [&](int x) {
        while (dsu[static_cast<std::size_t>(x)] != x) {
            dsu[static_cast<std::size_t>(x)] = dsu[static_cast<std::size_t>(dsu[static_cast<std::size_t>(x)])];
            x = dsu[static_cast<std::size_t>(x)];
        }
        return x;
    };

    std::vector<std::pair<int, int>> chosen;
    for (const auto& c : candidates) {
        int ra = find(c.a), rb = find(c.b);
        if (ra == rb) continue;
        dsu[static_cast<std::size_t>(ra)] = rb;
        chosen.emplace_back(c.a, c.b);
    }
    return JunctionTree::from_edges(std::move(sorted), chosen);
}

bool verify_running_intersection(const JunctionTree& t) {
    std::set<VarId> vertices;
    for (const auto& c : t.cliques) vertices.insert(c.begin(), c.end());
    auto adj = t.adjacency();

    for (VarId v : vertices) {
        std::set<int> holding;
        for (int i = 0; i < static_cast<int>(t.cliques.size()); ++i)
            if (std::binary_search(t.cliques[static_cast<std::size_t>(i)].begin(),
                                   t.cliques[static_cast<std::size_t>(i)].end(), v))
                holding.insert(i);
        if (holding.size() <= 1) continue;
        // BFS within the holding set.
        std::set<int> seen{*holding.begin()};
        std::deque<int> queue{*holding.begin()};
        while (!queue.empty()) {
            int c = queue.front();
            queue.pop_front();
            for (int e : adj[static_cast<std::size_t>(c)]) {
                int other = t.edges[static_cast<std::size_t>(e)].a == c
                                ? t.edges[static_cast<std::size_t>(e)].b
                                : t.edges[static_cast<std::size_t>(e)].a;
                if (holding.count(other) && !seen.count(other)) {
                    seen.insert(other);
                    queue.push_back(other);
                }
            }
        }
        if (seen.size() != holding.size()) return false;
    }
    return true;
}

Factor CliqueCalibration::variable_marginal(VarId v) const {
    for (std::size_t i = 0; i < cliques.size(); ++i) {
        if (std::binary_search(cliques[i].begin(), cliques[i].end(), v)) {
            Factor m = clique_marginals[i];
            for (VarId u : cliques[i])
                if (u != v) m = m.marginalize(u);
            return m.normalized();
        }
    }
    throw ValidationError("variable " + std::to_string(v) + " not covered by any clique");
}

Factor CliqueCalibration::pair_marginal(VarId a, VarId b) const {
    for (std::size_t i = 0; i < cliques.size(); ++i) {
        const auto& c = cliques[i];
        if (std::binary_search(c.begin(), c.end(), a) &&
            std::binary_search(c.begin(), c.end(), b)) {
            Factor m = clique_marginals[i];
            for (VarId u : c)
                if (u != a && u != b) m = m.marginalize(u);
            return Factor::ones({a, b}, {m.card(a), m.card(b)}).product(m).normalized();
        }
    }
    throw ValidationError("no clique contains both requested variables");
}

CliqueCalibration calibrate(const JunctionTree& t, const FactorGraph& g) {
    const int nc = static_cast<int>(t.cliques.size());
    if (nc == 0) throw ValidationError("empty junction tree");

    // Clique potentials: assigned factors multiplied onto an all-ones base.
    std::vector<Factor> potentials;
    potentials.reserve(static_cast<std::size_t>(nc));
    for (const auto& c : t.cliques) {
        std::vector<int> cards;
        cards.reserve(c.size());
        for (VarId v : c) cards.push_back(g.card(v));
        potentials.push_back(Factor::ones(c, cards));
    }

    double log_z = 0.0;
    for (const Factor& f : g.factors()) {
        auto scope = f.scope();
        std::vector<VarId> sorted_scope(scope.begin(), scope.end());
        std::sort(sorted_scope.begin(), sorted_scope.end());
        int home = -1;
        for (int i = 0; i < nc && home < 0; ++i)
            if (std::includes(t.cliques[static_cast<std::size_t>(i)].begin(),
                              t.cliques[static_cast<std::size_t>(i)].end(),
                              sorted_scope.begin(), sorted_scope.end()))
                home = i;
        if (home < 0)
            throw ValidationError("factor scope not contained in any clique");
        auto [lin, shift] = f.to_linear_shifted();
        log_z += shift;
        potentials[static_cast<std::size_t>(home)] =
            potentials[static_cast<std::size_t>(home)].product(lin);
    }

    auto adj = t.adjacency();
    // Messages over separators, one per direction of each tree edge:
    // index 2e = a->b, 2e+1 = b->a.
    std::vector<Factor> messages(2 * t.edges.size());
    std::vector<bool> have(2 * t.edges.size(), false);

    auto other_end = [&](int e, int c) {
        return t.edges[static_cast<std::size_t>(e)].a == c ? t.edges[static_cast<std::size_t>(e)].b
                                                           : t.edges[static_cast<std::size_t>(e)].a;
    };
    auto dir_index = [&](int e, int from) {
        return 2 * static_cast<std::size_t>(e) +
               (t.edges[static_cast<std::size_t>(e)].a == from ? 0u : 1u);
    };

    auto send = [&](int from, int e) {
        Factor m = potentials[static_cast<std::size_t>(from)];
        for (int e2 : adj[static_cast<std::size_t>(from)]) {
            if (e2 == e) continue;
            int nb = other_end(e2, from);
            std::size_t d = dir_index(e2, nb);
            if (!have[d]) throw ValidationError("calibration schedule error");
            m = m.product(messages[d]);
        }
        for (VarId v : t.cliques[static_cast<std::size_t>(from)])
            if (!std::binary_search(t.edges[static_cast<std::size_t>(e)].separator.begin(),
                                    t.edges[static_cast<std::size_t>(e)].separator.end(), v))
                m = m.marginalize(v);
        double s = m.sum();
        if (s <= 0.0) throw ZeroMassError("zero partition function");
        std::size_t d = dir_index(e, from);
        messages[d] = m.normalized();
        have[d] = true;
        return std::log(s);
    };

    // Per component: collect toward the lowest clique index, then distribute.
    std::vector<int> component(static_cast<std::size_t>(nc), -1);
    for (int root = 0; root < nc; ++root) {
        if (component[static_cast<std::size_t>(root)] >= 0) continue;
        // BFS order from the root.
        std::vector<int> order{root};
        std::vector<int> parent_edge(static_cast<std::size_t>(nc), -1);
        component[static_cast<std::size_t>(root)] = root;
        for (std::size_t qi = 0; qi < order.size(); ++qi) {
            int c = order[qi];
            for (int e : adj[static_cast<std::size_t>(c)]) {
                int nb = other_end(e, c);
                if (component[static_cast<std::size_t>(nb)] >= 0) continue;
                component[static_cast<std::size_t>(nb)] = root;
                parent_edge[static_cast<std::size_t>(nb)] = e;
                order.push_back(nb);
            }
        }
        // Collect: leaves to root.
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            int c = *it;
            int pe = parent_edge[static_cast<std::size_t>(c)];
            if (pe < 0) continue;
            log_z += send(c, pe);
        }
        // Root contribution.
        {
            Factor m = potentials[static_cast<std::size_t>(root)];
            for (int e : adj[static_cast<std::size_t>(root)])
                m = m.product(messages[dir_index(e, other_end(e, root))]);
            double s = m.sum();
            if (s <= 0.0) throw ZeroMassError("zero partition function");
            log_z += std::log(s);
        }
        // Distribute: root to leaves.
        for (int c : order) {
            int pe = parent_edge[static_cast<std::size_t>(c)];
            if (pe < 0) continue;
            send(other_end(pe, c), pe);
        }
    }

    CliqueCalibration cal;
    cal.cliques = t.cliques;
    cal.log_z = log_z;
    for (int c = 0; c < nc; ++c) {
        Factor b = potentials[static_cast<std::size_t>(c)];
        for (int e : adj[static_cast<std::size_t>(c)])
            b = b.product(messages[dir_index(e, other_end(e, c))]);
        cal.clique_marginals.push_back(b.normalized());
    }
    for (std::size_t e = 0; e < t.edges.size(); ++e) {
        Factor sep = cal.clique_marginals[static_cast<std::size_t>(t.edges[e].a)];
        for (VarId v : t.cliques[static_cast<std::size_t>(t.edges[e].a)])
            if (!std::binary_search(t.edges[e].separator.begin(), t.edges[e].separator.end(), v))
                sep = sep.marginalize(v);
        cal.separator_marginals.push_back(sep.normalized());
    }
    return cal;
}

}  // namespace pgm
