#pragma once

#include <map>
#include <set>
#include <utility>
#include <vector>

#include "pgm/exact.hpp"
#include "pgm/graph.hpp"

namespace pgm {

/// Simple undirected graph over variable ids.
class UGraph {
public:
    UGraph() = default;
    static UGraph from_factor_graph(const FactorGraph& g);
    static UGraph from_edges(const std::vector<VarId>& vertices,
                             const std::vector<std::pair<VarId, VarId>>& edges);

    void add_vertex(VarId v);
    void add_edge(VarId a, VarId b);
    bool has_vertex(VarId v) const { return adj_.count(v) != 0; }
    bool has_edge(VarId a, VarId b) const;
    const std::set<VarId>& neighbors(VarId v) const;
    std::vector<VarId> vertices() const;
    int num_vertices() const { return static_cast<int>(adj_.size()); }
    std::vector<std::pair<VarId, VarId>> edges() const;

private:
    std::map<VarId, std::set<VarId>> adj_;
};

struct ChordalityResult {
    bool chordal = false;
    /// Perfect elimination order when chordal.
    std::vector<VarId> peo;
    /// A chordless cycle of length >= 4 when not chordal.
    std::vector<VarId> chordless_cycle;
};

/// Maximum-cardinality search test.
ChordalityResult is_chordal(const UGraph& g);

struct TriangulationResult {
    UGraph graph;
    std::vector<std::pair<VarId, VarId>> fill_edges;
};

/// Adds the fill edges implied by eliminating `order` (which must cover all
/// vertices); the output is chordal.
TriangulationResult triangulate(const UGraph& g, const EliminationOrder& order);

/// Maximal cliques, each sorted, listed lexicographically. Requires chordal
/// input.
using CliqueSet = std::vector<std::vector<VarId>>;
CliqueSet maximal_cliques(const UGraph& g);

struct JunctionTree {
    struct Edge {
        int a = 0, b = 0;  // clique indices, a < b
        std::vector<VarId> separator;
        int weight = 0;
    };

    CliqueSet cliques;
    std::vector<Edge> edges;
    int total_weight = 0;
    /// True when the clique graph was disconnected and a spanning forest was
    /// returned instead of a tree.
    bool is_forest = false;

    std::vector<std::vector<int>> adjacency() const;  // per clique: (neighbor, via edge) pairs? indices into edges
    static JunctionTree from_edges(CliqueSet cliques, const std::vector<std::pair<int, int>>& edges);
};

/// Maximum-weight spanning tree over the clique graph (Kruskal, weights
/// |c1 ∩ c2|, descending; equal weights resolved lexicographically on the
/// clique index pair).
JunctionTree build_junction_tree(const CliqueSet& cliques);

/// Checks that, for every vertex, the cliques containing it induce a
/// connected subtree.
bool verify_running_intersection(const JunctionTree& t);

/// Exact clique and separator marginals from a two-pass sum-product sweep.
struct CliqueCalibration {
    CliqueSet cliques;
    std::vector<Factor> clique_marginals;     // normalized, one per clique
    std::vector<Factor> separator_marginals;  // one per tree edge
    double log_z = 0.0;

    /// Single-variable marginal, projected from the first clique containing v.
    Factor variable_marginal(VarId v) const;
    /// Pairwise marginal over (a, b); requires some clique containing both.
    Factor pair_marginal(VarId a, VarId b) const;
};

/// Every factor scope of g must fit inside some clique of t (assigned to the
/// smallest containing clique index).
CliqueCalibration calibrate(const JunctionTree& t, const FactorGraph& g);

}  // namespace pgm
