#pragma once

#include <map>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pgm/graph.hpp"

namespace pgm {

/// Pairwise view of a factor graph: one node potential per variable (product
/// of its unary factors) and one edge potential per interacting pair
/// (product of the pairwise factors over it). Requires factor arities <= 2.
struct PairwiseModel {
    std::vector<VarId> vars;
    std::vector<int> cards;
    std::vector<std::vector<double>> phi;           // linear node potentials
    std::vector<std::pair<VarId, VarId>> edges;     // i < j, sorted
    std::vector<Factor> psi;                        // scope (i, j)
    std::vector<std::vector<int>> adjacency;        // per var index: incident edge indices

    static PairwiseModel from(const FactorGraph& g);

    int var_index(VarId v) const;
    int edge_index(VarId a, VarId b) const;  // -1 when absent
    double psi_at(int edge, VarId from, int x_from, int x_to) const;

private:
    std::unordered_map<VarId, int> var_index_;
    std::map<std::pair<VarId, VarId>, int> edge_index_;
};

/// Directed pairwise messages m_{i->j}(x_j), normalized to sum 1.
struct MessageSet {
    std::vector<std::pair<VarId, VarId>> edges;  // i < j
    /// msg[2e] = i->j (over card j), msg[2e+1] = j->i (over card i).
    std::vector<std::vector<double>> msg;
    int iterations = 0;

    const std::vector<double>& message(VarId from, VarId to) const;

private:
    friend struct PairwiseRunner;
    std::map<std::pair<VarId, VarId>, std::size_t> dir_index_;

public:
    void rebuild_index();
};

struct Beliefs {
    std::map<VarId, std::vector<double>> node;                 // mu_i
    std::map<std::pair<VarId, VarId>, Factor> edge;            // mu_ij, key i < j
};

struct ConvergenceReport {
    bool converged = false;
    int iterations = 0;
    double final_change = 0.0;
    std::vector<double> trajectory;  // L-inf message change per iteration
    /// Geometric mean of the last few ratios of successive changes.
    double rho_hat = 0.0;
};

enum class Schedule { Synchronous, Sequential };

struct BpOptions {
    double damping = 0.0;   // m <- (1-damping)*new + damping*old
    double tol = 1e-9;
    int max_iter = 0;       // 0 = 10 * N * diameter estimate
    Schedule schedule = Schedule::Synchronous;
};

struct SumProductResult {
    MessageSet messages;
    Beliefs beliefs;
    ConvergenceReport report;
};

SumProductResult run_sum_product(const FactorGraph& g, const BpOptions& options = {});

struct MaxSumResult {
    MessageSet messages;  // max-product messages, normalized to sum 1
    Assignment assignment;
    ConvergenceReport report;
};

/// Max-sum (log-domain max-product). The assignment is decoded from the node
/// max-beliefs, conditioning each variable on already-decoded neighbors so
/// that ties resolve consistently; ties pick the lowest state.
MaxSumResult run_max_sum(const FactorGraph& g, const BpOptions& options = {});

/// Factor-graph messages for arbitrary arities: one pair of directed
/// messages per (factor, scope slot).
struct FgMessageSet {
    /// to_factor[f][s] = m_{var->f}, to_var[f][s] = m_{f->var}, both over the
    /// card of the scope variable in slot s.
    std::vector<std::vector<std::vector<double>>> to_factor;
    std::vector<std::vector<std::vector<double>>> to_var;
    int iterations = 0;
};

struct FactorGraphSpResult {
    FgMessageSet messages;
    Beliefs beliefs;  // node beliefs only
    ConvergenceReport report;
};

FactorGraphSpResult run_factor_graph_sp(const FactorGraph& g, const BpOptions& options = {});

/// Node and edge beliefs induced by a pairwise message set.
Beliefs edge_beliefs(const MessageSet& m, const FactorGraph& g);

struct BetheResult {
    double f_bethe = 0.0;
    double energy = 0.0;
    double entropy = 0.0;
    std::map<VarId, int> degrees;
};

/// F = sum_i (1-d_i)(H(mu_i) + E[log phi_i]) + sum_ij (H(mu_ij) +
/// E[log psi_ij + log phi_i + log phi_j]); 0 log 0 reads as 0.
BetheResult bethe_free_energy(const Beliefs& beliefs, const FactorGraph& g);

struct HardcoreDescentResult {
    std::vector<VarId> vars;
    std::vector<double> y;          // occupation probabilities at the best iterate
    double best_f = 0.0;
    std::vector<double> trajectory; // F per iteration
    long iterations = 0;
    long budget = 0;                // n^2 2^d / eps^4, capped at max_t
};

/// Projected gradient ascent of the Bethe free energy of a hardcore model
/// (phi_i = 1, psi_ij = 1 - x_i x_j), parameterized by per-node occupation
/// probabilities; step size 1/(sqrt(t) 2^d), clipping to [delta, 1-delta].
HardcoreDescentResult hardcore_bethe_descent(const FactorGraph& g, double eps, long max_t);

}  // namespace pgm
