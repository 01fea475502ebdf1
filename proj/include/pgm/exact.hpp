#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pgm/graph.hpp"

namespace pgm {

/// Elimination order: the non-query variables in the order they are summed
/// or maxed out.
using EliminationOrder = std::vector<VarId>;

enum class ElimMode { Sum, Max };
enum class OrderHeuristic { MinDegree, MinFill };

struct BruteForceStats {
    std::uint64_t table_ops = 0;
};

/// Full enumeration of the joint. Guarded by the total state count.
Distribution brute_force(const FactorGraph& g, double state_guard = double(1 << 24),
                         BruteForceStats* stats = nullptr);

struct EliminationStep {
    VarId eliminated;
    std::vector<VarId> product_scope;  // scope of the combined factor, incl. the variable
};

/// Argmax trace of one max-mode elimination step; `argmax` is indexed like a
/// row-major table over (scope, cards).
struct EliminationTrace {
    VarId eliminated;
    std::vector<VarId> scope;
    std::vector<int> cards;
    std::vector<int> argmax;
};

struct EliminationReport {
    ElimMode mode = ElimMode::Sum;
    VarId query = 0;
    Factor result;                 // over the query variable, linear domain
    double log_shift = 0.0;        // true result = result * exp(log_shift)
    int max_intermediate_scope = 0;
    std::vector<EliminationStep> steps;
    std::uint64_t table_ops = 0;
    std::vector<EliminationTrace> traces;  // max mode only

    /// Sum mode: log partition function recovered from the query factor.
    double log_z() const;
    /// Sum mode: normalized marginal of the query variable.
    Factor marginal() const;
    /// Max mode: log of the maximum joint weight.
    double max_log_weight() const;
};

/// Eliminates `order` from the graph in the given mode; `order` must cover
/// exactly the non-query variables.
EliminationReport eliminate(const FactorGraph& g, VarId query, const EliminationOrder& order,
                            ElimMode mode);

/// Recovers a maximizing assignment from a max-mode report.
Assignment map_backtrack(const EliminationReport& report);

/// Greedy elimination order over the non-query variables (ties to the lowest
/// variable id). Pass no query to order every variable.
EliminationOrder find_order(const FactorGraph& g, OrderHeuristic heuristic,
                            std::optional<VarId> query = std::nullopt);

/// Max count of variables co-active with the eliminated one, over a full
/// order; equals the largest intermediate scope minus one.
int induced_width(const FactorGraph& g, const EliminationOrder& order);

}  // namespace pgm
