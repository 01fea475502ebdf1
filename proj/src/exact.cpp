#include "pgm/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "pgm/kernels.hpp"

namespace pgm {

namespace {

// Linear-domain working copies; log factors are exponentiated with a max
// shift, accumulated so partition functions stay exact.
std::pair<std::vector<Factor>, double> linearized(const FactorGraph& g) {
    std::vector<Factor> out;
    out.reserve(g.factors().size());
    double shift = 0.0;
    for (const Factor& f : g.factors()) {
        auto [lin, s] = f.to_linear_shifted();
        out.push_back(std::move(lin));
        shift += s;
    }
    return {std::move(out), shift};
}

}  // namespace

Distribution brute_force(const FactorGraph& g, double state_guard, BruteForceStats* stats) {
    if (g.num_variables() == 0) throw ValidationError("empty graph");
    double states_d = g.state_space_size();
    if (states_d > state_guard)
        throw IntractableError("state space of " + std::to_string(states_d) +
                               " joint states exceeds the brute-force guard");
    auto [factors, shift] = linearized(g);

    const auto& vars = g.variables();
    std::vector<int> cards;
    cards.reserve(vars.size());
    for (VarId v : vars) cards.push_back(g.card(v));
    const std::size_t n = static_cast<std::size_t>(states_d);

    // Per-factor strides along each global odometer axis.
    std::vector<std::vector<std::size_t>> strides(factors.size());
    std::vector<std::size_t> fidx(factors.size(), 0);
    for (std::size_t fi = 0; fi < factors.size(); ++fi) {
        const Factor& f = factors[fi];
        strides[fi].assign(vars.size(), 0);
        std::size_t s = 1;
        for (int i = static_cast<int>(f.scope().size()) - 1; i >= 0; --i) {
            auto pos = std::find(vars.begin(), vars.end(), f.scope()[i]) - vars.begin();
            strides[fi][static_cast<std::size_t>(pos)] = s;
            s *= static_cast<std::size_t>(f.cards()[i]);
        }
    }

    std::vector<double> joint(n);
    std::vector<int> digits(vars.size(), 0);
    std::uint64_t ops = 0;
    for (std::size_t lin = 0; lin < n; ++lin) {
        double w = 1.0;
        for (std::size_t fi = 0; fi < factors.size(); ++fi) w *= factors[fi].table()[fidx[fi]];
        joint[lin] = w;
        ops += factors.size() + 1;
        for (int a = static_cast<int>(vars.size()) - 1; a >= 0; --a) {
            for (std::size_t fi = 0; fi < factors.size(); ++fi) fidx[fi] += strides[fi][a];
            if (++digits[a] < cards[a]) break;
            for (std::size_t fi = 0; fi < factors.size(); ++fi)
                fidx[fi] -= strides[fi][a] * static_cast<std::size_t>(cards[a]);
            digits[a] = 0;
        }
    }
    if (stats) stats->table_ops = ops;

    double z = kernels::sum(joint.data(), joint.size());
    if (z <= 0.0)
        throw ZeroMassError("joint is identically zero (contradictory hard constraints)");
    kernels::scale(joint.data(), 1.0 / z, joint.size());
    return Distribution(vars, cards, std::move(joint), std::log(z) + shift);
}

double EliminationReport::log_z() const {
    if (mode != ElimMode::Sum) throw ValidationError("log_z requires a sum-mode report");
    double s = result.sum();
    if (s <= 0.0) throw ZeroMassError("partition function is zero");
    return std::log(s) + log_shift;
}

Factor EliminationReport::marginal() const {
    if (mode != ElimMode::Sum) throw ValidationError("marginal requires a sum-mode report");
    return result.normalized();
}

double EliminationReport::max_log_weight() const {
    if (mode != ElimMode::Max) throw ValidationError("max_log_weight requires a max-mode report");
    double m = result.max_value();
    if (m <= 0.0) throw ZeroMassError("all assignments have zero weight");
    return std::log(m) + log_shift;
}

EliminationReport eliminate(const FactorGraph& g, VarId query, const EliminationOrder& order,
                            ElimMode mode) {
    if (!g.has_variable(query)) throw ValidationError("unknown query variable");
    std::set<VarId> seen;
    for (VarId v : order) {
        if (v == query) throw ValidationError("elimination order contains the query variable");
        if (!g.has_variable(v)) throw ValidationError("unknown variable in elimination order");
        if (!seen.insert(v).second)
            throw ValidationError("duplicate variable in elimination order");
    }
    if (seen.size() + 1 != static_cast<std::size_t>(g.num_variables()))
        throw ValidationError("elimination order does not cover the non-query variables");

    EliminationReport report;
    report.mode = mode;
    report.query = query;

    auto [pool, shift] = linearized(g);
    report.log_shift = shift;
    for (const Factor& f : pool)
        report.max_intermediate_scope =
            std::max(report.max_intermediate_scope, static_cast<int>(f.scope().size()));

    for (VarId v : order) {
        // Pull every factor whose scope mentions v and combine them.
        Factor combined = Factor::constant(1.0);
        std::size_t merged = 0;
        for (std::size_t i = 0; i < pool.size();) {
            if (pool[i].has(v)) {
                combined = combined.product(pool[i]);
                if (merged > 0) report.table_ops += combined.size();
                ++merged;
                pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
            } else {
                ++i;
            }
        }
        if (merged == 0) {
            // Isolated at this point: summing/maxing a free variable.
            double c = static_cast<double>(g.card(v));
            combined = Factor::constant(mode == ElimMode::Sum ? c : 1.0);
            report.steps.push_back({v, {v}});
            if (mode == ElimMode::Max)
                report.traces.push_back({v, {}, {}, {0}});
            pool.push_back(std::move(combined));
            continue;
        }

        report.steps.push_back({v, combined.scope()});
        report.max_intermediate_scope =
            std::max(report.max_intermediate_scope, static_cast<int>(combined.scope().size()));

        if (mode == ElimMode::Sum) {
            report.table_ops += combined.size();
            pool.push_back(combined.marginalize(v));
        } else {
            report.table_ops += combined.size();
            auto mo = combined.max_out(v);
            report.traces.push_back(
                {v, mo.factor.scope(), mo.factor.cards(), std::move(mo.argmax)});
            pool.push_back(std::move(mo.factor));
        }
    }

    Factor result = Factor::ones({query}, {g.card(query)});
    for (const Factor& f : pool) {
        result = result.product(f);
        report.table_ops += result.size();
    }
    report.max_intermediate_scope = std::max(report.max_intermediate_scope, result.arity());
    report.result = std::move(result);

    if (mode == ElimMode::Max && report.result.max_value() <= 0.0)
        throw ZeroMassError("all assignments have zero weight");
    return report;
}

Assignment map_backtrack(const EliminationReport& report) {
    if (report.mode != ElimMode::Max)
        throw ValidationError("map_backtrack requires a max-mode report");

    Assignment a;
    // Query first: lowest maximizing state.
    {
        const auto& t = report.result.table();
        std::size_t best = 0;
        for (std::size_t i = 1; i < t.size(); ++i)
            if (t[i] > t[best]) best = i;
        a.set(report.query, static_cast<int>(best));
    }
    if (report.traces.size() != report.steps.size())
        throw ValidationError("report has no retained traces");

    // Traces were recorded in elimination order; walk them backwards. Each
    // trace scope only mentions the query or later-eliminated variables, so
    // every lookup is already assigned.
    for (auto it = report.traces.rbegin(); it != report.traces.rend(); ++it) {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < it->scope.size(); ++i)
            idx = idx * static_cast<std::size_t>(it->cards[i]) +
                  static_cast<std::size_t>(a.at(it->scope[i]));
        a.set(it->eliminated, it->argmax[idx]);
    }
    return a;
}

namespace {

// Mutable adjacency for order simulation.
std::map<VarId, std::set<VarId>> live_graph(const FactorGraph& g) {
    std::map<VarId, std::set<VarId>> adj;
    for (VarId v : g.variables()) adj[v] = g.neighbors(v);
    return adj;
}

void eliminate_vertex(std::map<VarId, std::set<VarId>>& adj, VarId v) {
    auto nbrs = adj[v];
    for (VarId a : nbrs)
        for (VarId b : nbrs)
            if (a != b) adj[a].insert(b);
    for (VarId a : nbrs) adj[a].erase(v);
    adj.erase(v);
}

int fill_count(const std::map<VarId, std::set<VarId>>& adj, VarId v) {
    const auto& nbrs = adj.at(v);
    int fills = 0;
    for (auto i = nbrs.begin(); i != nbrs.end(); ++i)
        for (auto j = std::next(i); j != nbrs.end(); ++j)
            if (!adj.at(*i).count(*j)) ++fills;
    return fills;
}

}  // namespace

EliminationOrder find_order(const FactorGraph& g, OrderHeuristic heuristic,
                            std::optional<VarId> query) {
    if (g.num_variables() == 0) throw ValidationError("empty graph");
    auto adj = live_graph(g);
    EliminationOrder order;
    while (adj.size() > (query ? 1u : 0u)) {
        VarId best = 0;
        long best_score = std::numeric_limits<long>::max();
        bool found = false;
        for (const auto& [v, nbrs] : adj) {
            if (query && v == *query) continue;
            long score = (heuristic == OrderHeuristic::MinDegree)
                             ? static_cast<long>(nbrs.size())
                             : static_cast<long>(fill_count(adj, v));
            if (!found || score < best_score) {  // map iterates ids ascending: ties keep lowest
                best = v;
                best_score = score;
                found = true;
            }
        }
        order.push_back(best);
        eliminate_vertex(adj, best);
    }
    return order;
}

int induced_width(const FactorGraph& g, const EliminationOrder& order) {
    std::set<VarId> seen;
    for (VarId v : order) {
        if (!g.has_variable(v)) throw ValidationError("unknown variable in elimination order");
        if (!seen.insert(v).second)
            throw ValidationError("duplicate variable in elimination order");
    }
    if (seen.size() != static_cast<std::size_t>(g.num_variables()))
        throw ValidationError("induced_width requires an order over all variables");

    auto adj = live_graph(g);
    int width = 0;
    for (VarId v : order) {
        width = std::max(width, static_cast<int>(adj[v].size()));
        eliminate_vertex(adj, v);
    }
    return width;
}

}  // namespace pgm
