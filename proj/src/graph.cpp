#include "pgm/graph.hpp"

#include <algorithm>
#include <cmath>

#include "pgm/kernels.hpp"

namespace pgm {

void FactorGraph::add_variable(VarId id, int alphabet_size) {
    if (alphabet_size < 1) throw ValidationError("alphabet size must be positive");
    if (index_.count(id))
        throw ValidationError("variable " + std::to_string(id) + " declared twice");
    index_[id] = static_cast<int>(ids_.size());
    ids_.push_back(id);
    cards_.push_back(alphabet_size);
    adjacency_[id];
}

void FactorGraph::add_factor(Factor f) {
    const auto& scope = f.scope();
    for (std::size_t i = 0; i < scope.size(); ++i) {
        auto it = index_.find(scope[i]);
        if (it == index_.end())
            throw ValidationError("factor references undeclared variable " +
                                  std::to_string(scope[i]));
        if (f.cards()[i] != cards_[it->second])
            throw ValidationError("factor cardinality disagrees with alphabet of variable " +
                                  std::to_string(scope[i]));
    }
    for (VarId u : scope)
        for (VarId v : scope)
            if (u != v) adjacency_[u].insert(v);
    factors_.push_back(std::move(f));
}

int FactorGraph::card(VarId v) const {
    auto it = index_.find(v);
    if (it == index_.end())
        throw ValidationError("unknown variable " + std::to_string(v));
    return cards_[it->second];
}

const std::set<VarId>& FactorGraph::neighbors(VarId v) const {
    auto it = adjacency_.find(v);
    if (it == adjacency_.end())
        throw ValidationError("unknown variable " + std::to_string(v));
    return it->second;
}

std::vector<std::pair<VarId, VarId>> FactorGraph::interaction_edges() const {
    std::vector<std::pair<VarId, VarId>> edges;
    for (VarId v : ids_)
        for (VarId u : neighbors(v))
            if (v < u) edges.emplace_back(v, u);
    std::sort(edges.begin(), edges.end());
    return edges;
}

double FactorGraph::evaluate(const Assignment& a) const {
    double lw = log_evaluate(a);
    return std::exp(lw);
}

double FactorGraph::log_evaluate(const Assignment& a) const {
    for (VarId v : ids_)
        if (!a.contains(v))
            throw ValidationError("assignment incomplete: missing variable " + std::to_string(v));
    double acc = 0.0;
    for (const Factor& f : factors_) {
        double v = f.at(a);
        if (f.domain() == Domain::Log) {
            acc += v;
        } else {
            if (v == 0.0) return -std::numeric_limits<double>::infinity();
            acc += std::log(v);
        }
    }
    return acc;
}

double FactorGraph::state_space_size() const {
    double n = 1.0;
    for (int c : cards_) n *= static_cast<double>(c);
    return n;
}

// ---------------------------------------------------------------------------

int DirectedModel::idx(VarId v) const {
    auto it = index_.find(v);
    if (it == index_.end())
        throw ValidationError("unknown variable " + std::to_string(v));
    return it->second;
}

void DirectedModel::add_variable(VarId id, int alphabet_size) {
    if (alphabet_size < 1) throw ValidationError("alphabet size must be positive");
    if (index_.count(id))
        throw ValidationError("variable " + std::to_string(id) + " declared twice");
    index_[id] = static_cast<int>(ids_.size());
    ids_.push_back(id);
    cards_.push_back(alphabet_size);
    parents_.emplace_back();
    cpts_.emplace_back();
    cpt_set_.push_back(false);
}

void DirectedModel::set_parents(VarId v, std::vector<VarId> parents) {
    int i = idx(v);
    for (VarId p : parents) {
        idx(p);
        if (p == v) throw ValidationError("variable cannot be its own parent");
    }
    parents_[i] = std::move(parents);
    topological_order();  // throws on a cycle
}

void DirectedModel::set_cpt(VarId v, std::vector<double> table) {
    int i = idx(v);
    std::vector<VarId> scope = parents_[i];
    scope.push_back(v);
    std::vector<int> cards;
    cards.reserve(scope.size());
    for (VarId s : scope) cards.push_back(cards_[idx(s)]);
    Factor f(scope, cards, std::move(table));

    const int child_card = cards_[i];
    const std::size_t blocks = f.size() / static_cast<std::size_t>(child_card);
    for (std::size_t b = 0; b < blocks; ++b) {
        double s = 0.0;
        for (int x = 0; x < child_card; ++x)
            s += f.table()[b * static_cast<std::size_t>(child_card) + static_cast<std::size_t>(x)];
        if (std::abs(s - 1.0) > 1e-12)
            throw ValidationError("CPT of variable " + std::to_string(v) +
                                  " does not sum to 1 for some parent configuration");
    }
    cpts_[i] = std::move(f);
    cpt_set_[i] = true;
}

int DirectedModel::card(VarId v) const { return cards_[idx(v)]; }

const std::vector<VarId>& DirectedModel::parents(VarId v) const { return parents_[idx(v)]; }

const Factor& DirectedModel::cpt(VarId v) const {
    int i = idx(v);
    if (!cpt_set_[i])
        throw ValidationError("CPT of variable " + std::to_string(v) + " not set");
    return cpts_[i];
}

bool DirectedModel::has_cpt(VarId v) const { return cpt_set_[idx(v)]; }

std::vector<VarId> DirectedModel::topological_order() const {
    std::vector<int> indegree(ids_.size(), 0);
    for (std::size_t i = 0; i < ids_.size(); ++i)
        indegree[i] = static_cast<int>(parents_[i].size());
    // Kahn's algorithm, lowest id first for determinism.
    std::vector<VarId> order;
    std::set<VarId> ready;
    for (std::size_t i = 0; i < ids_.size(); ++i)
        if (indegree[i] == 0) ready.insert(ids_[i]);
    while (!ready.empty()) {
        VarId v = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(v);
        for (std::size_t i = 0; i < ids_.size(); ++i) {
            for (VarId p : parents_[i]) {
                if (p == v && --indegree[i] == 0) ready.insert(ids_[i]);
            }
        }
    }
    if (order.size() != ids_.size())
        throw ValidationError("directed model contains a cycle");
    return order;
}

FactorGraph DirectedModel::to_factor_graph() const {
    FactorGraph g;
    for (std::size_t i = 0; i < ids_.size(); ++i) g.add_variable(ids_[i], cards_[i]);
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!cpt_set_[i])
            throw ValidationError("CPT of variable " + std::to_string(ids_[i]) + " not set");
        g.add_factor(cpts_[i]);
    }
    return g;
}

double DirectedModel::log_probability(const Assignment& a) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!cpt_set_[i])
            throw ValidationError("CPT of variable " + std::to_string(ids_[i]) + " not set");
        double v = cpts_[i].at(a);
        if (v == 0.0) return -std::numeric_limits<double>::infinity();
        acc += std::log(v);
    }
    return acc;
}

// ---------------------------------------------------------------------------

Distribution::Distribution(std::vector<VarId> scope, std::vector<int> cards,
                           std::vector<double> joint, double log_z)
    : scope_(std::move(scope)), cards_(std::move(cards)), table_(std::move(joint)),
      log_z_(log_z) {
    std::size_t n = 1;
    for (int c : cards_) n *= static_cast<std::size_t>(c);
    if (table_.size() != n) throw ValidationError("distribution table length mismatch");
    double s = kernels::sum(table_.data(), table_.size());
    if (std::abs(s - 1.0) > 1e-10)
        throw ValidationError("distribution does not sum to 1");
    for (double v : table_)
        if (v < 0.0 || std::isnan(v)) throw ValidationError("invalid probability entry");
}

double Distribution::at(const Assignment& a) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < scope_.size(); ++i)
        idx = idx * static_cast<std::size_t>(cards_[i]) + static_cast<std::size_t>(a.at(scope_[i]));
    return table_[idx];
}

Factor Distribution::marginal(const std::vector<VarId>& subset) const {
    Factor joint(scope_, cards_, table_);
    for (VarId v : scope_)
        if (std::find(subset.begin(), subset.end(), v) == subset.end())
            joint = joint.marginalize(v);
    // Reorder to the requested subset order via product with a ones factor.
    std::vector<int> cards;
    for (VarId v : subset) {
        auto it = std::find(scope_.begin(), scope_.end(), v);
        if (it == scope_.end())
            throw ValidationError("marginal subset variable not in distribution scope");
        cards.push_back(cards_[static_cast<std::size_t>(it - scope_.begin())]);
    }
    return Factor::ones(subset, cards).product(joint);
}

bool Distribution::strictly_positive() const {
    for (double v : table_)
        if (v <= 0.0) return false;
    return true;
}

}  // namespace pgm
