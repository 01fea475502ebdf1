#pragma once

#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pgm/factor.hpp"
#include "pgm/types.hpp"

namespace pgm {

/// Variables with finite alphabets plus a list of factors over them. The
/// unnormalized joint is the product of all factor tables. Adjacency between
/// variables is derived from co-occurrence in factor scopes.
class FactorGraph {
public:
    void add_variable(VarId id, int alphabet_size);
    void add_factor(Factor f);

    int num_variables() const { return static_cast<int>(ids_.size()); }
    const std::vector<VarId>& variables() const { return ids_; }
    bool has_variable(VarId v) const { return index_.count(v) != 0; }
    int card(VarId v) const;
    const std::vector<Factor>& factors() const { return factors_; }

    const std::set<VarId>& neighbors(VarId v) const;
    int degree(VarId v) const { return static_cast<int>(neighbors(v).size()); }
    /// Undirected interaction edges (i < j), sorted.
    std::vector<std::pair<VarId, VarId>> interaction_edges() const;

    /// Unnormalized weight of a complete assignment.
    double evaluate(const Assignment& a) const;
    /// Log of the unnormalized weight (-inf for a hard zero).
    double log_evaluate(const Assignment& a) const;

    /// Total joint state count as a double (guards compare against limits).
    double state_space_size() const;

private:
    std::vector<VarId> ids_;
    std::vector<int> cards_;
    std::unordered_map<VarId, int> index_;
    std::vector<Factor> factors_;
    std::unordered_map<VarId, std::set<VarId>> adjacency_;
};

/// DAG with one conditional probability table per variable. CPT scope is
/// (parents..., child) row-major, so each child-block sums to one.
class DirectedModel {
public:
    void add_variable(VarId id, int alphabet_size);
    /// Declares parents; must be called before set_cpt. Throws if a cycle forms.
    void set_parents(VarId v, std::vector<VarId> parents);
    /// Table over (parents..., v) with each conditional slice summing to 1 (+-1e-12).
    void set_cpt(VarId v, std::vector<double> table);

    int num_variables() const { return static_cast<int>(ids_.size()); }
    const std::vector<VarId>& variables() const { return ids_; }
    bool has_variable(VarId v) const { return index_.count(v) != 0; }
    int card(VarId v) const;
    const std::vector<VarId>& parents(VarId v) const;
    const Factor& cpt(VarId v) const;
    bool has_cpt(VarId v) const;

    /// Variables in an order where parents precede children.
    std::vector<VarId> topological_order() const;

    /// The joint as a factor graph (one factor per CPT, Z = 1).
    FactorGraph to_factor_graph() const;

    double log_probability(const Assignment& a) const;

private:
    std::vector<VarId> ids_;
    std::vector<int> cards_;
    std::unordered_map<VarId, int> index_;
    std::vector<std::vector<VarId>> parents_;
    std::vector<Factor> cpts_;
    std::vector<bool> cpt_set_;

    int idx(VarId v) const;
};

/// Fully normalized joint over all variables of a graph, with the log
/// normalization constant recorded at construction.
class Distribution {
public:
    Distribution(std::vector<VarId> scope, std::vector<int> cards, std::vector<double> joint,
                 double log_z);

    const std::vector<VarId>& scope() const { return scope_; }
    const std::vector<int>& cards() const { return cards_; }
    const std::vector<double>& table() const { return table_; }
    double log_z() const { return log_z_; }

    double at(const Assignment& a) const;
    std::size_t size() const { return table_.size(); }

    /// Marginal over a subset of the scope, normalized.
    Factor marginal(const std::vector<VarId>& subset) const;

    bool strictly_positive() const;

private:
    std::vector<VarId> scope_;
    std::vector<int> cards_;
    std::vector<double> table_;
    double log_z_;
};

}  // namespace pgm
