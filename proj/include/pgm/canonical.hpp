#pragma once

#include <map>
#include <vector>

#include "pgm/graph.hpp"

namespace pgm {

/// Moebius-inversion coefficients Q(A) of a strictly positive binary
/// distribution: Q(A) = sum_{B subseteq A} (-1)^{|A|-|B|} G(B), where G(B) is
/// the log-probability of the indicator assignment of B. Q vanishes on every
/// subset that is not a clique of the interaction graph.
class CanonicalPotential {
public:
    /// Q(A); subsets keyed as sorted id lists. Throws past the subset cap.
    double q(std::vector<VarId> subset) const;
    /// G(A): log-probability of x_A = 1, rest = 0.
    double g(std::vector<VarId> subset) const;
    /// V_C(x_C): Q(C) when the restriction of x to C is all ones, else 0.
    double v(const std::vector<VarId>& clique, const Assignment& x) const;

    /// log p(x) reconstructed as sum of Q over all subsets of the ones-set
    /// (includes Q(empty), which absorbs the normalization).
    double log_reconstruction(const Assignment& x) const;

    const std::map<std::vector<VarId>, double>& q_all() const { return q_; }
    int max_subset_size() const { return max_subset_size_; }

    /// True when the subset induces a complete subgraph (nonempty subsets;
    /// singletons count as cliques).
    bool is_clique(const std::vector<VarId>& subset) const;

private:
    friend CanonicalPotential canonical_potentials(const Distribution&, const FactorGraph&, int);
    std::map<std::vector<VarId>, double> q_;
    std::map<std::vector<VarId>, double> g_;
    std::vector<std::pair<VarId, VarId>> edges_;
    int max_subset_size_ = 0;
};

/// Requires binary alphabets and a strictly positive distribution. Q is
/// computed for every subset up to `max_subset_size` (the 2^N enumeration is
/// capped; sizes beyond 12 by default are rejected).
CanonicalPotential canonical_potentials(const Distribution& p, const FactorGraph& structure,
                                        int max_subset_size = 12);

/// Fano lower bound on the error probability of estimating block A from
/// block B: max(0, (H(A|B) - 1) / log|A|), natural logs.
double fano_bound(const Distribution& p, const std::vector<VarId>& block_a,
                  const std::vector<VarId>& block_b);

}  // namespace pgm
