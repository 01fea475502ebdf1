#include "pgm/canonical.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace pgm {

namespace {

double entropy(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

}  // namespace

double CanonicalPotential::q(std::vector<VarId> subset) const {
    std::sort(subset.begin(), subset.end());
    auto it = q_.find(subset);
    if (it == q_.end()) {
        if (static_cast<int>(subset.size()) > max_subset_size_)
            throw ValidationError("subset exceeds the canonical-potential size cap of " +
                                  std::to_string(max_subset_size_));
        throw ValidationError("subset references unknown variables");
    }
    return it->second;
}

double CanonicalPotential::g(std::vector<VarId> subset) const {
    std::sort(subset.begin(), subset.end());
    auto it = g_.find(subset);
    if (it == g_.end()) throw ValidationError("subset not tabulated");
    return it->second;
}

double CanonicalPotential::v(const std::vector<VarId>& clique, const Assignment& x) const {
    for (VarId u : clique)
        if (x.at(u) != 1) return 0.0;
    return q(clique);
}

double CanonicalPotential::log_reconstruction(const Assignment& x) const {
    std::vector<VarId> ones;
    for (const auto& [v, s] : x)
        if (s == 1) ones.push_back(v);
    if (static_cast<int>(ones.size()) > max_subset_size_)
        throw ValidationError("assignment support exceeds the subset cap");
    double total = 0.0;
    const std::size_t n = ones.size();
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        std::vector<VarId> subset;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (std::size_t{1} << i)) subset.push_back(ones[i]);
        total += q(std::move(subset));
    }
    return total;
}

bool CanonicalPotential::is_clique(const std::vector<VarId>& subset) const {
    if (subset.empty()) return false;
    for (std::size_t i = 0; i < subset.size(); ++i)
        for (std::size_t j = i + 1; j < subset.size(); ++j) {
            VarId a = std::min(subset[i], subset[j]), b = std::max(subset[i], subset[j]);
            if (!std::binary_search(edges_.begin(), edges_.end(), std::make_pair(a, b)))
                return false;
        }
    return true;
}

CanonicalPotential canonical_potentials(const Distribution& p, const FactorGraph& structure,
                                        int max_subset_size) {
    const auto& scope = p.scope();
    const int n = static_cast<int>(scope.size());
    if (n > 24)
        throw IntractableError("canonical potentials limited to 24 variables");
    for (int c : p.cards())
        if (c != 2) throw ValidationError("canonical potentials require binary alphabets");
    if (!p.strictly_positive())
        throw ValidationError("canonical potentials require a strictly positive distribution");
    if (max_subset_size < 0) throw ValidationError("subset cap must be nonnegative");
    // The alternating sums cost sum_{|A| <= cap} 2^|A|; refuse blowups early.
    double work = 0.0, binom = 1.0;
    for (int k = 0; k <= std::min(n, max_subset_size); ++k) {
        work += binom * std::pow(2.0, k);
        binom = binom * (n - k) / (k + 1);
    }
    if (work > double(1 << 24))
        throw IntractableError("subset enumeration exceeds the canonical-potential work cap");

    CanonicalPotential cp;
    cp.max_subset_size_ = max_subset_size;
    cp.edges_ = structure.interaction_edges();

    // G over all subsets within the cap, via indicator assignments.
    const std::uint32_t full = (n >= 32) ? 0u : (std::uint32_t{1} << n);
    std::map<std::uint32_t, double> g_by_mask;
    for (std::uint32_t mask = 0; mask < full; ++mask) {
        if (std::popcount(mask) > max_subset_size) continue;
        Assignment a;
        for (int i = 0; i < n; ++i)
            a.set(scope[static_cast<std::size_t>(i)], (mask >> i) & 1u);
        g_by_mask[mask] = std::log(p.at(a));
    }

    auto subset_of = [&](std::uint32_t mask) {
        std::vector<VarId> ids;
        for (int i = 0; i < n; ++i)
            if (mask & (std::uint32_t{1} << i)) ids.push_back(scope[static_cast<std::size_t>(i)]);
        return ids;  // scope order; sorted later if needed
    };

    for (const auto& [mask, g_val] : g_by_mask) {
        // Alternating sum over subsets of the mask.
        double q = 0.0;
        std::uint32_t sub = mask;
        const int bits = std::popcount(mask);
        while (true) {
            double sign = ((bits - std::popcount(sub)) % 2 == 0) ? 1.0 : -1.0;
            q += sign * g_by_mask.at(sub);
            if (sub == 0) break;
            sub = (sub - 1) & mask;
        }
        auto ids = subset_of(mask);
        std::sort(ids.begin(), ids.end());
        cp.q_[ids] = q;
        cp.g_[ids] = g_val;
    }
    return cp;
}

double fano_bound(const Distribution& p, const std::vector<VarId>& block_a,
                  const std::vector<VarId>& block_b) {
    if (block_a.empty()) throw ValidationError("block A is empty");
    double a_states = 1.0;
    for (VarId v : block_a) {
        auto it = std::find(p.scope().begin(), p.scope().end(), v);
        if (it == p.scope().end()) throw ValidationError("block variable not in distribution");
        a_states *= p.cards()[static_cast<std::size_t>(it - p.scope().begin())];
    }
    if (a_states <= 1.0)
        throw ValidationError("Fano bound undefined for a single-state block");

    std::vector<VarId> joint = block_a;
    joint.insert(joint.end(), block_b.begin(), block_b.end());
    Factor p_ab = p.marginal(joint);
    Factor p_b = block_b.empty() ? Factor::constant(1.0) : p.marginal(block_b);

    double h_ab = entropy(p_ab.table());
    double h_b = entropy(p_b.table());
    double h_a_given_b = h_ab - h_b;
    double bound = (h_a_given_b - 1.0) / std::log(a_states);
    return std::max(0.0, bound);
}

}  // namespace pgm
