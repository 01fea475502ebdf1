#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "pgm/graph.hpp"
#include "pgm/junction.hpp"

namespace pgm {

/// Complete or partially observed sample rows; kMissing marks an unobserved
/// entry. Column order follows `variables`.
struct Dataset {
    static constexpr int kMissing = -1;

    std::vector<std::pair<VarId, int>> variables;  // (id, alphabet size)
    std::vector<std::vector<int>> rows;

    int num_samples() const { return static_cast<int>(rows.size()); }
    int column(VarId v) const;
    int card(VarId v) const { return variables[static_cast<std::size_t>(column(v))].second; }
    bool has_variable(VarId v) const;
    bool complete() const;
    void validate() const;
};

/// Counts and (optionally Laplace-smoothed) frequencies over variable
/// subsets of a complete dataset.
class EmpiricalDistribution {
public:
    explicit EmpiricalDistribution(const Dataset& d, double smoothing = 0.0);

    /// Raw counts over the subset, as a factor table.
    Factor counts(const std::vector<VarId>& subset) const;
    /// (count + a) / (S + a*K) frequencies, normalized.
    Factor frequencies(const std::vector<VarId>& subset) const;
    double smoothing() const { return smoothing_; }

private:
    const Dataset& data_;
    double smoothing_;
};

double empirical_entropy(const Dataset& d, VarId v, double smoothing = 0.0);
double empirical_mutual_information(const Dataset& d, VarId a, VarId b, double smoothing = 0.0);

/// ML estimate of a Bernoulli parameter: the fraction of ones.
double fit_bernoulli(const Dataset& d, VarId v);

/// ceil((1/theta) (1/eps^2) ln(1/delta)): samples sufficient for a relative
/// eps estimate of theta with failure probability delta.
long sample_complexity(double theta, double eps, double delta);

/// ML conditional tables on a fixed DAG; unseen parent configurations fall
/// back to uniform.
DirectedModel fit_cpts(const DirectedModel& structure, const Dataset& d, double smoothing = 0.0);

/// Tree-MRF estimator: node factors P_i and edge factors P_ij / (P_i P_j).
FactorGraph fit_tree_mrf(const std::vector<std::pair<VarId, VarId>>& edges, const Dataset& d,
                         double smoothing = 0.0);

/// Chordal estimator: clique factors P_C divided by separator factors P_S
/// along a junction tree of the structure.
FactorGraph fit_chordal(const std::vector<std::pair<VarId, VarId>>& edges, const Dataset& d,
                        double smoothing = 0.0);

struct LocalRatio {
    double ratio = 0.0;
    /// Neighborhood configurations evaluated; at most 2^(|N(i)|+1).
    long configurations_touched = 0;
};

/// P(X_i=1, X_N(i)=0) / P(X_i=0, X_N(i)=0) on a triangle-free binary model,
/// evaluated from two configurations only (equals exp(Q({i}))).
LocalRatio triangle_free_local_ratio(const Distribution& p, VarId i, const UGraph& graph);
LocalRatio triangle_free_local_ratio(const Dataset& d, VarId i, const UGraph& graph,
                                     double smoothing = 0.0);

/// (1/S) sum_rows log P(row). Factor graphs use an exact (guarded) log Z.
double empirical_log_likelihood(const Dataset& d, const DirectedModel& model);
double empirical_log_likelihood(const Dataset& d, const FactorGraph& model);

struct ChowLiuResult {
    std::vector<std::pair<VarId, VarId>> edges;
    std::map<std::pair<VarId, VarId>, double> mutual_information;
    FactorGraph mrf;         // fit_tree_mrf on the selected edges
    DirectedModel directed;  // rooted at the lowest variable id
};

/// Maximum-weight spanning tree over pairwise empirical mutual informations
/// (Kruskal; ties lexicographic on the variable pair).
ChowLiuResult chow_liu(const Dataset& d, double smoothing = 0.0);

/// Binary pairwise exponential family: phi_i = exp(theta_i x_i),
/// psi_ij = exp(theta_ij x_i x_j).
struct ExpFamilyModel {
    std::map<VarId, double> theta_node;
    std::map<std::pair<VarId, VarId>, double> theta_edge;  // keys i < j
    std::map<VarId, int> cards;                            // all 2

    FactorGraph to_factor_graph() const;
};

struct ExpFamOptions {
    int max_steps = 5000;
    double grad_tol = 1e-6;   // stop when the sup-norm of the gradient drops below
    double step = 0.0;        // 0 = 0.5 / max degree
    bool sqrt_decay = false;  // step / sqrt(t)
    bool use_bp_moments = false;
    int exact_var_limit = 20;
};

struct ExpFamFit {
    ExpFamilyModel model;
    double log_likelihood = 0.0;
    double grad_norm = 0.0;
    int steps = 0;
};

/// Gradient ascent on <theta, mu> - log Z(theta); moments from junction-tree
/// calibration (or loopy BP when flagged).
ExpFamFit expfam_gradient_ascent(const std::vector<std::pair<VarId, VarId>>& edges,
                                 const Dataset& d, const ExpFamOptions& options = {});

struct EmOptions {
    int max_iter = 200;
    double tol = 1e-9;
    double smoothing = 0.0;
    double hidden_guard = double(1 << 20);
};

struct EMState {
    DirectedModel theta;
    /// Variational bound (average per sample) recorded after each E-step;
    /// non-decreasing.
    std::vector<double> bound;
    /// Posterior over the hidden block per dataset row, from the final E-step.
    std::vector<Factor> posteriors;
    int iterations = 0;
    bool converged = false;
};

/// EM over a directed family: exact posteriors over the hidden block,
/// closed-form expected-count CPT updates.
EMState em_fit(const DirectedModel& init, const std::vector<VarId>& hidden, const Dataset& observed,
               const EmOptions& options = {});

struct CrowdAnswers {
    struct Entry {
        int worker = 0;
        int task = 0;
        int answer = 0;  // -1 or +1
    };
    int num_workers = 0;
    int num_tasks = 0;
    std::vector<Entry> entries;
};

struct CrowdOptions {
    double init_reliability = 0.75;
    int max_iter = 1000;
    double tol = 1e-12;
    double delta = 1e-6;  // reliabilities clamp to [1/2, 1-delta]
};

struct CrowdResult {
    std::vector<int> labels;             // per task, -1/+1 (ties to +1)
    std::vector<double> posterior_plus;  // per task P(t = +1 | answers)
    std::vector<double> reliability;     // per worker
    std::vector<bool> no_answers;        // workers left at the initial value
    std::vector<double> likelihood;      // per-iteration observed-data log-likelihood
    int iterations = 0;
};

/// EM with hidden task labels and per-worker reliabilities in [1/2, 1-delta].
CrowdResult crowdsource_em(const CrowdAnswers& answers, const CrowdOptions& options = {});

/// The +-1 answer likelihood ((p/(1-p))^{At} (1-p) p)^(1/2); equals p when
/// A = t and 1-p otherwise.
double crowd_answer_likelihood(int answer, int truth, double p);

Dataset sample_dataset(const DirectedModel& model, int samples, std::uint64_t seed);
Dataset sample_dataset(const FactorGraph& model, int samples, std::uint64_t seed,
                       double state_guard = double(1 << 20));

}  // namespace pgm
