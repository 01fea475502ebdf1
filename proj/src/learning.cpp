#include "pgm/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "pgm/bp.hpp"
#include "pgm/exact.hpp"
#include "pgm/kernels.hpp"

namespace pgm {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double xlogx(double v) { return v > 0.0 ? v * std::log(v) : 0.0; }
}  // namespace

int Dataset::column(VarId v) const {
    for (std::size_t i = 0; i < variables.size(); ++i)
        if (variables[i].first == v) return static_cast<int>(i);
    throw ValidationError("dataset has no column for variable " + std::to_string(v));
}

bool Dataset::has_variable(VarId v) const {
    for (const auto& [id, _] : variables)
        if (id == v) return true;
    return false;
}

bool Dataset::complete() const {
    for (const auto& row : rows)
        for (int v : row)
            if (v == kMissing) return false;
    return true;
}

void Dataset::validate() const {
    std::set<VarId> seen;
    for (const auto& [id, card] : variables) {
        if (card < 1) throw ValidationError("dataset variable with alphabet size < 1");
        if (!seen.insert(id).second)
            throw ValidationError("duplicate dataset variable " + std::to_string(id));
    }
    for (const auto& row : rows) {
        if (row.size() != variables.size())
            throw ValidationError("dataset row width mismatch");
        for (std::size_t i = 0; i < row.size(); ++i)
            if (row[i] != kMissing && (row[i] < 0 || row[i] >= variables[i].second))
                throw ValidationError("dataset state out of range for variable " +
                                      std::to_string(variables[i].first));
    }
}

EmpiricalDistribution::EmpiricalDistribution(const Dataset& d, double smoothing)
    : data_(d), smoothing_(smoothing) {
    if (smoothing < 0.0) throw ValidationError("smoothing must be nonnegative");
}

Factor EmpiricalDistribution::counts(const std::vector<VarId>& subset) const {
    std::vector<int> cols, cards;
    for (VarId v : subset) {
        cols.push_back(data_.column(v));
        cards.push_back(data_.card(v));
    }
    std::size_t n = 1;
    for (int c : cards) n *= static_cast<std::size_t>(c);
    std::vector<double> table(n, 0.0);
    for (const auto& row : data_.rows) {
        std::size_t idx = 0;
        bool ok = true;
        for (std::size_t i = 0; i < cols.size(); ++i) {
            int s = row[static_cast<std::size_t>(cols[i])];
            if (s == Dataset::kMissing) {
                ok = false;
                break;
            }
            idx = idx * static_cast<std::size_t>(cards[i]) + static_cast<std::size_t>(s);
        }
        if (!ok)
            throw ValidationError("empirical counts over incomplete rows");
        table[idx] += 1.0;
    }
    return Factor(subset, cards, std::move(table));
}

Factor EmpiricalDistribution::frequencies(const std::vector<VarId>& subset) const {
    Factor c = counts(subset);
    const double s = static_cast<double>(data_.num_samples());
    const double k = static_cast<double>(c.size());
    if (s + smoothing_ * k <= 0.0) throw ValidationError("empty dataset");
    Factor out = c;
    for (double& v : out.table()) v = (v + smoothing_) / (s + smoothing_ * k);
    return out;
}

double empirical_entropy(const Dataset& d, VarId v, double smoothing) {
    Factor p = EmpiricalDistribution(d, smoothing).frequencies({v});
    double h = 0.0;
    for (double x : p.table()) h -= xlogx(x);
    return h;
}

double empirical_mutual_information(const Dataset& d, VarId a, VarId b, double smoothing) {
    EmpiricalDistribution emp(d, smoothing);
    Factor pab = emp.frequencies({a, b});
    Factor pa = emp.frequencies({a});
    Factor pb = emp.frequencies({b});
    double mi = 0.0;
    int cb = d.card(b);
    for (int xa = 0; xa < d.card(a); ++xa) {
        for (int xb = 0; xb < cb; ++xb) {
            double pj = pab.table()[static_cast<std::size_t>(xa * cb + xb)];
            if (pj <= 0.0) continue;
            mi += pj * std::log(pj / (pa.table()[static_cast<std::size_t>(xa)] *
                                      pb.table()[static_cast<std::size_t>(xb)]));
        }
    }
    return std::max(0.0, mi);
}

double fit_bernoulli(const Dataset& d, VarId v) {
    if (d.rows.empty()) throw ValidationError("empty dataset");
    if (d.card(v) != 2) throw ValidationError("fit_bernoulli requires a binary variable");
    int col = d.column(v);
    double ones = 0.0;
    for (const auto& row : d.rows) {
        int s = row[static_cast<std::size_t>(col)];
        if (s == Dataset::kMissing) throw ValidationError("fit_bernoulli requires complete data");
        ones += s;
    }
    return ones / static_cast<double>(d.num_samples());
}

long sample_complexity(double theta, double eps, double delta) {
    if (theta <= 0.0 || theta > 1.0) throw ValidationError("theta must lie in (0, 1]");
    if (eps <= 0.0) throw ValidationError("eps must be positive");
    if (delta <= 0.0 || delta >= 1.0) throw ValidationError("delta must lie in (0, 1)");
    double v = (1.0 / theta) * (1.0 / (eps * eps)) * std::log(1.0 / delta);
    return static_cast<long>(std::ceil(v - 1e-9));
}

DirectedModel fit_cpts(const DirectedModel& structure, const Dataset& d, double smoothing) {
    DirectedModel out;
    for (VarId v : structure.variables()) out.add_variable(v, structure.card(v));
    for (VarId v : structure.variables()) out.set_parents(v, structure.parents(v));

    EmpiricalDistribution emp(d, 0.0);
    for (VarId v : structure.variables()) {
        std::vector<VarId> scope = structure.parents(v);
        scope.push_back(v);
        Factor c = emp.counts(scope);
        const int cc = structure.card(v);
        std::vector<double> table = c.table();
        const std::size_t blocks = table.size() / static_cast<std::size_t>(cc);
        for (std::size_t b = 0; b < blocks; ++b) {
            double tot = 0.0;
            for (int x = 0; x < cc; ++x) tot += table[b * cc + static_cast<std::size_t>(x)];
            if (tot + smoothing * cc <= 0.0) {
                for (int x = 0; x < cc; ++x)
                    table[b * cc + static_cast<std::size_t>(x)] = 1.0 / cc;
            } else {
                for (int x = 0; x < cc; ++x)
                    table[b * cc + static_cast<std::size_t>(x)] =
                        (table[b * cc + static_cast<std::size_t>(x)] + smoothing) /
                        (tot + smoothing * cc);
            }
        }
        out.set_cpt(v, std::move(table));
    }
    return out;
}

namespace {

void check_forest(const std::vector<std::pair<VarId, VarId>>& edges) {
    std::map<VarId, VarId> dsu;
    auto find = [&](VarId x) {
        if (!dsu.count(x)) dsu[x] = x;
        while (dsu[x] != x) x = dsu[x] = dsu[dsu[x]];
        return x;
    };
    for (auto [a, b] : edges) {
        VarId ra = find(a), rb = find(b);
        if (ra == rb) throw ValidationError("structure has a cycle");
        dsu[ra] = rb;
    }
}

}  // namespace

FactorGraph fit_tree_mrf(const std::vector<std::pair<VarId, VarId>>& edges, const Dataset& d,
                         double smoothing) {
    check_forest(edges);
    EmpiricalDistribution emp(d, smoothing);
    FactorGraph g;
    for (const auto& [v, card] : d.variables) g.add_variable(v, card);
    for (const auto& [v, card] : d.variables) g.add_factor(emp.frequencies({v}));
    for (auto [a, b] : edges) {
        Factor pab = emp.frequencies({a, b});
        Factor pa = emp.frequencies({a});
        Factor pb = emp.frequencies({b});
        std::vector<double> table = pab.table();
        int cb = d.card(b);
        for (int xa = 0; xa < d.card(a); ++xa)
            for (int xb = 0; xb < cb; ++xb) {
                std::size_t idx = static_cast<std::size_t>(xa * cb + xb);
                double denom = pa.table()[static_cast<std::size_t>(xa)] *
                               pb.table()[static_cast<std::size_t>(xb)];
                table[idx] = (table[idx] > 0.0 && denom > 0.0) ? table[idx] / denom : 0.0;
            }
        g.add_factor(Factor({a, b}, {d.card(a), cb}, std::move(table)));
    }
    return g;
}

FactorGraph fit_chordal(const std::vector<std::pair<VarId, VarId>>& edges, const Dataset& d,
                        double smoothing) {
    std::vector<VarId> vars;
    for (const auto& [v, _] : d.variables) vars.push_back(v);
    UGraph graph = UGraph::from_edges(vars, edges);
    auto chordality = is_chordal(graph);
    if (!chordality.chordal) throw ValidationError("structure is not chordal");
    CliqueSet cliques = maximal_cliques(graph);
    JunctionTree tree = build_junction_tree(cliques);

    EmpiricalDistribution emp(d, smoothing);
    FactorGraph g;
    for (const auto& [v, card] : d.variables) g.add_variable(v, card);
    for (const auto& c : tree.cliques) g.add_factor(emp.frequencies(c));
    for (const auto& e : tree.edges) {
        Factor ps = emp.frequencies(e.separator);
        std::vector<double> table = ps.table();
        for (double& v : table) v = (v > 0.0) ? 1.0 / v : 0.0;
        g.add_factor(Factor(ps.scope(), ps.cards(), std::move(table)));
    }
    return g;
}

namespace {

void check_triangle_free(const UGraph& g) {
    for (auto [a, b] : g.edges())
        for (VarId w : g.neighbors(a))
            if (w != b && g.has_edge(w, b))
                throw ValidationError("graph contains a triangle");
}

}  // namespace

LocalRatio triangle_free_local_ratio(const Distribution& p, VarId i, const UGraph& graph) {
    check_triangle_free(graph);
    for (int c : p.cards())
        if (c != 2) throw ValidationError("local ratio requires binary alphabets");
    Assignment zeros, ei;
    for (VarId v : p.scope()) {
        zeros.set(v, 0);
        ei.set(v, v == i ? 1 : 0);
    }
    double denom = p.at(zeros);
    if (denom <= 0.0) throw ZeroMassError("zero denominator probability");
    return {p.at(ei) / denom, 2};
}

LocalRatio triangle_free_local_ratio(const Dataset& d, VarId i, const UGraph& graph,
                                     double smoothing) {
    check_triangle_free(graph);
    if (d.card(i) != 2) throw ValidationError("local ratio requires binary alphabets");
    // Count rows whose neighborhood is all zeros, split by x_i.
    std::vector<int> nbr_cols;
    for (VarId v : graph.neighbors(i)) nbr_cols.push_back(d.column(v));
    int col = d.column(i);
    double c0 = smoothing, c1 = smoothing;
    for (const auto& row : d.rows) {
        bool zeros = true;
        for (int nc : nbr_cols)
            if (row[static_cast<std::size_t>(nc)] != 0) {
                zeros = false;
                break;
            }
        if (!zeros) continue;
        if (row[static_cast<std::size_t>(col)] == 1)
            c1 += 1.0;
        else
            c0 += 1.0;
    }
    if (c0 <= 0.0) throw ZeroMassError("zero denominator probability");
    return {c1 / c0, 2};
}

double empirical_log_likelihood(const Dataset& d, const DirectedModel& model) {
    if (d.rows.empty()) throw ValidationError("empty dataset");
    double acc = 0.0;
    for (const auto& row : d.rows) {
        Assignment a;
        for (std::size_t i = 0; i < d.variables.size(); ++i) {
            if (row[i] == Dataset::kMissing)
                throw ValidationError("empirical likelihood requires complete data");
            a.set(d.variables[i].first, row[i]);
        }
        double lp = model.log_probability(a);
        if (lp == kNegInf) throw ZeroMassError("row with zero probability");
        acc += lp;
    }
    return acc / static_cast<double>(d.num_samples());
}

namespace {

double factor_graph_log_z(const FactorGraph& g) {
    if (g.state_space_size() <= double(1 << 20)) return brute_force(g).log_z();
    UGraph interaction = UGraph::from_factor_graph(g);
    auto order = find_order(g, OrderHeuristic::MinFill);
    auto tri = triangulate(interaction, order);
    CliqueSet cliques = maximal_cliques(tri.graph);
    double work = 0.0;
    for (const auto& c : cliques) {
        double t = 1.0;
        for (VarId v : c) t *= g.card(v);
        work += t;
    }
    if (work > double(1 << 24))
        throw IntractableError("junction tree too large for exact log Z");
    return calibrate(build_junction_tree(cliques), g).log_z;
}

}  // namespace

double empirical_log_likelihood(const Dataset& d, const FactorGraph& model) {
    if (d.rows.empty()) throw ValidationError("empty dataset");
    double log_z = factor_graph_log_z(model);
    double acc = 0.0;
    for (const auto& row : d.rows) {
        Assignment a;
        for (std::size_t i = 0; i < d.variables.size(); ++i) {
            if (row[i] == Dataset::kMissing)
                throw ValidationError("empirical likelihood requires complete data");
            a.set(d.variables[i].first, row[i]);
        }
        double lw = model.log_evaluate(a);
        if (lw == kNegInf) throw ZeroMassError("row with zero probability");
        acc += lw - log_z;
    }
    return acc / static_cast<double>(d.num_samples());
}

ChowLiuResult chow_liu(const Dataset& d, double smoothing) {
    if (d.variables.size() < 2)
        throw ValidationError("Chow-Liu requires at least two variables");

    ChowLiuResult res;
    struct Cand {
        double mi;
        VarId a, b;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 0; i < d.variables.size(); ++i) {
        for (std::size_t j = i + 1; j < d.variables.size(); ++j) {
            VarId a = std::min(d.variables[i].first, d.variables[j].first);
            VarId b = std::max(d.variables[i].first, d.variables[j].first);
            double mi = empirical_mutual_information(d, a, b, smoothing);
            res.mutual_information[{a, b}] = mi;
            cands.push_back({mi, a, b});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
        if (x.mi != y.mi) return x.mi > y.mi;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });

    std::map<VarId, VarId> dsu;
    for (const auto& [v, _] : d.variables) dsu[v] = v;
    auto find = [&](VarId x) {
        while (dsu[x] != x) x = dsu[x] = dsu[dsu[x]];
        return x;
    };
    for (const auto& c : cands) {
        VarId ra = find(c.a), rb = find(c.b);
        if (ra == rb) continue;
        dsu[ra] = rb;
        res.edges.emplace_back(c.a, c.b);
    }
    std::sort(res.edges.begin(), res.edges.end());
    res.mrf = fit_tree_mrf(res.edges, d, smoothing);

    // Directed version: BFS orientation away from the lowest id per component.
    DirectedModel structure;
    for (const auto& [v, card] : d.variables) structure.add_variable(v, card);
    std::map<VarId, std::vector<VarId>> adj;
    for (auto [a, b] : res.edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::set<VarId> visited;
    std::vector<VarId> ordered;
    for (const auto& [v, _] : d.variables) ordered.push_back(v);
    std::sort(ordered.begin(), ordered.end());
    for (VarId root : ordered) {
        if (visited.count(root)) continue;
        visited.insert(root);
        std::vector<VarId> queue{root};
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            VarId v = queue[qi];
            auto& nbrs = adj[v];
            std::sort(nbrs.begin(), nbrs.end());
            for (VarId u : nbrs) {
                if (visited.count(u)) continue;
                visited.insert(u);
                structure.set_parents(u, {v});
                queue.push_back(u);
            }
        }
    }
    res.directed = fit_cpts(structure, d, smoothing);
    return res;
}

FactorGraph ExpFamilyModel::to_factor_graph() const {
    FactorGraph g;
    for (const auto& [v, c] : cards) g.add_variable(v, c);
    for (const auto& [v, th] : theta_node)
        g.add_factor(Factor({v}, {2}, {1.0, std::exp(th)}));
    for (const auto& [e, th] : theta_edge)
        g.add_factor(Factor({e.first, e.second}, {2, 2}, {1.0, 1.0, 1.0, std::exp(th)}));
    return g;
}

ExpFamFit expfam_gradient_ascent(const std::vector<std::pair<VarId, VarId>>& edges,
                                 const Dataset& d, const ExpFamOptions& options) {
    for (const auto& [v, card] : d.variables)
        if (card != 2)
            throw ValidationError("exponential-family learning requires binary data");
    if (!d.complete()) throw ValidationError("exponential-family learning requires complete data");
    if (static_cast<int>(d.variables.size()) > options.exact_var_limit && !options.use_bp_moments)
        throw IntractableError("exact moments unavailable at this size; enable BP moments");

    // Empirical moments.
    EmpiricalDistribution emp(d, 0.0);
    std::map<VarId, double> mu_node;
    std::map<std::pair<VarId, VarId>, double> mu_edge;
    for (const auto& [v, _] : d.variables) mu_node[v] = emp.frequencies({v}).table()[1];
    std::vector<std::pair<VarId, VarId>> norm_edges;
    for (auto [a, b] : edges) {
        auto e = std::minmax(a, b);
        norm_edges.emplace_back(e.first, e.second);
    }
    std::sort(norm_edges.begin(), norm_edges.end());
    norm_edges.erase(std::unique(norm_edges.begin(), norm_edges.end()), norm_edges.end());
    for (auto [a, b] : norm_edges)
        mu_edge[{a, b}] = emp.frequencies({a, b}).table()[3];

    ExpFamilyModel model;
    for (const auto& [v, card] : d.variables) {
        model.cards[v] = card;
        model.theta_node[v] = 0.0;
    }
    for (auto e : norm_edges) model.theta_edge[e] = 0.0;

    std::map<VarId, int> deg;
    for (auto [a, b] : norm_edges) {
        ++deg[a];
        ++deg[b];
    }
    int max_deg = 0;
    for (const auto& [_, dg] : deg) max_deg = std::max(max_deg, dg);
    const double base_step = options.step > 0.0 ? options.step : 0.5 / std::max(1, max_deg);

    struct Moments {
        std::map<VarId, double> node;
        std::map<std::pair<VarId, VarId>, double> edge;
        double log_z = 0.0;
    };
    auto model_moments = [&](const ExpFamilyModel& m) {
        Moments out;
        FactorGraph g = m.to_factor_graph();
        if (!options.use_bp_moments) {
            UGraph interaction = UGraph::from_factor_graph(g);
            auto order = find_order(g, OrderHeuristic::MinFill);
            auto tri = triangulate(interaction, order);
            auto cal = calibrate(build_junction_tree(maximal_cliques(tri.graph)), g);
            out.log_z = cal.log_z;
            for (const auto& [v, _] : m.theta_node)
                out.node[v] = cal.variable_marginal(v).table()[1];
            for (const auto& [e, _] : m.theta_edge)
                out.edge[e] = cal.pair_marginal(e.first, e.second).table()[3];
        } else {
            auto sp = run_sum_product(g);
            Beliefs b = edge_beliefs(sp.messages, g);
            for (const auto& [v, _] : m.theta_node) out.node[v] = b.node.at(v)[1];
            for (const auto& [e, _] : m.theta_edge) out.edge[e] = b.edge.at(e).table()[3];
            out.log_z = bethe_free_energy(b, g).f_bethe;  // Bethe surrogate, flagged path
        }
        return out;
    };

    ExpFamFit fit;
    Moments mom = model_moments(model);
    auto grad_norm = [&]() {
        double g = 0.0;
        for (const auto& [v, mu] : mu_node) g = std::max(g, std::abs(mu - mom.node[v]));
        for (const auto& [e, mu] : mu_edge) g = std::max(g, std::abs(mu - mom.edge[e]));
        return g;
    };
    for (int t = 1; t <= options.max_steps; ++t) {
        fit.grad_norm = grad_norm();
        fit.steps = t - 1;
        if (fit.grad_norm <= options.grad_tol) break;

        double step = options.sqrt_decay ? base_step / std::sqrt(static_cast<double>(t))
                                         : base_step;
        for (auto& [v, th] : model.theta_node) th += step * (mu_node[v] - mom.node[v]);
        for (auto& [e, th] : model.theta_edge) th += step * (mu_edge[e] - mom.edge[e]);
        mom = model_moments(model);
        fit.steps = t;
        fit.grad_norm = grad_norm();
    }

    double dot = 0.0;
    for (const auto& [v, th] : model.theta_node) dot += th * mu_node[v];
    for (const auto& [e, th] : model.theta_edge) dot += th * mu_edge[e];
    fit.log_likelihood = dot - mom.log_z;
    fit.model = std::move(model);
    return fit;
}

EMState em_fit(const DirectedModel& init, const std::vector<VarId>& hidden,
               const Dataset& observed, const EmOptions& options) {
    for (VarId h : hidden) {
        if (!init.has_variable(h)) throw ValidationError("hidden variable not in the model");
        if (observed.has_variable(h))
            throw ValidationError("hidden variable also appears in the dataset");
    }
    for (VarId v : init.variables()) {
        bool is_hidden = std::find(hidden.begin(), hidden.end(), v) != hidden.end();
        if (!is_hidden && !observed.has_variable(v))
            throw ValidationError("observed dataset misses variable " + std::to_string(v));
    }
    if (observed.rows.empty()) throw ValidationError("empty dataset");

    std::vector<VarId> hidden_sorted(hidden);
    std::sort(hidden_sorted.begin(), hidden_sorted.end());
    std::vector<int> hidden_cards;
    double hidden_states = 1.0;
    for (VarId h : hidden_sorted) {
        hidden_cards.push_back(init.card(h));
        hidden_states *= init.card(h);
    }
    if (hidden_states > options.hidden_guard)
        throw IntractableError("hidden block exceeds the EM posterior guard");
    const std::size_t hs = static_cast<std::size_t>(hidden_states);

    const double s_total = static_cast<double>(observed.num_samples());
    EMState state;
    state.theta = init;

    auto hidden_assignment = [&](std::size_t lin, Assignment& a) {
        for (int i = static_cast<int>(hidden_sorted.size()) - 1; i >= 0; --i) {
            int c = hidden_cards[static_cast<std::size_t>(i)];
            a.set(hidden_sorted[static_cast<std::size_t>(i)], static_cast<int>(lin % c));
            lin /= static_cast<std::size_t>(c);
        }
    };

    double prev_bound = kNegInf;
    for (int iter = 1; iter <= options.max_iter; ++iter) {
        // E-step: exact posterior per row; accumulates the bound value.
        std::vector<std::vector<double>> post(observed.rows.size());
        double bound = 0.0;
        for (std::size_t r = 0; r < observed.rows.size(); ++r) {
            Assignment a;
            for (std::size_t i = 0; i < observed.variables.size(); ++i) {
                if (observed.rows[r][i] == Dataset::kMissing)
                    throw ValidationError("EM rows must observe every non-hidden variable");
                a.set(observed.variables[i].first, observed.rows[r][i]);
            }
            std::vector<double> logw(hs);
            double shift = kNegInf;
            for (std::size_t hlin = 0; hlin < hs; ++hlin) {
                hidden_assignment(hlin, a);
                logw[hlin] = state.theta.log_probability(a);
                shift = std::max(shift, logw[hlin]);
            }
            if (shift == kNegInf) throw ZeroMassError("observed row has zero probability");
            double z = 0.0;
            std::vector<double> q(hs);
            for (std::size_t hlin = 0; hlin < hs; ++hlin) {
                q[hlin] = std::exp(logw[hlin] - shift);
                z += q[hlin];
            }
            for (double& v : q) v /= z;
            bound += shift + std::log(z);  // log P_Y(y; theta)
            post[r] = std::move(q);
        }
        bound /= s_total;
        state.bound.push_back(bound);
        state.iterations = iter;

        // Posteriors exposed as factors over the hidden block.
        state.posteriors.clear();
        if (!hidden_sorted.empty())
            for (auto& q : post)
                state.posteriors.emplace_back(hidden_sorted, hidden_cards, q);

        if (bound - prev_bound <= options.tol && iter > 1) {
            state.converged = true;
            break;
        }
        prev_bound = bound;

        // M-step: expected-count CPTs.
        DirectedModel next;
        for (VarId v : state.theta.variables()) next.add_variable(v, state.theta.card(v));
        for (VarId v : state.theta.variables()) next.set_parents(v, state.theta.parents(v));
        for (VarId v : state.theta.variables()) {
            std::vector<VarId> scope = state.theta.parents(v);
            scope.push_back(v);
            std::vector<int> cards;
            for (VarId s : scope) cards.push_back(state.theta.card(s));
            std::size_t n = 1;
            for (int c : cards) n *= static_cast<std::size_t>(c);
            std::vector<double> acc(n, 0.0);

            for (std::size_t r = 0; r < observed.rows.size(); ++r) {
                Assignment a;
                for (std::size_t i = 0; i < observed.variables.size(); ++i)
                    a.set(observed.variables[i].first, observed.rows[r][i]);
                for (std::size_t hlin = 0; hlin < hs; ++hlin) {
                    hidden_assignment(hlin, a);
                    std::size_t idx = 0;
                    for (std::size_t i = 0; i < scope.size(); ++i)
                        idx = idx * static_cast<std::size_t>(cards[i]) +
                              static_cast<std::size_t>(a.at(scope[i]));
                    acc[idx] += post[r][hlin];
                }
            }
            const int cc = state.theta.card(v);
            const std::size_t blocks = n / static_cast<std::size_t>(cc);
            for (std::size_t b = 0; b < blocks; ++b) {
                double tot = 0.0;
                for (int x = 0; x < cc; ++x) tot += acc[b * cc + static_cast<std::size_t>(x)];
                if (tot + options.smoothing * cc <= 0.0) {
                    for (int x = 0; x < cc; ++x) acc[b * cc + static_cast<std::size_t>(x)] = 1.0 / cc;
                } else {
                    for (int x = 0; x < cc; ++x)
                        acc[b * cc + static_cast<std::size_t>(x)] =
                            (acc[b * cc + static_cast<std::size_t>(x)] + options.smoothing) /
                            (tot + options.smoothing * cc);
                }
            }
            next.set_cpt(v, std::move(acc));
        }
        state.theta = std::move(next);
    }
    return state;
}

double crowd_answer_likelihood(int answer, int truth, double p) {
    if ((answer != -1 && answer != 1) || (truth != -1 && truth != 1))
        throw ValidationError("answers and labels must be -1 or +1");
    if (p <= 0.0 || p >= 1.0) throw ValidationError("reliability must lie in (0, 1)");
    double at = static_cast<double>(answer * truth);
    return std::sqrt(std::pow(p / (1.0 - p), at) * (1.0 - p) * p);
}

CrowdResult crowdsource_em(const CrowdAnswers& answers, const CrowdOptions& options) {
    if (answers.entries.empty()) throw ValidationError("no answers");
    if (answers.num_workers < 1 || answers.num_tasks < 1)
        throw ValidationError("workers and tasks must be declared");
    std::vector<std::vector<std::pair<int, int>>> by_task(
        static_cast<std::size_t>(answers.num_tasks));  // (worker, answer)
    std::vector<long> per_worker(static_cast<std::size_t>(answers.num_workers), 0);
    for (const auto& e : answers.entries) {
        if (e.worker < 0 || e.worker >= answers.num_workers)
            throw ValidationError("answer references an undeclared worker");
        if (e.task < 0 || e.task >= answers.num_tasks)
            throw ValidationError("answer references an undeclared task");
        if (e.answer != -1 && e.answer != 1)
            throw ValidationError("answers must be -1 or +1");
        by_task[static_cast<std::size_t>(e.task)].emplace_back(e.worker, e.answer);
        ++per_worker[static_cast<std::size_t>(e.worker)];
    }
    for (int t = 0; t < answers.num_tasks; ++t)
        if (by_task[static_cast<std::size_t>(t)].empty())
            throw ValidationError("task " + std::to_string(t) + " has no answers");

    const double lo = 0.5, hi = 1.0 - options.delta;
    CrowdResult res;
    res.reliability.assign(static_cast<std::size_t>(answers.num_workers),
                           std::clamp(options.init_reliability, lo, hi));
    res.no_answers.resize(static_cast<std::size_t>(answers.num_workers));
    for (int w = 0; w < answers.num_workers; ++w)
        res.no_answers[static_cast<std::size_t>(w)] = per_worker[static_cast<std::size_t>(w)] == 0;
    res.posterior_plus.assign(static_cast<std::size_t>(answers.num_tasks), 0.5);

    double prev_ll = kNegInf;
    for (int iter = 1; iter <= options.max_iter; ++iter) {
        // E-step: per-task posterior of t = +1 under independent workers.
        double ll = 0.0;
        for (int t = 0; t < answers.num_tasks; ++t) {
            double lp = 0.0, lm = 0.0;
            for (auto [w, a] : by_task[static_cast<std::size_t>(t)]) {
                double p = res.reliability[static_cast<std::size_t>(w)];
                lp += std::log(a == 1 ? p : 1.0 - p);
                lm += std::log(a == -1 ? p : 1.0 - p);
            }
            double shift = std::max(lp, lm);
            double zp = std::exp(lp - shift), zm = std::exp(lm - shift);
            res.posterior_plus[static_cast<std::size_t>(t)] = zp / (zp + zm);
            ll += shift + std::log(0.5 * (zp + zm));
        }
        res.likelihood.push_back(ll);
        res.iterations = iter;
        if (ll - prev_ll <= options.tol && iter > 1) break;
        prev_ll = ll;

        // M-step: expected agreement frequency per worker.
        std::vector<double> agree(static_cast<std::size_t>(answers.num_workers), 0.0);
        for (int t = 0; t < answers.num_tasks; ++t) {
            double q = res.posterior_plus[static_cast<std::size_t>(t)];
            for (auto [w, a] : by_task[static_cast<std::size_t>(t)])
                agree[static_cast<std::size_t>(w)] += (a == 1) ? q : 1.0 - q;
        }
        for (int w = 0; w < answers.num_workers; ++w) {
            if (per_worker[static_cast<std::size_t>(w)] == 0) continue;  // flagged, keep init
            double p = agree[static_cast<std::size_t>(w)] /
                       static_cast<double>(per_worker[static_cast<std::size_t>(w)]);
            res.reliability[static_cast<std::size_t>(w)] = std::clamp(p, lo, hi);
        }
    }

    res.labels.resize(static_cast<std::size_t>(answers.num_tasks));
    for (int t = 0; t < answers.num_tasks; ++t)
        res.labels[static_cast<std::size_t>(t)] =
            res.posterior_plus[static_cast<std::size_t>(t)] >= 0.5 ? 1 : -1;
    return res;
}

Dataset sample_dataset(const DirectedModel& model, int samples, std::uint64_t seed) {
    if (samples < 0) throw ValidationError("negative sample count");
    Dataset d;
    for (VarId v : model.variables()) d.variables.emplace_back(v, model.card(v));
    auto topo = model.topological_order();
    Rng rng(seed);
    d.rows.reserve(static_cast<std::size_t>(samples));
    for (int s = 0; s < samples; ++s) {
        Assignment a;
        for (VarId v : topo) {
            const Factor& cpt = model.cpt(v);
            double u = rng.uniform01();
            int state = 0;
            double acc = 0.0;
            Assignment probe = a;
            for (int x = 0; x < model.card(v); ++x) {
                probe.set(v, x);
                acc += cpt.at(probe);
                if (u < acc) {
                    state = x;
                    break;
                }
                state = x;  // saturates at the last state on rounding
            }
            a.set(v, state);
        }
        std::vector<int> row;
        for (const auto& [v, _] : d.variables) row.push_back(a.at(v));
        d.rows.push_back(std::move(row));
    }
    return d;
}

Dataset sample_dataset(const FactorGraph& model, int samples, std::uint64_t seed,
                       double state_guard) {
    if (samples < 0) throw ValidationError("negative sample count");
    if (model.state_space_size() > state_guard)
        throw IntractableError("factor graph too large for exact sampling");
    Distribution joint = brute_force(model, state_guard);
    std::vector<double> cdf(joint.table().size());
    std::partial_sum(joint.table().begin(), joint.table().end(), cdf.begin());

    Dataset d;
    for (std::size_t i = 0; i < joint.scope().size(); ++i)
        d.variables.emplace_back(joint.scope()[i], joint.cards()[i]);
    Rng rng(seed);
    for (int s = 0; s < samples; ++s) {
        double u = rng.uniform01();
        std::size_t idx = static_cast<std::size_t>(
            std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        if (idx >= cdf.size()) idx = cdf.size() - 1;
        std::vector<int> row(joint.scope().size());
        std::size_t rem = idx;
        for (int i = static_cast<int>(joint.scope().size()) - 1; i >= 0; --i) {
            int c = joint.cards()[static_cast<std::size_t>(i)];
            row[static_cast<std::size_t>(i)] = static_cast<int>(rem % static_cast<std::size_t>(c));
            rem /= static_cast<std::size_t>(c);
        }
        d.rows.push_back(std::move(row));
    }
    return d;
}

}  // namespace pgm
