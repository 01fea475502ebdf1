#include "pgm/bp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "pgm/kernels.hpp"

namespace pgm {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double xlogx(double v) { return v > 0.0 ? v * std::log(v) : 0.0; }

void normalize_or_throw(std::vector<double>& v, const char* what) {
    double s = kernels::sum(v.data(), v.size());
    if (s <= 0.0)
        throw ZeroMassError(std::string(what) +
                            " is identically zero (hard constraints annihilated it)");
    kernels::scale(v.data(), 1.0 / s, v.size());
}

double rho_estimate(const std::vector<double>& trajectory) {
    // Geometric mean of the last <= 5 ratios of successive L-inf changes.
    std::vector<double> ratios;
    for (std::size_t i = trajectory.size(); i-- > 1;) {
        if (trajectory[i - 1] > 0.0 && trajectory[i] > 0.0)
            ratios.push_back(trajectory[i] / trajectory[i - 1]);
        if (ratios.size() == 5) break;
    }
    if (ratios.empty()) return 0.0;
    double acc = 0.0;
    for (double r : ratios) acc += std::log(r);
    return std::exp(acc / static_cast<double>(ratios.size()));
}

}  // namespace

PairwiseModel PairwiseModel::from(const FactorGraph& g) {
    PairwiseModel m;
    m.vars = g.variables();
    for (std::size_t i = 0; i < m.vars.size(); ++i) {
        m.var_index_[m.vars[i]] = static_cast<int>(i);
        m.cards.push_back(g.card(m.vars[i]));
        m.phi.emplace_back(static_cast<std::size_t>(m.cards.back()), 1.0);
    }

    std::map<std::pair<VarId, VarId>, Factor> psi_map;
    for (const Factor& f : g.factors()) {
        Factor lin = f.to_linear();
        if (lin.arity() == 0) continue;  // constant factors do not affect beliefs
        if (lin.arity() == 1) {
            int vi = m.var_index(lin.scope()[0]);
            for (int x = 0; x < m.cards[static_cast<std::size_t>(vi)]; ++x)
                m.phi[static_cast<std::size_t>(vi)][static_cast<std::size_t>(x)] *=
                    lin.table()[static_cast<std::size_t>(x)];
            continue;
        }
        if (lin.arity() != 2)
            throw ValidationError("pairwise view requires factor arities <= 2 "
                                  "(use the factor-graph form instead)");
        VarId a = lin.scope()[0], b = lin.scope()[1];
        VarId i = std::min(a, b), j = std::max(a, b);
        auto key = std::make_pair(i, j);
        Factor base = Factor::ones({i, j}, {g.card(i), g.card(j)});
        auto it = psi_map.find(key);
        if (it == psi_map.end()) it = psi_map.emplace(key, std::move(base)).first;
        it->second = it->second.product(lin);
    }

    for (auto& [key, psi] : psi_map) {
        m.edge_index_[key] = static_cast<int>(m.edges.size());
        m.edges.push_back(key);
        m.psi.push_back(std::move(psi));
    }
    m.adjacency.assign(m.vars.size(), {});
    for (int e = 0; e < static_cast<int>(m.edges.size()); ++e) {
        m.adjacency[static_cast<std::size_t>(m.var_index(m.edges[static_cast<std::size_t>(e)].first))]
            .push_back(e);
        m.adjacency[static_cast<std::size_t>(m.var_index(m.edges[static_cast<std::size_t>(e)].second))]
            .push_back(e);
    }
    return m;
}

int PairwiseModel::var_index(VarId v) const {
    auto it = var_index_.find(v);
    if (it == var_index_.end()) throw ValidationError("unknown variable " + std::to_string(v));
    return it->second;
}

int PairwiseModel::edge_index(VarId a, VarId b) const {
    auto it = edge_index_.find({std::min(a, b), std::max(a, b)});
    return it == edge_index_.end() ? -1 : it->second;
}

double PairwiseModel::psi_at(int edge, VarId from, int x_from, int x_to) const {
    const Factor& f = psi[static_cast<std::size_t>(edge)];
    bool forward = (f.scope()[0] == from);
    int xi = forward ? x_from : x_to;
    int xj = forward ? x_to : x_from;
    return f.table()[static_cast<std::size_t>(xi * f.cards()[1] + xj)];
}

const std::vector<double>& MessageSet::message(VarId from, VarId to) const {
    auto it = dir_index_.find({from, to});
    if (it == dir_index_.end())
        throw ValidationError("no message from " + std::to_string(from) + " to " +
                              std::to_string(to));
    return msg[it->second];
}

void MessageSet::rebuild_index() {
    dir_index_.clear();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        dir_index_[{edges[e].first, edges[e].second}] = 2 * e;
        dir_index_[{edges[e].second, edges[e].first}] = 2 * e + 1;
    }
}

namespace {

int diameter_estimate(const PairwiseModel& m) {
    // Two BFS sweeps per component; a lower bound is fine for a budget.
    const int n = static_cast<int>(m.vars.size());
    std::vector<int> dist(static_cast<std::size_t>(n));
    auto bfs = [&](int start) {
        std::fill(dist.begin(), dist.end(), -1);
        dist[static_cast<std::size_t>(start)] = 0;
        std::deque<int> q{start};
        int far = start;
        while (!q.empty()) {
            int v = q.front();
            q.pop_front();
            for (int e : m.adjacency[static_cast<std::size_t>(v)]) {
                const auto& [a, b] = m.edges[static_cast<std::size_t>(e)];
                int u = m.var_index(a) == v ? m.var_index(b) : m.var_index(a);
                if (dist[static_cast<std::size_t>(u)] < 0) {
                    dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(v)] + 1;
                    if (dist[static_cast<std::size_t>(u)] > dist[static_cast<std::size_t>(far)])
                        far = u;
                    q.push_back(u);
                }
            }
        }
        return far;
    };
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    int diam = 1;
    for (int v = 0; v < n; ++v) {
        if (seen[static_cast<std::size_t>(v)]) continue;
        int far = bfs(v);
        for (int u = 0; u < n; ++u)
            if (dist[static_cast<std::size_t>(u)] >= 0) seen[static_cast<std::size_t>(u)] = true;
        far = bfs(far);
        diam = std::max(diam, dist[static_cast<std::size_t>(far)]);
    }
    return diam;
}

int resolve_max_iter(const PairwiseModel& m, const BpOptions& o) {
    if (o.max_iter > 0) return o.max_iter;
    if (o.max_iter < 0) throw ValidationError("max_iter must be >= 0");
    return 10 * std::max(1, static_cast<int>(m.vars.size())) * diameter_estimate(m);
}

}  // namespace

struct PairwiseRunner {
    const PairwiseModel& m;
    bool max_mode = false;

    // One normalized linear message per direction: 2e = i->j, 2e+1 = j->i.
    std::vector<std::vector<double>> cur;

    explicit PairwiseRunner(const PairwiseModel& model) : m(model) {
        cur.resize(2 * m.edges.size());
        for (std::size_t e = 0; e < m.edges.size(); ++e) {
            int ci = m.cards[static_cast<std::size_t>(m.var_index(m.edges[e].first))];
            int cj = m.cards[static_cast<std::size_t>(m.var_index(m.edges[e].second))];
            cur[2 * e].assign(static_cast<std::size_t>(cj), 1.0 / cj);
            cur[2 * e + 1].assign(static_cast<std::size_t>(ci), 1.0 / ci);
        }
    }

    VarId dir_source(std::size_t d) const {
        const auto& [i, j] = m.edges[d / 2];
        return (d % 2 == 0) ? i : j;
    }
    VarId dir_target(std::size_t d) const {
        const auto& [i, j] = m.edges[d / 2];
        return (d % 2 == 0) ? j : i;
    }

    // phi_from times all messages into `from` except the one from `to`.
    std::vector<double> in_product(VarId from, VarId to,
                                   const std::vector<std::vector<double>>& msgs) const {
        int fi = m.var_index(from);
        std::vector<double> prod = m.phi[static_cast<std::size_t>(fi)];
        for (int e : m.adjacency[static_cast<std::size_t>(fi)]) {
            const auto& [a, b] = m.edges[static_cast<std::size_t>(e)];
            VarId nb = (a == from) ? b : a;
            if (nb == to) continue;
            std::size_t d = (nb == a) ? 2 * static_cast<std::size_t>(e)
                                      : 2 * static_cast<std::size_t>(e) + 1;
            kernels::mul(prod.data(), prod.data(), msgs[d].data(), prod.size());
        }
        return prod;
    }

    std::vector<double> update(std::size_t d, const std::vector<std::vector<double>>& msgs) const {
        VarId from = dir_source(d), to = dir_target(d);
        int e = static_cast<int>(d / 2);
        std::vector<double> inp = in_product(from, to, msgs);
        int cf = static_cast<int>(inp.size());
        int ct = m.cards[static_cast<std::size_t>(m.var_index(to))];
        std::vector<double> out(static_cast<std::size_t>(ct), 0.0);
        if (!max_mode) {
            for (int xt = 0; xt < ct; ++xt)
                for (int xf = 0; xf < cf; ++xf)
                    out[static_cast<std::size_t>(xt)] +=
                        inp[static_cast<std::size_t>(xf)] * m.psi_at(e, from, xf, xt);
        } else {
            // Max-sum proper: sums of logs, then back to a normalized table.
            std::vector<double> lout(static_cast<std::size_t>(ct), kNegInf);
            for (int xt = 0; xt < ct; ++xt) {
                for (int xf = 0; xf < cf; ++xf) {
                    double p = inp[static_cast<std::size_t>(xf)];
                    double s = m.psi_at(e, from, xf, xt);
                    if (p <= 0.0 || s <= 0.0) continue;
                    lout[static_cast<std::size_t>(xt)] =
                        std::max(lout[static_cast<std::size_t>(xt)], std::log(p) + std::log(s));
                }
            }
            double shift = *std::max_element(lout.begin(), lout.end());
            if (shift == kNegInf)
                throw ZeroMassError("a belief-propagation message is identically zero "
                                    "(hard constraints annihilated it)");
            for (int xt = 0; xt < ct; ++xt)
                out[static_cast<std::size_t>(xt)] =
                    std::exp(lout[static_cast<std::size_t>(xt)] - shift);
        }
        normalize_or_throw(out, "a belief-propagation message");
        return out;
    }

    ConvergenceReport run(const BpOptions& o) {
        const int max_iter = resolve_max_iter(m, o);
        if (max_iter < 1) throw ValidationError("max_iter must be >= 1");
        if (o.damping < 0.0 || o.damping >= 1.0)
            throw ValidationError("damping must lie in [0, 1)");

        ConvergenceReport rep;
        for (int t = 1; t <= max_iter; ++t) {
            double change = 0.0;
            if (o.schedule == Schedule::Synchronous) {
                std::vector<std::vector<double>> next(cur.size());
                for (std::size_t d = 0; d < cur.size(); ++d) next[d] = update(d, cur);
                for (std::size_t d = 0; d < cur.size(); ++d) {
                    for (std::size_t x = 0; x < next[d].size(); ++x) {
                        double damped =
                            (1.0 - o.damping) * next[d][x] + o.damping * cur[d][x];
                        change = std::max(change, std::abs(damped - cur[d][x]));
                        next[d][x] = damped;
                    }
                }
                cur = std::move(next);
            } else {
                for (std::size_t d = 0; d < cur.size(); ++d) {
                    std::vector<double> next = update(d, cur);
                    for (std::size_t x = 0; x < next.size(); ++x) {
                        double damped = (1.0 - o.damping) * next[x] + o.damping * cur[d][x];
                        change = std::max(change, std::abs(damped - cur[d][x]));
                        cur[d][x] = damped;
                    }
                }
            }
            rep.trajectory.push_back(change);
            rep.iterations = t;
            rep.final_change = change;
            if (change <= o.tol) {
                rep.converged = true;
                break;
            }
        }
        rep.rho_hat = rho_estimate(rep.trajectory);
        return rep;
    }

    MessageSet message_set(int iterations) const {
        MessageSet ms;
        ms.edges = m.edges;
        ms.msg = cur;
        ms.iterations = iterations;
        ms.rebuild_index();
        return ms;
    }

    std::vector<double> node_belief(VarId v) const {
        std::vector<double> b = in_product(v, v /* exclude nothing */, cur);
        normalize_or_throw(b, "a node belief");
        return b;
    }
};

SumProductResult run_sum_product(const FactorGraph& g, const BpOptions& options) {
    PairwiseModel model = PairwiseModel::from(g);
    PairwiseRunner runner(model);
    SumProductResult res;
    res.report = runner.run(options);
    res.messages = runner.message_set(res.report.iterations);
    for (VarId v : model.vars) res.beliefs.node[v] = runner.node_belief(v);
    return res;
}

MaxSumResult run_max_sum(const FactorGraph& g, const BpOptions& options) {
    PairwiseModel model = PairwiseModel::from(g);
    PairwiseRunner runner(model);
    runner.max_mode = true;
    MaxSumResult res;
    res.report = runner.run(options);
    res.messages = runner.message_set(res.report.iterations);

    // Decode in breadth-first order from the lowest id of each component,
    // conditioning on neighbors that are already decoded; remaining
    // neighbors contribute their max-product messages. Ties pick the lowest
    // state, and the conditioning keeps tied optima globally consistent.
    std::map<VarId, int> decoded;
    std::vector<VarId> order_roots = model.vars;
    std::sort(order_roots.begin(), order_roots.end());
    for (VarId root : order_roots) {
        if (decoded.count(root)) continue;
        std::deque<VarId> queue{root};
        std::map<VarId, bool> enqueued{{root, true}};
        while (!queue.empty()) {
            VarId v = queue.front();
            queue.pop_front();
            int vi = model.var_index(v);
            int cv = model.cards[static_cast<std::size_t>(vi)];
            std::vector<double> score(static_cast<std::size_t>(cv), 0.0);
            for (int x = 0; x < cv; ++x) {
                double phi = model.phi[static_cast<std::size_t>(vi)][static_cast<std::size_t>(x)];
                score[static_cast<std::size_t>(x)] = (phi > 0.0) ? std::log(phi) : kNegInf;
            }
            std::vector<VarId> nbrs;
            for (int e : model.adjacency[static_cast<std::size_t>(vi)]) {
                const auto& [a, b] = model.edges[static_cast<std::size_t>(e)];
                VarId nb = (a == v) ? b : a;
                nbrs.push_back(nb);
                if (decoded.count(nb)) {
                    for (int x = 0; x < cv; ++x) {
                        double w = model.psi_at(e, nb, decoded[nb], x);
                        score[static_cast<std::size_t>(x)] += (w > 0.0) ? std::log(w) : kNegInf;
                    }
                } else {
                    const auto& msg = res.messages.message(nb, v);
                    for (int x = 0; x < cv; ++x) {
                        double w = msg[static_cast<std::size_t>(x)];
                        score[static_cast<std::size_t>(x)] += (w > 0.0) ? std::log(w) : kNegInf;
                    }
                }
            }
            int best = 0;
            for (int x = 1; x < cv; ++x)
                if (score[static_cast<std::size_t>(x)] > score[static_cast<std::size_t>(best)])
                    best = x;
            decoded[v] = best;
            std::sort(nbrs.begin(), nbrs.end());
            for (VarId nb : nbrs) {
                if (!decoded.count(nb) && !enqueued[nb]) {
                    enqueued[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
    }
    for (const auto& [v, x] : decoded) res.assignment.set(v, x);
    return res;
}

Beliefs edge_beliefs(const MessageSet& msgs, const FactorGraph& g) {
    PairwiseModel model = PairwiseModel::from(g);
    Beliefs out;
    // Node beliefs from the messages.
    for (VarId v : model.vars) {
        int vi = model.var_index(v);
        std::vector<double> b = model.phi[static_cast<std::size_t>(vi)];
        for (int e : model.adjacency[static_cast<std::size_t>(vi)]) {
            const auto& [a, bb] = model.edges[static_cast<std::size_t>(e)];
            VarId nb = (a == v) ? bb : a;
            const auto& msg = msgs.message(nb, v);
            kernels::mul(b.data(), b.data(), msg.data(), b.size());
        }
        normalize_or_throw(b, "a node belief");
        out.node[v] = std::move(b);
    }
    for (std::size_t e = 0; e < model.edges.size(); ++e) {
        auto [i, j] = model.edges[e];
        int ci = model.cards[static_cast<std::size_t>(model.var_index(i))];
        int cj = model.cards[static_cast<std::size_t>(model.var_index(j))];
        // phi_i * prod_{k != j} m_{k->i} and symmetrically for j.
        auto half = [&](VarId v, VarId excl) {
            int vi = model.var_index(v);
            std::vector<double> p = model.phi[static_cast<std::size_t>(vi)];
            for (int e2 : model.adjacency[static_cast<std::size_t>(vi)]) {
                const auto& [a, b] = model.edges[static_cast<std::size_t>(e2)];
                VarId nb = (a == v) ? b : a;
                if (nb == excl) continue;
                const auto& msg = msgs.message(nb, v);
                kernels::mul(p.data(), p.data(), msg.data(), p.size());
            }
            return p;
        };
        std::vector<double> hi = half(i, j), hj = half(j, i);
        std::vector<double> table(static_cast<std::size_t>(ci * cj));
        const Factor& psi = model.psi[e];
        for (int xi = 0; xi < ci; ++xi)
            for (int xj = 0; xj < cj; ++xj)
                table[static_cast<std::size_t>(xi * cj + xj)] =
                    hi[static_cast<std::size_t>(xi)] * hj[static_cast<std::size_t>(xj)] *
                    psi.table()[static_cast<std::size_t>(xi * cj + xj)];
        normalize_or_throw(table, "an edge belief");
        out.edge.emplace(std::make_pair(i, j), Factor({i, j}, {ci, cj}, std::move(table)));
    }
    return out;
}

FactorGraphSpResult run_factor_graph_sp(const FactorGraph& g, const BpOptions& options) {
    const auto& raw = g.factors();
    std::vector<Factor> factors;
    factors.reserve(raw.size());
    for (const Factor& f : raw) factors.push_back(f.to_linear());

    // Per variable: list of (factor, slot).
    std::map<VarId, std::vector<std::pair<int, int>>> var_slots;
    for (int fi = 0; fi < static_cast<int>(factors.size()); ++fi)
        for (int s = 0; s < factors[static_cast<std::size_t>(fi)].arity(); ++s)
            var_slots[factors[static_cast<std::size_t>(fi)].scope()[static_cast<std::size_t>(s)]]
                .emplace_back(fi, s);

    FgMessageSet ms;
    ms.to_factor.resize(factors.size());
    ms.to_var.resize(factors.size());
    for (std::size_t fi = 0; fi < factors.size(); ++fi) {
        const Factor& f = factors[fi];
        ms.to_factor[fi].resize(static_cast<std::size_t>(f.arity()));
        ms.to_var[fi].resize(static_cast<std::size_t>(f.arity()));
        for (int s = 0; s < f.arity(); ++s) {
            int c = f.cards()[static_cast<std::size_t>(s)];
            ms.to_factor[fi][static_cast<std::size_t>(s)].assign(static_cast<std::size_t>(c),
                                                                 1.0 / c);
            ms.to_var[fi][static_cast<std::size_t>(s)].assign(static_cast<std::size_t>(c),
                                                              1.0 / c);
        }
    }

    auto new_to_factor = [&](int fi, int s, const FgMessageSet& state) {
        VarId v = factors[static_cast<std::size_t>(fi)].scope()[static_cast<std::size_t>(s)];
        int c = factors[static_cast<std::size_t>(fi)].cards()[static_cast<std::size_t>(s)];
        std::vector<double> out(static_cast<std::size_t>(c), 1.0);
        for (auto [fj, sj] : var_slots[v]) {
            if (fj == fi && sj == s) continue;
            kernels::mul(out.data(), out.data(),
                         state.to_var[static_cast<std::size_t>(fj)][static_cast<std::size_t>(sj)]
                             .data(),
                         out.size());
        }
        normalize_or_throw(out, "a variable-to-factor message");
        return out;
    };
    auto new_to_var = [&](int fi, int s, const FgMessageSet& state) {
        const Factor& f = factors[static_cast<std::size_t>(fi)];
        VarId v = f.scope()[static_cast<std::size_t>(s)];
        Factor acc = f;
        for (int s2 = 0; s2 < f.arity(); ++s2) {
            if (s2 == s) continue;
            VarId u = f.scope()[static_cast<std::size_t>(s2)];
            acc = acc.product(
                Factor({u}, {f.cards()[static_cast<std::size_t>(s2)]},
                       state.to_factor[static_cast<std::size_t>(fi)][static_cast<std::size_t>(s2)]));
        }
        for (int s2 = 0; s2 < f.arity(); ++s2)
            if (s2 != s) acc = acc.marginalize(f.scope()[static_cast<std::size_t>(s2)]);
        std::vector<double> out = acc.table();
        (void)v;
        normalize_or_throw(out, "a factor-to-variable message");
        return out;
    };

    BpOptions o = options;
    int auto_iter_n = std::max(1, g.num_variables());
    int max_iter = o.max_iter > 0 ? o.max_iter : 10 * auto_iter_n * auto_iter_n;
    if (o.damping < 0.0 || o.damping >= 1.0)
        throw ValidationError("damping must lie in [0, 1)");

    FactorGraphSpResult res;
    for (int t = 1; t <= max_iter; ++t) {
        double change = 0.0;
        auto apply = [&](std::vector<double>& slot, std::vector<double> next) {
            for (std::size_t x = 0; x < next.size(); ++x) {
                double damped = (1.0 - o.damping) * next[x] + o.damping * slot[x];
                change = std::max(change, std::abs(damped - slot[x]));
                slot[x] = damped;
            }
        };
        if (o.schedule == Schedule::Synchronous) {
            FgMessageSet prev = ms;
            for (std::size_t fi = 0; fi < factors.size(); ++fi)
                for (int s = 0; s < factors[fi].arity(); ++s) {
                    apply(ms.to_factor[fi][static_cast<std::size_t>(s)],
                          new_to_factor(static_cast<int>(fi), s, prev));
                    apply(ms.to_var[fi][static_cast<std::size_t>(s)],
                          new_to_var(static_cast<int>(fi), s, prev));
                }
        } else {
            for (std::size_t fi = 0; fi < factors.size(); ++fi)
                for (int s = 0; s < factors[fi].arity(); ++s) {
                    apply(ms.to_factor[fi][static_cast<std::size_t>(s)],
                          new_to_factor(static_cast<int>(fi), s, ms));
                    apply(ms.to_var[fi][static_cast<std::size_t>(s)],
                          new_to_var(static_cast<int>(fi), s, ms));
                }
        }
        res.report.trajectory.push_back(change);
        res.report.iterations = t;
        res.report.final_change = change;
        if (change <= o.tol) {
            res.report.converged = true;
            break;
        }
    }
    res.report.rho_hat = rho_estimate(res.report.trajectory);
    ms.iterations = res.report.iterations;

    for (VarId v : g.variables()) {
        std::vector<double> b(static_cast<std::size_t>(g.card(v)), 1.0);
        for (auto [fj, sj] : var_slots[v])
            kernels::mul(b.data(), b.data(),
                         ms.to_var[static_cast<std::size_t>(fj)][static_cast<std::size_t>(sj)]
                             .data(),
                         b.size());
        normalize_or_throw(b, "a node belief");
        res.beliefs.node[v] = std::move(b);
    }
    res.messages = std::move(ms);
    return res;
}

BetheResult bethe_free_energy(const Beliefs& beliefs, const FactorGraph& g) {
    PairwiseModel model = PairwiseModel::from(g);
    BetheResult out;

    auto log_or_throw = [](double pot, double mass) {
        if (mass <= 0.0) return 0.0;  // no belief mass, no contribution
        if (pot <= 0.0)
            throw ValidationError("belief mass on a -inf log-potential entry");
        return std::log(pot);
    };

    for (VarId v : model.vars) {
        int vi = model.var_index(v);
        int d = static_cast<int>(model.adjacency[static_cast<std::size_t>(vi)].size());
        out.degrees[v] = d;
        auto it = beliefs.node.find(v);
        if (it == beliefs.node.end())
            throw ValidationError("missing node belief for variable " + std::to_string(v));
        const auto& mu = it->second;
        double h = 0.0, e = 0.0;
        for (std::size_t x = 0; x < mu.size(); ++x) {
            h -= xlogx(mu[x]);
            e += mu[x] * log_or_throw(model.phi[static_cast<std::size_t>(vi)][x], mu[x]);
        }
        out.entropy += (1 - d) * h;
        out.energy += (1 - d) * e;
    }

    for (std::size_t ei = 0; ei < model.edges.size(); ++ei) {
        auto [i, j] = model.edges[ei];
        auto it = beliefs.edge.find({i, j});
        if (it == beliefs.edge.end())
            throw ValidationError("missing edge belief for (" + std::to_string(i) + "," +
                                  std::to_string(j) + ")");
        const Factor& mu = it->second;
        int ci = model.cards[static_cast<std::size_t>(model.var_index(i))];
        int cj = model.cards[static_cast<std::size_t>(model.var_index(j))];
        Factor aligned = Factor::ones({i, j}, {ci, cj}).product(mu);
        double h = 0.0, e = 0.0;
        for (int xi = 0; xi < ci; ++xi) {
            for (int xj = 0; xj < cj; ++xj) {
                double v = aligned.table()[static_cast<std::size_t>(xi * cj + xj)];
                h -= xlogx(v);
                double pot = model.psi[ei].table()[static_cast<std::size_t>(xi * cj + xj)] *
                             model.phi[static_cast<std::size_t>(model.var_index(i))]
                                      [static_cast<std::size_t>(xi)] *
                             model.phi[static_cast<std::size_t>(model.var_index(j))]
                                      [static_cast<std::size_t>(xj)];
                e += v * log_or_throw(pot, v);
            }
        }
        out.entropy += h;
        out.energy += e;
    }
    out.f_bethe = out.energy + out.entropy;
    return out;
}

HardcoreDescentResult hardcore_bethe_descent(const FactorGraph& g, double eps, long max_t) {
    if (eps <= 0.0) throw ValidationError("eps must be positive");
    PairwiseModel model = PairwiseModel::from(g);
    for (int c : model.cards)
        if (c != 2) throw ValidationError("hardcore model requires binary variables");
    for (const auto& phi : model.phi)
        if (phi[0] != 1.0 || phi[1] != 1.0)
            throw ValidationError("hardcore model requires unit node potentials");
    for (const Factor& psi : model.psi) {
        const auto& t = psi.table();
        if (t[0] != 1.0 || t[1] != 1.0 || t[2] != 1.0 || t[3] != 0.0)
            throw ValidationError("hardcore model requires psi = 1 - x_i x_j");
    }

    constexpr double kDelta = 1e-9;
    const int n = static_cast<int>(model.vars.size());
    int dmax = 0;
    for (const auto& adj : model.adjacency)
        dmax = std::max(dmax, static_cast<int>(adj.size()));

    auto free_energy = [&](const std::vector<double>& y) {
        double f = 0.0;
        for (int vi = 0; vi < n; ++vi) {
            int d = static_cast<int>(model.adjacency[static_cast<std::size_t>(vi)].size());
            double yv = y[static_cast<std::size_t>(vi)];
            f += (1 - d) * (-xlogx(yv) - xlogx(1.0 - yv));
        }
        for (const auto& [a, b] : model.edges) {
            double yi = y[static_cast<std::size_t>(model.var_index(a))];
            double yj = y[static_cast<std::size_t>(model.var_index(b))];
            double rest = 1.0 - yi - yj;
            if (rest < 0.0) return kNegInf;  // infeasible pairwise belief
            f += -xlogx(yi) - xlogx(yj) - xlogx(rest);
        }
        return f;
    };

    std::vector<double> y(static_cast<std::size_t>(n));
    for (int vi = 0; vi < n; ++vi)
        y[static_cast<std::size_t>(vi)] =
            1.0 / (static_cast<double>(model.adjacency[static_cast<std::size_t>(vi)].size()) + 2.0);

    HardcoreDescentResult res;
    res.vars = model.vars;
    double budget_d = static_cast<double>(n) * n * std::pow(2.0, dmax) / std::pow(eps, 4);
    res.budget = (budget_d > static_cast<double>(max_t)) ? max_t
                                                         : static_cast<long>(budget_d) + 1;
    res.best_f = free_energy(y);
    res.y = y;

    const double alpha0 = 1.0 / std::pow(2.0, dmax);
    std::vector<double> grad(static_cast<std::size_t>(n));
    long stale = 0;
    for (long t = 1; t <= res.budget; ++t) {
        for (int vi = 0; vi < n; ++vi) {
            double yv = y[static_cast<std::size_t>(vi)];
            int d = static_cast<int>(model.adjacency[static_cast<std::size_t>(vi)].size());
            double gsum = (1 - d) * std::log((1.0 - yv) / yv);
            for (int e : model.adjacency[static_cast<std::size_t>(vi)]) {
                const auto& [a, b] = model.edges[static_cast<std::size_t>(e)];
                VarId nb = (model.var_index(a) == vi) ? b : a;
                double rest = 1.0 - yv - y[static_cast<std::size_t>(model.var_index(nb))];
                gsum += std::log(std::max(rest, kDelta) / yv);
            }
            grad[static_cast<std::size_t>(vi)] = gsum;
        }
        double alpha = alpha0 / std::sqrt(static_cast<double>(t));
        for (int vi = 0; vi < n; ++vi) {
            double v = y[static_cast<std::size_t>(vi)] + alpha * grad[static_cast<std::size_t>(vi)];
            y[static_cast<std::size_t>(vi)] = std::clamp(v, kDelta, 1.0 - kDelta);
        }
        double f = free_energy(y);
        res.trajectory.push_back(f);
        res.iterations = t;
        if (f > res.best_f) {
            if (f - res.best_f < 1e-14)
                ++stale;
            else
                stale = 0;
            res.best_f = f;
            res.y = y;
        } else {
            ++stale;
        }
        if (stale > 2000) break;  // long plateau, no further measurable gain
    }
    return res;
}

}  // namespace pgm
