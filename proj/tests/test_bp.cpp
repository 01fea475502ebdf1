#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "helpers.hpp"

using namespace pgm;

namespace {

FactorGraph three_cycle(Rng& rng) {
    FactorGraph g;
    for (int v = 1; v <= 3; ++v) g.add_variable(v, 2);
    for (int v = 1; v <= 3; ++v) g.add_factor(th::random_factor(rng, {v}, {2}, 0.2, 1.0));
    g.add_factor(th::random_factor(rng, {1, 2}, {2, 2}, 0.2, 1.0));
    g.add_factor(th::random_factor(rng, {2, 3}, {2, 2}, 0.2, 1.0));
    g.add_factor(th::random_factor(rng, {1, 3}, {2, 2}, 0.2, 1.0));
    return g;
}

FactorGraph hardcore(const std::vector<std::pair<VarId, VarId>>& edges, int n) {
    FactorGraph g;
    for (int v = 1; v <= n; ++v) g.add_variable(v, 2);
    for (auto [a, b] : edges) g.add_factor(Factor({a, b}, {2, 2}, {1, 1, 1, 0}));
    return g;
}

double max_belief_gap(const Beliefs& beliefs, const Distribution& oracle) {
    double gap = 0.0;
    for (const auto& [v, b] : beliefs.node) {
        Factor want = oracle.marginal({v});
        for (std::size_t x = 0; x < b.size(); ++x)
            gap = std::max(gap, std::abs(b[x] - want.table()[x]));
    }
    return gap;
}

}  // namespace

TEST_CASE("single node converges immediately to the normalized potential") {
    FactorGraph g;
    g.add_variable(1, 2);
    g.add_factor(Factor({1}, {2}, {1, 3}));
    auto res = run_sum_product(g);
    CHECK(res.report.converged);
    CHECK(res.report.iterations == 1);
    CHECK(res.beliefs.node.at(1)[0] == doctest::Approx(0.25));
    CHECK(res.beliefs.node.at(1)[1] == doctest::Approx(0.75));
}

TEST_CASE("sum-product is exact on trees within diameter+1 iterations") {
    Rng rng(71);
    for (int trial = 0; trial < 30; ++trial) {
        FactorGraph g = th::random_tree_model(rng, 2 + rng.uniform_int(14));
        auto res = run_sum_product(g);
        CHECK(res.report.converged);
        CHECK(res.report.iterations <= th::interaction_diameter(g) + 1);
        CHECK(max_belief_gap(res.beliefs, brute_force(g)) < 1e-10);
        CHECK(res.report.rho_hat < 1.0);
    }
}

TEST_CASE("sequential schedule reaches the same fixed point on trees") {
    Rng rng(73);
    FactorGraph g = th::random_tree_model(rng, 9);
    BpOptions opts;
    opts.schedule = Schedule::Sequential;
    auto res = run_sum_product(g, opts);
    CHECK(res.report.converged);
    CHECK(max_belief_gap(res.beliefs, brute_force(g)) < 1e-10);
}

TEST_CASE("damping leaves the fixed point unchanged") {
    Rng rng(79);
    FactorGraph g = th::random_tree_model(rng, 8);
    BpOptions opts;
    opts.damping = 0.4;
    auto res = run_sum_product(g, opts);
    CHECK(res.report.converged);
    CHECK(max_belief_gap(res.beliefs, brute_force(g)) < 1e-9);
}

TEST_CASE("loopy beliefs on the 3-cycle differ from the oracle but stay sane") {
    Rng rng(83);
    FactorGraph g = three_cycle(rng);
    auto res = run_sum_product(g);
    CHECK(res.report.converged);
    double gap = max_belief_gap(res.beliefs, brute_force(g));
    CHECK(gap >= 0.0);
    CHECK(gap < 0.5);  // recorded, not asserted exact
}

TEST_CASE("messages and beliefs stay normalized at every iteration") {
    Rng rng(89);
    FactorGraph g = th::random_pairwise_model(rng, 6, 0.5);
    for (int iters = 1; iters <= 5; ++iters) {
        BpOptions opts;
        opts.max_iter = iters;
        opts.tol = 0.0;
        auto res = run_sum_product(g, opts);
        for (const auto& m : res.messages.msg) {
            double s = 0.0;
            for (double v : m) {
                CHECK(v >= 0.0);
                s += v;
            }
            CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        }
        for (const auto& [v, b] : res.beliefs.node) {
            double s = 0.0;
            for (double x : b) s += x;
            CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("a converged message set is a fixed point of one more update") {
    Rng rng(97);
    FactorGraph g = th::random_pairwise_model(rng, 7, 0.4);
    auto res = run_sum_product(g);
    REQUIRE(res.report.converged);
    BpOptions opts;
    opts.max_iter = res.report.iterations + 1;
    auto res2 = run_sum_product(g, opts);
    CHECK(res2.report.final_change <= 1e-9);
}

TEST_CASE("hard constraints that annihilate a message are reported") {
    FactorGraph g;
    g.add_variable(1, 2);
    g.add_variable(2, 2);
    g.add_factor(Factor({1, 2}, {2, 2}, {0, 0, 0, 0}));
    CHECK_THROWS_AS(run_sum_product(g), ZeroMassError);
}

TEST_CASE("non-pairwise graphs are rejected by the pairwise runner") {
    FactorGraph g;
    for (int v = 1; v <= 3; ++v) g.add_variable(v, 2);
    g.add_factor(Factor::ones({1, 2, 3}, {2, 2, 2}));
    CHECK_THROWS_AS(run_sum_product(g), ValidationError);
    CHECK_THROWS_AS(run_max_sum(g), ValidationError);
}

TEST_CASE("unrolled-chain semantics of synchronous messages on the 3-cycle") {
    Rng rng(101);
    FactorGraph g = three_cycle(rng);
    PairwiseModel model = PairwiseModel::from(g);

    // Exact message of the depth-t unrolled chain, computed recursively:
    // on the cycle, N(from)\{to} is the single remaining vertex.
    auto third = [](VarId a, VarId b) { return 6 - a - b; };
    std::function<std::vector<double>(int, VarId, VarId)> unrolled =
        [&](int t, VarId from, VarId to) -> std::vector<double> {
        std::vector<double> incoming(2, 0.5);
        if (t > 1) incoming = unrolled(t - 1, third(from, to), from);
        int e = model.edge_index(from, to);
        std::vector<double> out(2, 0.0);
        for (int xt = 0; xt < 2; ++xt)
            for (int xf = 0; xf < 2; ++xf)
                out[static_cast<std::size_t>(xt)] +=
                    model.phi[static_cast<std::size_t>(model.var_index(from))]
                             [static_cast<std::size_t>(xf)] *
                    model.psi_at(e, from, xf, xt) * incoming[static_cast<std::size_t>(xf)];
        double s = out[0] + out[1];
        out[0] /= s;
        out[1] /= s;
        return out;
    };

    for (int t = 1; t <= 4; ++t) {
        BpOptions opts;
        opts.max_iter = t;
        opts.tol = 0.0;
        auto res = run_sum_product(g, opts);
        auto want = unrolled(t, 2, 1);
        const auto& got = res.messages.message(2, 1);
        CHECK(got[0] == doctest::Approx(want[0]).epsilon(1e-12));
        CHECK(got[1] == doctest::Approx(want[1]).epsilon(1e-12));
    }
}

TEST_CASE("max-sum attains the oracle MAP weight on trees") {
    Rng rng(103);
    for (int trial = 0; trial < 30; ++trial) {
        FactorGraph g = th::random_tree_model(rng, 2 + rng.uniform_int(9));
        auto res = run_max_sum(g);
        CHECK(res.report.converged);
        double best = 0.0;
        for (const auto& a : th::all_assignments(g)) best = std::max(best, g.evaluate(a));
        CHECK(g.log_evaluate(res.assignment) ==
              doctest::Approx(std::log(best)).epsilon(1e-10));
    }
}

TEST_CASE("max-sum decodes hand-checked instances") {
    // All-uniform potentials: every assignment ties, decode all zeros.
    FactorGraph uni;
    for (int v = 1; v <= 4; ++v) uni.add_variable(v, 2);
    for (int v = 1; v < 4; ++v) uni.add_factor(Factor::ones({v, v + 1}, {2, 2}));
    auto res = run_max_sum(uni);
    for (int v = 1; v <= 4; ++v) CHECK(res.assignment.at(v) == 0);

    // Hardcore edge with biased nodes: ties resolve to (0, 1), weight 2.
    FactorGraph hard;
    hard.add_variable(1, 2);
    hard.add_variable(2, 2);
    hard.add_factor(Factor({1}, {2}, {1, 2}));
    hard.add_factor(Factor({2}, {2}, {1, 2}));
    hard.add_factor(Factor({1, 2}, {2, 2}, {1, 1, 1, 0}));
    auto res2 = run_max_sum(hard);
    CHECK(res2.assignment.at(1) == 0);
    CHECK(res2.assignment.at(2) == 1);
    CHECK(std::exp(hard.log_evaluate(res2.assignment)) == doctest::Approx(2.0));
}

TEST_CASE("factor-graph sum-product matches the pairwise runner on trees") {
    Rng rng(107);
    FactorGraph g = th::random_tree_model(rng, 8);
    auto pairwise = run_sum_product(g);
    auto fg = run_factor_graph_sp(g);
    CHECK(fg.report.converged);
    for (const auto& [v, b] : pairwise.beliefs.node) {
        const auto& fb = fg.beliefs.node.at(v);
        for (std::size_t x = 0; x < b.size(); ++x)
            CHECK(fb[x] == doctest::Approx(b[x]).epsilon(1e-12));
    }
}

TEST_CASE("factor-graph sum-product is exact on acyclic factor graphs") {
    Rng rng(109);
    FactorGraph g;
    for (int v = 1; v <= 3; ++v) g.add_variable(v, 2);
    g.add_factor(th::random_factor(rng, {1, 2, 3}, {2, 2, 2}, 0.2, 1.0));
    auto res = run_factor_graph_sp(g);
    CHECK(res.report.converged);
    CHECK(max_belief_gap(res.beliefs, brute_force(g)) < 1e-10);

    FactorGraph single;
    single.add_variable(1, 2);
    single.add_factor(Factor({1}, {2}, {2, 6}));
    auto res2 = run_factor_graph_sp(single);
    CHECK(res2.beliefs.node.at(1)[0] == doctest::Approx(0.25));
    CHECK(res2.beliefs.node.at(1)[1] == doctest::Approx(0.75));
}

TEST_CASE("edge beliefs marginalize onto node beliefs on converged trees") {
    Rng rng(113);
    for (int trial = 0; trial < 10; ++trial) {
        FactorGraph g = th::random_tree_model(rng, 3 + rng.uniform_int(8));
        auto res = run_sum_product(g);
        REQUIRE(res.report.converged);
        Beliefs b = edge_beliefs(res.messages, g);
        Distribution oracle = brute_force(g);
        for (const auto& [key, mu] : b.edge) {
            auto [i, j] = key;
            Factor onto_i = mu.marginalize(j);
            for (int x = 0; x < 2; ++x)
                CHECK(onto_i.table()[static_cast<std::size_t>(x)] ==
                      doctest::Approx(b.node.at(i)[static_cast<std::size_t>(x)]).epsilon(1e-8));
            Factor want = oracle.marginal({i, j});
            for (const auto& a : th::all_assignments({i, j}, {2, 2}))
                CHECK(mu.at(a) == doctest::Approx(want.at(a)).epsilon(1e-8));
        }
    }
}

TEST_CASE("edge beliefs of the uniform model are uniform") {
    FactorGraph g;
    for (int v = 1; v <= 3; ++v) g.add_variable(v, 2);
    g.add_factor(Factor::ones({1, 2}, {2, 2}));
    g.add_factor(Factor::ones({2, 3}, {2, 2}));
    auto res = run_sum_product(g);
    Beliefs b = edge_beliefs(res.messages, g);
    for (const auto& [key, mu] : b.edge)
        for (double v : mu.table()) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("Bethe free energy equals log Z at converged tree beliefs") {
    Rng rng(127);
    for (int trial = 0; trial < 20; ++trial) {
        FactorGraph g = th::random_tree_model(rng, 2 + rng.uniform_int(10));
        auto res = run_sum_product(g);
        REQUIRE(res.report.converged);
        Beliefs b = edge_beliefs(res.messages, g);
        auto bethe = bethe_free_energy(b, g);
        CHECK(bethe.f_bethe == doctest::Approx(brute_force(g).log_z()).epsilon(1e-6));
    }
}

TEST_CASE("single free node has pure-entropy free energy ln 2") {
    FactorGraph g;
    g.add_variable(1, 2);
    g.add_factor(Factor({1}, {2}, {1, 1}));
    auto res = run_sum_product(g);
    Beliefs b = edge_beliefs(res.messages, g);
    auto bethe = bethe_free_energy(b, g);
    CHECK(bethe.f_bethe == doctest::Approx(std::log(2.0)));
    CHECK(bethe.energy == doctest::Approx(0.0));
    CHECK(bethe.entropy == doctest::Approx(std::log(2.0)));
}

TEST_CASE("loopy Bethe value differs from log Z and the gap is finite") {
    Rng rng(131);
    FactorGraph g = three_cycle(rng);
    auto res = run_sum_product(g);
    REQUIRE(res.report.converged);
    auto bethe = bethe_free_energy(edge_beliefs(res.messages, g), g);
    double gap = std::abs(bethe.f_bethe - brute_force(g).log_z());
    CHECK(std::isfinite(gap));
}

TEST_CASE("Bethe rejects belief mass on zero potentials") {
    FactorGraph g;
    g.add_variable(1, 2);
    g.add_factor(Factor({1}, {2}, {0.0, 1.0}));
    Beliefs b;
    b.node[1] = {0.5, 0.5};
    CHECK_THROWS_AS(bethe_free_energy(b, g), ValidationError);
}

TEST_CASE("F(mu) <= log Z for random product distributions") {
    Rng rng(137);
    for (int trial = 0; trial < 50; ++trial) {
        FactorGraph g = th::random_tree_model(rng, 2 + rng.uniform_int(5));
        double log_z = brute_force(g).log_z();
        std::map<VarId, std::vector<double>> q;
        for (VarId v : g.variables()) {
            double p = rng.uniform(0.05, 0.95);
            q[v] = {1.0 - p, p};
        }
        double f = 0.0;
        for (const auto& a : th::all_assignments(g)) {
            double mu = 1.0;
            for (const auto& [v, x] : a) mu *= q[v][static_cast<std::size_t>(x)];
            f += mu * (std::log(g.evaluate(a)) - std::log(mu));
        }
        CHECK(f <= log_z + 1e-9);
    }
}

TEST_CASE("Bethe on product beliefs equals the enumerated F(mu)") {
    Rng rng(139);
    FactorGraph g = th::random_tree_model(rng, 5);
    std::map<VarId, std::vector<double>> q;
    for (VarId v : g.variables()) {
        double p = rng.uniform(0.1, 0.9);
        q[v] = {1.0 - p, p};
    }
    Beliefs b;
    for (const auto& [v, dist] : q) b.node[v] = dist;
    for (auto [i, j] : g.interaction_edges()) {
        std::vector<double> t(4);
        for (int xi = 0; xi < 2; ++xi)
            for (int xj = 0; xj < 2; ++xj)
                t[static_cast<std::size_t>(2 * xi + xj)] =
                    q[i][static_cast<std::size_t>(xi)] * q[j][static_cast<std::size_t>(xj)];
        b.edge.emplace(std::make_pair(i, j), Factor({i, j}, {2, 2}, t));
    }
    double direct = 0.0;
    for (const auto& a : th::all_assignments(g)) {
        double mu = 1.0;
        for (const auto& [v, x] : a) mu *= q[v][static_cast<std::size_t>(x)];
        direct += mu * (std::log(g.evaluate(a)) - std::log(mu));
    }
    auto bethe = bethe_free_energy(b, g);
    CHECK(bethe.f_bethe == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("hardcore descent on a single free node") {
    FactorGraph g;
    g.add_variable(1, 2);
    auto res = hardcore_bethe_descent(g, 1e-3, 20000);
    CHECK(res.best_f == doctest::Approx(std::log(2.0)).epsilon(1e-6));
    CHECK(res.y[0] == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("hardcore descent on a single edge reaches ln 3") {
    FactorGraph g = hardcore({{1, 2}}, 2);
    auto res = hardcore_bethe_descent(g, 1e-3, 50000);
    CHECK(res.best_f == doctest::Approx(std::log(3.0)).epsilon(1e-3));
    CHECK(res.iterations <= res.budget);
}

TEST_CASE("hardcore descent on the 3-cycle matches a grid search") {
    FactorGraph g = hardcore({{1, 2}, {2, 3}, {1, 3}}, 3);
    auto res = hardcore_bethe_descent(g, 1e-2, 50000);

    // Independent grid oracle: coarse 3D sweep, then local refinement.
    auto xlx = [](double v) { return v > 0.0 ? v * std::log(v) : 0.0; };
    auto f3 = [&](double y1, double y2, double y3) {
        double ys[3] = {y1, y2, y3};
        double f = 0.0;
        for (double y : ys) f -= -xlx(y) - xlx(1.0 - y);  // (1 - d_i) = -1
        double pairs[3][2] = {{y1, y2}, {y2, y3}, {y1, y3}};
        for (auto& p : pairs) {
            double rest = 1.0 - p[0] - p[1];
            if (rest < 0.0) return -1e18;
            f += -xlx(p[0]) - xlx(p[1]) - xlx(rest);
        }
        return f;
    };
    double best = -1e18, by1 = 0, by2 = 0, by3 = 0;
    for (double y1 = 0.01; y1 < 0.99; y1 += 0.01)
        for (double y2 = 0.01; y2 < 0.99; y2 += 0.01)
            for (double y3 = 0.01; y3 < 0.99; y3 += 0.01) {
                double f = f3(y1, y2, y3);
                if (f > best) {
                    best = f;
                    by1 = y1;
                    by2 = y2;
                    by3 = y3;
                }
            }
    for (double y1 = by1 - 0.015; y1 <= by1 + 0.015; y1 += 0.001)
        for (double y2 = by2 - 0.015; y2 <= by2 + 0.015; y2 += 0.001)
            for (double y3 = by3 - 0.015; y3 <= by3 + 0.015; y3 += 0.001)
                best = std::max(best, f3(y1, y2, y3));

    CHECK(std::abs(res.best_f - best) <= 1e-2);
    CHECK(res.iterations <= res.budget);
}

TEST_CASE("hardcore descent rejects non-hardcore inputs") {
    Rng rng(149);
    FactorGraph g = th::random_tree_model(rng, 3);
    CHECK_THROWS_AS(hardcore_bethe_descent(g, 1e-2, 100), ValidationError);
}
