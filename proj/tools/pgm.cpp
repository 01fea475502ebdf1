// Command-line front end: inference, learning, and the two demos on the
// plain-text model/dataset formats described in pgm/io.hpp.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pgm/bp.hpp"
#include "pgm/canonical.hpp"
#include "pgm/exact.hpp"
#include "pgm/io.hpp"
#include "pgm/junction.hpp"
#include "pgm/learning.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNoConvergence = 2;
constexpr int kExitIntractable = 3;

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

pgm::FactorGraph as_factor_graph(const pgm::io::ParsedModel& m) {
    if (std::holds_alternative<pgm::FactorGraph>(m)) return std::get<pgm::FactorGraph>(m);
    return std::get<pgm::DirectedModel>(m).to_factor_graph();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw pgm::ValidationError("cannot write " + path);
    out << text;
}

struct JtreePipeline {
    pgm::JunctionTree tree;
    pgm::CliqueCalibration calibration;
    int width = 0;
};

JtreePipeline run_jtree(const pgm::FactorGraph& g) {
    JtreePipeline out;
    auto interaction = pgm::UGraph::from_factor_graph(g);
    auto order = pgm::find_order(g, pgm::OrderHeuristic::MinFill);
    auto tri = pgm::triangulate(interaction, order);
    auto cliques = pgm::maximal_cliques(tri.graph);
    double work = 0.0;
    for (const auto& c : cliques) {
        double t = 1.0;
        for (pgm::VarId v : c) t *= g.card(v);
        work += t;
        out.width = std::max(out.width, static_cast<int>(c.size()) - 1);
    }
    if (work > double(1 << 24))
        throw pgm::IntractableError("triangulated cliques too large for exact calibration");
    out.tree = pgm::build_junction_tree(cliques);
    out.calibration = pgm::calibrate(out.tree, g);
    return out;
}

int cmd_infer(const std::string& model_path, const std::string& mode, const std::string& method,
              bool factor_graph_bp, double damping, double tol, int max_iter,
              const std::string& schedule, const std::string& out_path) {
    pgm::FactorGraph g = as_factor_graph(pgm::io::load_model(model_path));
    std::ostringstream out;
    int exit_code = kExitOk;

    pgm::BpOptions bp_opts;
    bp_opts.damping = damping;
    bp_opts.tol = tol;
    bp_opts.max_iter = max_iter;
    bp_opts.schedule =
        schedule == "sequential" ? pgm::Schedule::Sequential : pgm::Schedule::Synchronous;

    if (mode == "marg") {
        std::map<pgm::VarId, std::vector<double>> marginals;
        std::optional<double> log_z;
        if (method == "brute") {
            auto dist = pgm::brute_force(g);
            log_z = dist.log_z();
            for (pgm::VarId v : g.variables()) marginals[v] = dist.marginal({v}).table();
        } else if (method == "eliminate") {
            std::uint64_t ops = 0;
            int widest = 0;
            for (pgm::VarId v : g.variables()) {
                auto order = pgm::find_order(g, pgm::OrderHeuristic::MinFill, v);
                auto rep = pgm::eliminate(g, v, order, pgm::ElimMode::Sum);
                marginals[v] = rep.marginal().table();
                if (!log_z) log_z = rep.log_z();
                ops += rep.table_ops;
                widest = std::max(widest, rep.max_intermediate_scope);
            }
            out << "# max intermediate scope " << widest << ", table ops " << ops << "\n";
        } else if (method == "jtree") {
            auto jt = run_jtree(g);
            log_z = jt.calibration.log_z;
            for (pgm::VarId v : g.variables())
                marginals[v] = jt.calibration.variable_marginal(v).table();
            out << "# junction tree width " << jt.width << ", cliques "
                << jt.tree.cliques.size() << "\n";
        } else if (method == "bp") {
            pgm::ConvergenceReport report;
            if (factor_graph_bp) {
                auto res = pgm::run_factor_graph_sp(g, bp_opts);
                report = res.report;
                for (const auto& [v, b] : res.beliefs.node) marginals[v] = b;
            } else {
                auto res = pgm::run_sum_product(g, bp_opts);
                report = res.report;
                for (const auto& [v, b] : res.beliefs.node) marginals[v] = b;
                auto beliefs = pgm::edge_beliefs(res.messages, g);
                out << "# F_Bethe " << num(pgm::bethe_free_energy(beliefs, g).f_bethe) << "\n";
            }
            out << "# bp iterations " << report.iterations << " converged "
                << (report.converged ? "yes" : "no") << " final change "
                << num(report.final_change) << " rho_hat " << num(report.rho_hat) << "\n";
            if (!report.converged) exit_code = kExitNoConvergence;
        } else {
            throw pgm::ValidationError("unknown marg method '" + method + "'");
        }
        if (log_z) out << "logZ " << num(*log_z) << "\n";
        for (const auto& [v, marg] : marginals) {
            out << "marginal " << v;
            for (double p : marg) out << " " << num(p);
            out << "\n";
        }
    } else if (mode == "map") {
        pgm::Assignment assignment;
        if (method == "brute") {
            auto dist = pgm::brute_force(g);
            std::size_t best = 0;
            for (std::size_t i = 1; i < dist.table().size(); ++i)
                if (dist.table()[i] > dist.table()[best]) best = i;
            std::size_t rem = best;
            for (int i = static_cast<int>(dist.scope().size()) - 1; i >= 0; --i) {
                int c = dist.cards()[static_cast<std::size_t>(i)];
                assignment.set(dist.scope()[static_cast<std::size_t>(i)],
                               static_cast<int>(rem % static_cast<std::size_t>(c)));
                rem /= static_cast<std::size_t>(c);
            }
        } else if (method == "eliminate") {
            pgm::VarId query = g.variables().front();
            for (pgm::VarId v : g.variables()) query = std::min(query, v);
            auto order = pgm::find_order(g, pgm::OrderHeuristic::MinFill, query);
            auto rep = pgm::eliminate(g, query, order, pgm::ElimMode::Max);
            assignment = pgm::map_backtrack(rep);
            out << "# max intermediate scope " << rep.max_intermediate_scope << "\n";
        } else if (method == "bp") {
            auto res = pgm::run_max_sum(g, bp_opts);
            assignment = res.assignment;
            out << "# bp iterations " << res.report.iterations << " converged "
                << (res.report.converged ? "yes" : "no") << "\n";
            if (!res.report.converged) exit_code = kExitNoConvergence;
        } else {
            throw pgm::ValidationError("mode map supports methods brute, eliminate, bp");
        }
        out << "map log-weight " << num(g.log_evaluate(assignment)) << "\n";
        out << "assignment";
        for (const auto& [v, x] : assignment) out << " " << v << "=" << x;
        out << "\n";
    } else {
        throw pgm::ValidationError("mode must be marg or map");
    }

    std::cout << out.str();
    if (!out_path.empty()) write_text(out_path, out.str());
    return exit_code;
}

int cmd_learn(const std::string& data_path, const std::string& task,
              const std::string& structure_path, double smoothing, const std::string& out_path) {
    pgm::Dataset data = pgm::io::load_dataset(data_path);
    std::ostringstream report;
    std::string model_text;

    auto need_structure = [&]() {
        if (structure_path.empty())
            throw pgm::ValidationError("task '" + task + "' requires --structure");
        return pgm::io::load_model(structure_path);
    };

    if (task == "bernoulli") {
        pgm::VarId v = data.variables.front().first;
        double theta = pgm::fit_bernoulli(data, v);
        report << "theta " << num(theta) << "\n";
        pgm::DirectedModel m;
        m.add_variable(v, 2);
        m.set_cpt(v, {1.0 - theta, theta});
        report << "loglik " << num(pgm::empirical_log_likelihood(data, m)) << "\n";
        model_text = pgm::io::write_model(m);
    } else if (task == "cpt" || task == "em") {
        auto parsed = need_structure();
        if (!std::holds_alternative<pgm::DirectedModel>(parsed))
            throw pgm::ValidationError("task '" + task + "' requires a BAYES structure file");
        auto structure = std::get<pgm::DirectedModel>(parsed);
        std::vector<pgm::VarId> hidden;
        for (pgm::VarId v : structure.variables())
            if (!data.has_variable(v)) hidden.push_back(v);
        if (task == "cpt" && !hidden.empty())
            throw pgm::ValidationError("dataset misses columns for the cpt task");
        pgm::EmOptions opts;
        opts.smoothing = smoothing;
        auto em = pgm::em_fit(structure, hidden, data, opts);
        report << "em iterations " << em.iterations << " hidden " << hidden.size() << "\n";
        report << "loglik " << num(em.bound.back()) << "\n";
        model_text = pgm::io::write_model(em.theta);
    } else if (task == "tree") {
        auto parsed = need_structure();
        auto edges = as_factor_graph(parsed).interaction_edges();
        auto fitted = pgm::fit_tree_mrf(edges, data, smoothing);
        report << "loglik " << num(pgm::empirical_log_likelihood(data, fitted)) << "\n";
        model_text = pgm::io::write_model(fitted);
    } else if (task == "chowliu") {
        auto res = pgm::chow_liu(data, smoothing);
        report << "edges";
        for (auto [a, b] : res.edges) report << " (" << a << "," << b << ")";
        report << "\n";
        report << "loglik " << num(pgm::empirical_log_likelihood(data, res.mrf)) << "\n";
        model_text = pgm::io::write_model(res.mrf);
    } else if (task == "expfam") {
        auto parsed = need_structure();
        auto edges = as_factor_graph(parsed).interaction_edges();
        auto fit = pgm::expfam_gradient_ascent(edges, data);
        report << "loglik " << num(fit.log_likelihood) << " grad-norm " << num(fit.grad_norm)
               << " steps " << fit.steps << "\n";
        for (const auto& [v, th] : fit.model.theta_node)
            report << "theta " << v << " " << num(th) << "\n";
        for (const auto& [e, th] : fit.model.theta_edge)
            report << "theta " << e.first << "," << e.second << " " << num(th) << "\n";
        model_text = pgm::io::write_model(fit.model.to_factor_graph());
    } else {
        throw pgm::ValidationError("unknown learn task '" + task + "'");
    }

    std::cout << report.str();
    if (!out_path.empty()) write_text(out_path, model_text);
    return kExitOk;
}

pgm::FactorGraph ising_grid(const pgm::io::Image& y, double a, double b) {
    pgm::FactorGraph g;
    auto id = [&](int r, int c) { return static_cast<pgm::VarId>(r * y.width + c + 1); };
    for (int r = 0; r < y.height; ++r)
        for (int c = 0; c < y.width; ++c) g.add_variable(id(r, c), 2);
    // State 0 is pixel -1, state 1 is pixel +1.
    for (int r = 0; r < y.height; ++r) {
        for (int c = 0; c < y.width; ++c) {
            double obs = y.at(r, c);
            g.add_factor(pgm::Factor({id(r, c)}, {2}, {std::exp(-a * obs), std::exp(a * obs)}));
            if (c + 1 < y.width)
                g.add_factor(pgm::Factor({id(r, c), id(r, c + 1)}, {2, 2},
                                         {std::exp(b), std::exp(-b), std::exp(-b), std::exp(b)}));
            if (r + 1 < y.height)
                g.add_factor(pgm::Factor({id(r, c), id(r + 1, c)}, {2, 2},
                                         {std::exp(b), std::exp(-b), std::exp(-b), std::exp(b)}));
        }
    }
    return g;
}

int cmd_denoise(const std::string& image_path, double a, double b, const std::string& method,
                const std::string& truth_path, double damping, const std::string& out_path) {
    pgm::io::Image y = pgm::io::load_image(image_path);
    pgm::FactorGraph g = ising_grid(y, a, b);
    int exit_code = kExitOk;

    pgm::Assignment assignment;
    if (method == "map-exact") {
        if (y.width * y.height > 24)
            throw pgm::IntractableError("exact decoding limited to 24 pixels");
        pgm::VarId query = 1;
        auto order = pgm::find_order(g, pgm::OrderHeuristic::MinFill, query);
        assignment = pgm::map_backtrack(pgm::eliminate(g, query, order, pgm::ElimMode::Max));
    } else if (method == "map-bp") {
        pgm::BpOptions opts;
        opts.damping = damping;
        auto res = pgm::run_max_sum(g, opts);
        assignment = res.assignment;
        if (!res.report.converged) exit_code = kExitNoConvergence;
        std::cout << "# bp iterations " << res.report.iterations << " converged "
                  << (res.report.converged ? "yes" : "no") << "\n";
    } else {
        throw pgm::ValidationError("method must be map-exact or map-bp");
    }

    pgm::io::Image restored = y;
    for (int r = 0; r < y.height; ++r)
        for (int c = 0; c < y.width; ++c)
            restored.pixels[static_cast<std::size_t>(r * y.width + c)] =
                assignment.at(static_cast<pgm::VarId>(r * y.width + c + 1)) == 1 ? 1 : -1;

    int vs_noisy = 0;
    for (std::size_t i = 0; i < restored.pixels.size(); ++i)
        vs_noisy += restored.pixels[i] != y.pixels[i];
    std::cout << "hamming vs input " << vs_noisy << "\n";
    if (!truth_path.empty()) {
        pgm::io::Image truth = pgm::io::load_image(truth_path);
        if (truth.width != y.width || truth.height != y.height)
            throw pgm::ValidationError("truth image dimensions differ from the input");
        int vs_truth = 0, noisy_vs_truth = 0;
        for (std::size_t i = 0; i < restored.pixels.size(); ++i) {
            vs_truth += restored.pixels[i] != truth.pixels[i];
            noisy_vs_truth += y.pixels[i] != truth.pixels[i];
        }
        std::cout << "hamming vs truth " << vs_truth << " (noisy input " << noisy_vs_truth
                  << ")\n";
    }
    std::cout << pgm::io::write_image(restored);
    if (!out_path.empty()) write_text(out_path, pgm::io::write_image(restored));
    return exit_code;
}

int cmd_crowdsource(const std::string& answers_path, const std::string& out_path) {
    auto answers = pgm::io::load_answers(answers_path);
    auto res = pgm::crowdsource_em(answers);
    std::ostringstream out;
    out << "# em iterations " << res.iterations << "\n";
    for (int t = 0; t < answers.num_tasks; ++t)
        out << "task " << t << " label " << res.labels[static_cast<std::size_t>(t)]
            << " confidence "
            << num(std::max(res.posterior_plus[static_cast<std::size_t>(t)],
                            1.0 - res.posterior_plus[static_cast<std::size_t>(t)]))
            << "\n";
    for (int w = 0; w < answers.num_workers; ++w) {
        out << "worker " << w << " reliability "
            << num(res.reliability[static_cast<std::size_t>(w)]) << " "
            << (res.no_answers[static_cast<std::size_t>(w)]
                    ? "no-answers"
                    : (res.reliability[static_cast<std::size_t>(w)] > 0.9 ? "reliable" : "noisy"))
            << "\n";
    }
    std::cout << out.str();
    if (!out_path.empty()) write_text(out_path, out.str());
    return kExitOk;
}

int cmd_sample(const std::string& model_path, int n, std::uint64_t seed,
               const std::string& out_path) {
    auto parsed = pgm::io::load_model(model_path);
    pgm::Dataset d = std::holds_alternative<pgm::DirectedModel>(parsed)
                         ? pgm::sample_dataset(std::get<pgm::DirectedModel>(parsed), n, seed)
                         : pgm::sample_dataset(std::get<pgm::FactorGraph>(parsed), n, seed);
    if (out_path.empty())
        std::cout << pgm::io::write_dataset(d);
    else
        pgm::io::save_dataset(d, out_path);
    return kExitOk;
}

int cmd_validate(const std::string& path, const std::string& kind) {
    if (kind == "model") {
        auto m = pgm::io::load_model(path);
        if (std::holds_alternative<pgm::FactorGraph>(m)) {
            const auto& g = std::get<pgm::FactorGraph>(m);
            std::cout << "ok markov variables " << g.num_variables() << " factors "
                      << g.factors().size() << "\n";
        } else {
            std::cout << "ok bayes variables "
                      << std::get<pgm::DirectedModel>(m).num_variables() << "\n";
        }
    } else if (kind == "dataset") {
        auto d = pgm::io::load_dataset(path);
        std::cout << "ok dataset variables " << d.variables.size() << " rows " << d.rows.size()
                  << (d.complete() ? " complete" : " incomplete") << "\n";
    } else if (kind == "image") {
        auto img = pgm::io::load_image(path);
        std::cout << "ok image " << img.width << "x" << img.height << "\n";
    } else if (kind == "answers") {
        auto a = pgm::io::load_answers(path);
        std::cout << "ok answers workers " << a.num_workers << " tasks " << a.num_tasks
                  << " entries " << a.entries.size() << "\n";
    } else {
        throw pgm::ValidationError("kind must be model, dataset, image, or answers");
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete graphical models: exact and approximate inference and learning"};
    app.require_subcommand(1);

    std::string model_path, data_path, image_path, answers_path, structure_path, truth_path;
    std::string mode = "marg", method = "brute", task, out_path, schedule = "synchronous";
    std::string kind = "model";
    bool fg_bp = false;
    double damping = 0.0, tol = 1e-9, smoothing = 0.0, a = 1.0, b = 0.5;
    int max_iter = 0, n = 100;
    std::uint64_t seed = 0;

    auto* infer = app.add_subcommand("infer", "Marginals or MAP for a model file");
    infer->add_option("model", model_path)->required();
    infer->add_option("--mode", mode, "marg or map");
    infer->add_option("--method", method, "brute, eliminate, jtree, or bp");
    infer->add_flag("--fg", fg_bp, "factor-graph BP (arbitrary arities)");
    infer->add_option("--damping", damping);
    infer->add_option("--tol", tol);
    infer->add_option("--max-iter", max_iter);
    infer->add_option("--schedule", schedule, "synchronous or sequential");
    infer->add_option("--out", out_path);

    auto* learn = app.add_subcommand("learn", "Fit parameters or structure from a dataset");
    learn->add_option("dataset", data_path)->required();
    learn->add_option("--task", task, "bernoulli, cpt, tree, chowliu, expfam, or em")->required();
    learn->add_option("--structure", structure_path);
    learn->add_option("--smoothing", smoothing);
    learn->add_option("--seed", seed);
    learn->add_option("--out", out_path);

    auto* denoise = app.add_subcommand("denoise", "MAP restoration of a +-1 image");
    denoise->add_option("image", image_path)->required();
    denoise->add_option("--a", a, "fidelity weight");
    denoise->add_option("--b", b, "smoothness coupling");
    denoise->add_option("--method", method, "map-exact or map-bp");
    denoise->add_option("--truth", truth_path);
    denoise->add_option("--damping", damping);
    denoise->add_option("--out", out_path);

    auto* crowd = app.add_subcommand("crowdsource", "Aggregate worker answers by EM");
    crowd->add_option("answers", answers_path)->required();
    crowd->add_option("--out", out_path);

    auto* sample = app.add_subcommand("sample", "Draw samples from a model");
    sample->add_option("model", model_path)->required();
    sample->add_option("--n", n);
    sample->add_option("--seed", seed);
    sample->add_option("--out", out_path);

    auto* validate = app.add_subcommand("validate", "Parse a file and report");
    validate->add_option("file", model_path)->required();
    validate->add_option("--kind", kind, "model, dataset, image, or answers");

    CLI11_PARSE(app, argc, argv);

    try {
        if (infer->parsed())
            return cmd_infer(model_path, mode, method, fg_bp, damping, tol, max_iter, schedule,
                             out_path);
        if (learn->parsed()) return cmd_learn(data_path, task, structure_path, smoothing, out_path);
        if (denoise->parsed()) {
            if (method == "brute") method = "map-exact";  // subcommand default
            return cmd_denoise(image_path, a, b, method, truth_path, damping, out_path);
        }
        if (crowd->parsed()) return cmd_crowdsource(answers_path, out_path);
        if (sample->parsed()) return cmd_sample(model_path, n, seed, out_path);
        if (validate->parsed()) return cmd_validate(model_path, kind);
    } catch (const pgm::IntractableError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIntractable;
    } catch (const pgm::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitOk;
}
