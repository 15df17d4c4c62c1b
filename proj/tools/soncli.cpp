// Command-line frontend for the SON clustering library.
//
// Exit codes: 0 success, 1 usage error, 2 numeric/convergence failure,
// 3 I/O error. Machine-readable payloads go to stdout, messages to stderr.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sonc/analytic.hpp"
#include "sonc/certificates.hpp"
#include "sonc/experiments.hpp"
#include "sonc/io.hpp"
#include "sonc/measure.hpp"
#include "sonc/solver.hpp"
#include "sonc/transport.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kNumeric = 2;
constexpr int kIo = 3;

struct NumericFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void emit(const nlohmann::json& payload, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << payload.dump(2) << "\n";
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw sonc::IoError("cannot open output file: " + out_path);
    out << payload.dump(2) << "\n";
}

void emit_text(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw sonc::IoError("cannot open output file: " + out_path);
    out << text;
}

nlohmann::json partition_to_json(const sonc::Partition& p) {
    nlohmann::json reps = nlohmann::json::array();
    for (const auto& r : p.representatives)
        reps.push_back(std::vector<double>(r.data(), r.data() + r.size()));
    return {{"labels", p.labels},
            {"num_clusters", p.num_clusters()},
            {"cluster_masses", p.cluster_masses},
            {"representatives", reps}};
}

int run(int argc, char** argv) {
    CLI::App app{"Sum-of-norms clustering toolkit"};
    app.require_subcommand(1);

    std::string measure_path, partition_path, solution_path, out_path;
    std::string method = "exact", format = "json", p_flag = "1";
    double lambda = 0, tol = 1e-6, fuse_tol = -1, r_param = 1.05;
    double m_report = 0.05, eta_report = 0.01, big_r = 1.0;
    std::vector<double> lambdas, factors{0.85, 1.15};
    std::size_t n_atoms = 300, d_sample = 2;
    int d_const = 2;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<std::size_t> n_list{100, 200, 400};
    bool dump_plan = false;

    auto* solve = app.add_subcommand("solve", "Minimize at a fixed lambda");
    solve->add_option("measure", measure_path)->required();
    solve->add_option("--lambda", lambda)->required();
    solve->add_option("--fuse-tol", fuse_tol);
    solve->add_option("--out", out_path);

    auto* path_cmd = app.add_subcommand("path", "Cluster path over a lambda grid");
    path_cmd->add_option("measure", measure_path)->required();
    path_cmd->add_option("--lambdas", lambdas)->required()->delimiter(',');
    path_cmd->add_option("--fuse-tol", fuse_tol);
    path_cmd->add_option("--out", out_path);

    auto* l1 = app.add_subcommand("lambda1", "Cohesion threshold");
    l1->add_option("measure", measure_path)->required();
    l1->add_option("--method", method)
        ->check(CLI::IsMember({"exact", "bisect", "bounds"}));
    l1->add_option("--tol", tol);
    l1->add_option("--out", out_path);

    auto* lstar = app.add_subcommand("lambda-star", "Shattering threshold");
    lstar->add_option("measure", measure_path)->required();
    lstar->add_option("--tol", tol);
    lstar->add_option("--out", out_path);

    auto* detect = app.add_subcommand("detect", "Detection interval of a partition");
    detect->add_option("measure", measure_path)->required();
    detect->add_option("--partition", partition_path)->required();
    detect->add_option("--tol", tol);
    detect->add_option("--out", out_path);

    auto* verify = app.add_subcommand("verify", "KKT check of a provided solution");
    verify->add_option("measure", measure_path)->required();
    verify->add_option("--solution", solution_path)->required();
    verify->add_option("--tol", tol);
    verify->add_option("--fuse-tol", fuse_tol);
    verify->add_option("--out", out_path);

    auto* consts = app.add_subcommand("constants", "Closed-form constants table");
    consts->add_option("--d", d_const)->required();
    consts->add_option("--format", format)->check(CLI::IsMember({"json", "text"}));
    consts->add_option("--out", out_path);

    auto* wass = app.add_subcommand("wasserstein", "Transport distance between two measures");
    wass->add_option("a", measure_path)->required();
    wass->add_option("b", partition_path)->required();
    wass->add_option("--p", p_flag)->check(CLI::IsMember({"1", "inf"}));
    wass->add_flag("--plan", dump_plan);
    wass->add_option("--out", out_path);

    auto* exp = app.add_subcommand("experiment", "Seeded experiment harness");
    exp->require_subcommand(1);
    auto add_common = [&](CLI::App* e) {
        e->add_option("--seeds", seeds)->required()->delimiter(',');
        e->add_option("--d", d_sample);
        e->add_option("--r", r_param);
        e->add_option("--format", format)->check(CLI::IsMember({"json", "csv"}));
        e->add_option("--out", out_path);
    };
    auto* stoch = exp->add_subcommand("stoch-ball", "Two-ball threshold experiment");
    add_common(stoch);
    stoch->add_option("--n", n_atoms);
    stoch->add_option("--factors", factors)->delimiter(',');
    stoch->add_option("--m-report", m_report);
    stoch->add_option("--eta-report", eta_report);
    auto* sep = exp->add_subcommand("separation", "Well-separated recovery experiment");
    add_common(sep);
    sep->add_option("--n", n_atoms);
    sep->add_option("--lambda", lambda)->required();
    auto* detc = exp->add_subcommand("detection", "Detection-interval convergence");
    add_common(detc);
    detc->add_option("--n-list", n_list)->delimiter(',');

    auto* sample = app.add_subcommand("sample", "Draw a seeded sample measure");
    sample->require_subcommand(1);
    auto* two = sample->add_subcommand("two-balls");
    two->add_option("--r", r_param);
    auto* ball = sample->add_subcommand("ball");
    auto* sphere = sample->add_subcommand("sphere");
    auto* power = sample->add_subcommand("power-law");
    power->add_option("--R", big_r);
    auto* cross = sample->add_subcommand("cross-polytope");
    for (CLI::App* s : {two, ball, sphere, power}) {
        s->add_option("--seed", seed)->required();
        s->add_option("--n", n_atoms)->required();
    }
    for (CLI::App* s : {two, ball, sphere, power, cross}) {
        s->add_option("--d", d_sample)->required();
        s->add_option("--out", out_path);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    sonc::SolverOptions opts;

    if (solve->parsed()) {
        auto mu = sonc::read_measure_file(measure_path);
        auto res = sonc::minimize(mu, lambda, opts);
        if (!res.converged) throw NumericFailure("solver did not converge");
        auto part = sonc::extract_partition(
            mu, res, fuse_tol > 0 ? fuse_tol : sonc::default_fuse_tol(mu));
        emit({{"result", sonc::solver_result_to_json(res)},
              {"partition", partition_to_json(part)}},
             out_path);
    } else if (path_cmd->parsed()) {
        auto mu = sonc::read_measure_file(measure_path);
        auto path = sonc::cluster_path(mu, lambdas, opts, fuse_tol);
        auto agg = sonc::check_agglomeration(path);
        nlohmann::json steps = nlohmann::json::array();
        for (std::size_t t = 0; t < path.lambdas.size(); ++t) {
            if (!path.results[t].converged)
                throw NumericFailure("solver did not converge on the grid");
            steps.push_back({{"lambda", path.lambdas[t]},
                             {"partition", partition_to_json(path.partitions[t])},
                             {"objective", path.results[t].objective}});
        }
        emit({{"steps", steps}, {"nested", agg.nested}}, out_path);
    } else if (l1->parsed()) {
        auto mu = sonc::read_measure_file(measure_path);
        if (method == "bounds") {
            auto [lo, hi] = sonc::lambda1_bounds(mu);
            emit({{"lower", lo}, {"upper", hi}}, out_path);
        } else {
            double v = method == "exact" ? sonc::lambda1_exact(mu, tol)
                                         : sonc::lambda1_bisect(mu, tol, opts);
            std::ostringstream s;
            s << std::setprecision(17) << v << "\n";
            emit_text(s.str(), out_path);
        }
    } else if (lstar->parsed()) {
        auto mu = sonc::read_measure_file(measure_path);
        emit(sonc::lambda_star_to_json(sonc::lambda_star_bisect(mu, tol, opts)),
             out_path);
    } else if (detect->parsed()) {
        auto mu = sonc::read_measure_file(measure_path);
        std::ifstream pin(partition_path);
        if (!pin) throw sonc::IoError("cannot open partition file: " + partition_path);
        auto part = sonc::read_partition_csv(pin);
        emit(sonc::detection_interval_to_json(
                 sonc::detection_interval(mu, part, tol, opts)),
             out_path);
    } else if (verify->parsed()) {
        auto mu = sonc::read_measure_file(measure_path);
        std::ifstream sin(solution_path);
        if (!sin) throw sonc::IoError("cannot open solution file: " + solution_path);
        nlohmann::json sj = nlohmann::json::parse(sin);
        auto res = sonc::solver_result_from_json(sj);
        auto part = sonc::extract_partition(
            mu, res, fuse_tol > 0 ? fuse_tol : sonc::default_fuse_tol(mu));
        auto cert = sonc::verify_kkt(mu, res.lambda, res, part);
        nlohmann::json payload = sonc::kkt_certificate_to_json(cert);
        payload["valid"] = cert.valid(tol);
        emit(payload, out_path);
    } else if (consts->parsed()) {
        auto t = sonc::constants_table(d_const);
        if (format == "text") {
            std::ostringstream s;
            s << std::setprecision(15);
            s << "d                        " << t.d << "\n"
              << "gamma_d                  " << t.gamma_d << "\n"
              << "beta_d                   " << t.beta_d << "\n"
              << "ball_upper               " << t.ball_upper << "\n"
              << "sphere_lambda1_mass      " << t.sphere_lambda1_mass << "\n"
              << "crosspolytope_lambda1_mass " << t.crosspolytope_lambda1_mass
              << "\n"
              << "alpha_dminus1            " << t.alpha_dminus1 << "\n";
            emit_text(s.str(), out_path);
        } else {
            emit({{"d", t.d},
                  {"gamma_d", t.gamma_d},
                  {"beta_d", t.beta_d},
                  {"ball_upper", t.ball_upper},
                  {"sphere_lambda1_mass", t.sphere_lambda1_mass},
                  {"crosspolytope_lambda1_mass", t.crosspolytope_lambda1_mass},
                  {"alpha_dminus1", t.alpha_dminus1}},
                 out_path);
        }
    } else if (wass->parsed()) {
        auto a = sonc::read_measure_file(measure_path);
        auto b = sonc::read_measure_file(partition_path);
        auto [dist, plan] =
            p_flag == "inf" ? sonc::w_infty(a, b) : sonc::w1(a, b);
        nlohmann::json payload = {{"p", p_flag}, {"distance", dist}};
        if (dump_plan) {
            nlohmann::json pairs = nlohmann::json::array();
            for (std::size_t i = 0; i < plan.rows; ++i)
                for (std::size_t j = 0; j < plan.cols; ++j)
                    if (plan.coupling(i, j) > 0)
                        pairs.push_back({{"row", i},
                                         {"col", j},
                                         {"mass", plan.coupling(i, j)}});
            payload["plan"] = pairs;
        }
        emit(payload, out_path);
    } else if (exp->parsed()) {
        sonc::ExperimentReport rep;
        if (stoch->parsed())
            rep = sonc::stochastic_ball_experiment(d_sample, r_param, n_atoms,
                                                   seeds, factors, opts,
                                                   m_report, eta_report);
        else if (sep->parsed())
            rep = sonc::separation_experiment(d_sample, r_param, n_atoms, lambda,
                                              seeds, opts);
        else
            rep = sonc::detection_convergence_experiment(d_sample, r_param,
                                                         n_list, seeds, opts);
        if (format == "csv")
            emit_text(sonc::report_to_csv(rep), out_path);
        else
            emit(sonc::report_to_json(rep), out_path);
    } else if (sample->parsed()) {
        sonc::DiscreteMeasure mu(1, {sonc::Vector::Zero(1)}, {1.0});
        int d = static_cast<int>(d_sample);
        if (two->parsed()) mu = sonc::sample_two_balls(d, r_param, n_atoms, seed);
        else if (ball->parsed()) mu = sonc::sample_ball(d, n_atoms, seed);
        else if (sphere->parsed()) mu = sonc::sample_sphere(d, n_atoms, seed);
        else if (power->parsed())
            mu = sonc::sample_power_law_ball(d, big_r, n_atoms, seed);
        else mu = sonc::cross_polytope_measure(d);
        std::ostringstream s;
        sonc::write_measure_csv(s, mu);
        emit_text(s.str(), out_path);
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const sonc::IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const NumericFailure& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kNumeric;
    }
}
