#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "sonc/experiments.hpp"

using namespace sonc;

TEST_CASE("separated group witness finds manufactured lumps") {
    // Three lumps of 10 atoms at 0, 1, 2 on the line, unit total mass.
    std::vector<Vector> pts;
    for (int lump = 0; lump < 3; ++lump)
        for (int i = 0; i < 10; ++i) {
            Vector v(1);
            v << lump + 0.001 * i;
            pts.push_back(v);
        }
    DiscreteMeasure m(1, pts, std::vector<double>(30, 1.0 / 30));
    SolverResult fake;
    fake.u_values.assign(pts.begin(), pts.end());
    auto groups = detail::separated_groups(m, fake, 0.2, 0.5);
    CHECK(groups.size() == 3);
    for (const auto& g : groups) CHECK(g.mass >= 0.2);
    CHECK((groups[0].mean - groups[1].mean).norm() > 0.5);

    // Constant u: no second group can be separated.
    SolverResult flat;
    flat.u_values.assign(pts.size(), Vector::Zero(1));
    auto one = detail::separated_groups(m, flat, 0.2, 0.5);
    CHECK(one.size() == 1);
}

TEST_CASE("separation experiment recovers well-separated balls") {
    auto rep = separation_experiment(2, 2.0, 80, 3.4, {1, 2});
    CHECK(rep.per_seed.size() == 2);
    for (const auto& r : rep.per_seed) {
        CHECK(r.converged);
        CHECK(r.success);
        CHECK(r.num_clusters == 2);
    }
    CHECK(rep.summary["successes"].get<std::size_t>() == 2);
    CHECK(rep.summary["trials"].get<std::size_t>() == 2);
}

TEST_CASE("stochastic ball experiment: both sides of the threshold") {
    auto rep = stochastic_ball_experiment(2, 1.05, 120, {7}, {0.8, 1.2});
    REQUIRE(rep.per_seed.size() == 2);
    for (const auto& r : rep.per_seed) {
        CHECK(r.converged);
        CHECK(r.lambda1_hat > 0);
        if (r.lambda_factor > 1) {
            CHECK(r.num_clusters == 1);
        } else {
            CHECK(r.num_clusters >= 3);
            REQUIRE(r.top_masses.size() >= 3);
            CHECK(r.top_masses[2] >= 0.05);
            CHECK(r.min_rep_separation > 0);
        }
        CHECK(r.success);
    }
}

TEST_CASE("detection experiment endpoints are ordered") {
    auto rep = detection_convergence_experiment(2, 2.0, {60}, {3});
    REQUIRE(rep.per_seed.size() == 1);
    const auto& r = rep.per_seed[0];
    CHECK(r.success);
    CHECK(r.lower_endpoint > 0);
    CHECK(r.lower_endpoint < r.upper_endpoint);
    CHECK(rep.summary["by_N"].contains("60"));
}

TEST_CASE("reports serialize deterministically") {
    auto a = separation_experiment(2, 2.0, 60, 3.4, {5});
    auto b = separation_experiment(2, 2.0, 60, 3.4, {5});
    CHECK(report_to_json(a).dump() == report_to_json(b).dump());
    CHECK(report_to_csv(a) == report_to_csv(b));
}

TEST_CASE("csv report shape") {
    auto rep = separation_experiment(2, 2.0, 60, 3.4, {5, 6});
    std::istringstream in(report_to_csv(rep));
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line.rfind("seed,", 0) == 0);
    std::size_t rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == rep.per_seed.size());
}
