#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sonc/measure.hpp"
#include "sonc/solver.hpp"

using namespace sonc;

namespace {

DiscreteMeasure line_measure(std::initializer_list<double> xs,
                             std::initializer_list<double> ws) {
    std::vector<Vector> pts;
    for (double x : xs) {
        Vector v(1);
        v << x;
        pts.push_back(v);
    }
    return DiscreteMeasure(1, pts, std::vector<double>(ws));
}

DiscreteMeasure random_measure(int d, std::size_t n, std::uint64_t seed) {
    CounterRng rng(seed);
    std::vector<Vector> pts;
    std::vector<double> ws;
    for (std::size_t i = 0; i < n; ++i) {
        Vector v(d);
        for (int k = 0; k < d; ++k) v[k] = 2.0 * rng.next_double() - 1.0;
        pts.push_back(v);
        ws.push_back(0.5 + rng.next_double());
    }
    return DiscreteMeasure(d, pts, ws);
}

} // namespace

TEST_CASE("lambda = 0 returns the input points") {
    auto m = random_measure(3, 20, 1);
    auto r = minimize(m, 0.0);
    CHECK(r.converged);
    for (std::size_t i = 0; i < m.size(); ++i)
        CHECK((r.u_values[i] - m.point(i)).norm() < 1e-10);
    auto p = extract_partition(m, r, default_fuse_tol(m));
    CHECK(p.num_clusters() == m.size());
}

TEST_CASE("two-point closed form") {
    // x = (0, 1), weights (1/2, 1/2): the minimizer is u = (lambda/2,
    // 1 - lambda/2) for lambda <= 1, with objective lambda/2 - lambda^2/4,
    // equal to 3/16 at lambda = 1/2.
    auto m = line_measure({0.0, 1.0}, {0.5, 0.5});
    auto r = minimize(m, 0.5);
    REQUIRE(r.converged);
    CHECK(r.u_values[0][0] == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(r.u_values[1][0] == doctest::Approx(0.75).epsilon(1e-6));
    CHECK(r.objective == doctest::Approx(0.1875).epsilon(1e-8));
    CHECK(objective(m, 0.5, r.u_values) == doctest::Approx(r.objective));

    // Above the merge threshold |x1 - x0| / (a0 + a1) = 1 the atoms fuse at
    // the centroid; below it they stay apart.
    auto hi = extract_partition(m, minimize(m, 1.1), default_fuse_tol(m));
    CHECK(hi.num_clusters() == 1);
    CHECK((hi.representatives[0] - centroid(m)).norm() < 1e-6);
    auto lo = extract_partition(m, minimize(m, 0.9), default_fuse_tol(m));
    CHECK(lo.num_clusters() == 2);
}

TEST_CASE("objective decreases against perturbed candidates") {
    auto m = random_measure(2, 15, 2);
    double lambda = 0.3;
    auto r = minimize(m, lambda);
    REQUIRE(r.converged);
    double best = objective(m, lambda, r.u_values);
    CounterRng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        auto u = r.u_values;
        for (auto& v : u)
            for (int k = 0; k < v.size(); ++k)
                v[k] += 1e-3 * (2.0 * rng.next_double() - 1.0);
        CHECK(objective(m, lambda, u) >= best - 1e-10);
    }
}

TEST_CASE("translation, rotation, and scaling equivariance") {
    auto m = random_measure(2, 12, 3);
    double lambda = 0.2;
    auto base = minimize(m, lambda);

    Vector shift(2);
    shift << 3.0, -1.0;
    std::vector<Vector> pts;
    for (std::size_t i = 0; i < m.size(); ++i) pts.push_back(m.point(i) + shift);
    DiscreteMeasure shifted(2, pts, m.weights());
    auto rs = minimize(shifted, lambda);
    for (std::size_t i = 0; i < m.size(); ++i)
        CHECK((rs.u_values[i] - base.u_values[i] - shift).norm() < 1e-6);

    double theta = 0.7;
    Eigen::Matrix2d rot;
    rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    pts.clear();
    for (std::size_t i = 0; i < m.size(); ++i) pts.push_back(rot * m.point(i));
    DiscreteMeasure rotated(2, pts, m.weights());
    auto rr = minimize(rotated, lambda);
    for (std::size_t i = 0; i < m.size(); ++i)
        CHECK((rr.u_values[i] - rot * base.u_values[i]).norm() < 1e-6);

    double alpha = 2.5;
    pts.clear();
    for (std::size_t i = 0; i < m.size(); ++i) pts.push_back(alpha * m.point(i));
    DiscreteMeasure scaled(2, pts, m.weights());
    auto rc = minimize(scaled, alpha * lambda);
    for (std::size_t i = 0; i < m.size(); ++i)
        CHECK((rc.u_values[i] - alpha * base.u_values[i]).norm() < 1e-5);

    // Rescaling all weights by c and lambda by 1/c leaves u unchanged.
    std::vector<double> ws;
    for (std::size_t i = 0; i < m.size(); ++i) ws.push_back(4.0 * m.weight(i));
    DiscreteMeasure reweighted(2,
                               std::vector<Vector>(m.points().begin(),
                                                   m.points().end()),
                               ws);
    auto rw = minimize(reweighted, lambda / 4.0);
    for (std::size_t i = 0; i < m.size(); ++i)
        CHECK((rw.u_values[i] - base.u_values[i]).norm() < 1e-6);
}

TEST_CASE("cluster path is warm-started and nested") {
    auto m = random_measure(2, 25, 7);
    std::vector<double> grid;
    for (int t = 0; t < 20; ++t) grid.push_back(0.01 + 0.04 * t);
    auto path = cluster_path(m, grid);
    auto rep = check_agglomeration(path);
    CHECK(rep.nested);
    // Cluster counts never increase along the grid when nested.
    for (std::size_t t = 0; t + 1 < path.partitions.size(); ++t)
        CHECK(path.partitions[t + 1].num_clusters() <=
              path.partitions[t].num_clusters());
    CHECK(path.partitions.back().num_clusters() == 1);
    CHECK_THROWS_AS(cluster_path(m, {0.2, 0.1}), std::invalid_argument);
}

TEST_CASE("partition bookkeeping is consistent") {
    auto m = random_measure(2, 30, 8);
    auto r = minimize(m, 0.15);
    auto p = extract_partition(m, r, default_fuse_tol(m));
    REQUIRE(p.num_clusters() >= 1);
    double mass = 0;
    for (double c : p.cluster_masses) mass += c;
    CHECK(mass == doctest::Approx(m.total_mass()));
    for (std::size_t i = 0; i < m.size(); ++i) {
        int l = p.labels[i];
        REQUIRE(l >= 0);
        REQUIRE(static_cast<std::size_t>(l) < p.num_clusters());
        CHECK((r.u_values[i] - p.representatives[l]).norm() <=
              2.0 * m.size() * default_fuse_tol(m));
    }
}

TEST_CASE("three collinear unit-weight atoms merge at lambda = 1/2") {
    // x = (-1, 0, 1), unit weights: by symmetry u = (-t, 0, t) and the
    // stationarity condition gives t = 1 - 2*lambda, zero at lambda = 1/2.
    auto m = line_measure({-1.0, 0.0, 1.0}, {1.0, 1.0, 1.0});
    auto below = extract_partition(m, minimize(m, 0.45), default_fuse_tol(m));
    CHECK(below.num_clusters() == 3);
    auto above = extract_partition(m, minimize(m, 0.55), default_fuse_tol(m));
    CHECK(above.num_clusters() == 1);
    auto r = minimize(m, 0.25);
    CHECK(r.u_values[2][0] == doctest::Approx(0.5).epsilon(1e-6));
}
