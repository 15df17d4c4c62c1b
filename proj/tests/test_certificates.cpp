#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sonc/analytic.hpp"
#include "sonc/certificates.hpp"
#include "sonc/measure.hpp"

using namespace sonc;

namespace {

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

TEST_CASE("two-point thresholds match the closed form") {
    CounterRng rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        int d = 1 + static_cast<int>(rng.next_u64() % 3);
        Vector x0(d), x1(d);
        for (int k = 0; k < d; ++k) {
            x0[k] = 2.0 * rng.next_double() - 1.0;
            x1[k] = 2.0 * rng.next_double() - 1.0;
        }
        double a0 = 0.2 + rng.next_double(), a1 = 0.2 + rng.next_double();
        DiscreteMeasure m(d, {x0, x1}, {a0, a1});
        double expect = (x1 - x0).norm() / (a0 + a1);
        CHECK(lambda1_two_points(x0, x1, a0, a1) ==
              doctest::Approx(expect).epsilon(1e-12));
        CHECK(lambda1_exact(m, 1e-9) == doctest::Approx(expect).epsilon(1e-6));
        CHECK(lambda1_bisect(m, 1e-7 * expect) ==
              doctest::Approx(expect).epsilon(1e-5));
        auto ls = lambda_star_bisect(m, 1e-7 * expect);
        CHECK_FALSE(ls.unbounded);
        CHECK(ls.value == doctest::Approx(expect).epsilon(1e-5));
    }
}

TEST_CASE("lambda1 bounds bracket the exact threshold") {
    for (std::uint64_t seed : {4u, 5u, 6u}) {
        auto m = random_measure(2, 15, seed);
        auto [lo, hi] = lambda1_bounds(m);
        double l1 = lambda1_exact(m, 1e-8);
        CHECK(lo <= l1 + 1e-6);
        CHECK(l1 <= hi + 1e-6);
        CHECK(lambda1_bisect(m, 1e-5) == doctest::Approx(l1).epsilon(1e-3));
    }
}

TEST_CASE("three collinear unit-weight atoms: lambda1 = lambda* = 1/2") {
    // x = (-1, 0, 1), unit weights; the symmetric minimizer (-t, 0, t) with
    // t = 1 - 2*lambda makes both thresholds equal 1/2.
    Vector a(1), b(1), c(1);
    a << -1.0;
    b << 0.0;
    c << 1.0;
    DiscreteMeasure m(1, {a, b, c}, {1.0, 1.0, 1.0});
    CHECK(lambda1_exact(m, 1e-9) == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(lambda1_bisect(m, 1e-6) == doctest::Approx(0.5).epsilon(1e-4));
    auto ls = lambda_star_bisect(m, 1e-6);
    CHECK_FALSE(ls.unbounded);
    CHECK(ls.value == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("cohesion certificate witnesses the threshold") {
    auto m = random_measure(2, 12, 17);
    CohesionCertificate cert;
    double l1 = lambda1_exact(m, 1e-8, &cert);
    // The certificate carries the unnormalized witness value lambda1 * mass.
    CHECK(cert.value == doctest::Approx(l1 * m.total_mass()).epsilon(1e-6));
    CHECK(cert.constraint_residual <= 1e-6);
}

TEST_CASE("kkt verification accepts converged output and rejects perturbations") {
    CounterRng rng(33);
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
        auto m = random_measure(2, 20, 100 + seed);
        double l1 = lambda1_exact(m, 1e-6);
        double lambda = l1 * (0.2 + 0.6 * rng.next_double());
        auto r = minimize(m, lambda);
        REQUIRE(r.converged);
        auto p = extract_partition(m, r, default_fuse_tol(m));
        auto cert = verify_kkt(m, lambda, r, p);
        CHECK(cert.valid(1e-5));

        auto bad = r;
        for (auto& v : bad.u_values)
            for (int k = 0; k < v.size(); ++k)
                v[k] += 1e-2 * m.diameter() * (2.0 * rng.next_double() - 1.0);
        auto bad_cert = verify_kkt(m, lambda, bad, extract_partition(m, bad, default_fuse_tol(m)));
        CHECK_FALSE(bad_cert.valid(1e-5));
    }
}

TEST_CASE("detection interval of the true partition is nonempty when separated") {
    auto left = sample_ball(2, 30, 1);
    std::vector<Vector> pts;
    std::vector<double> ws;
    std::vector<int> labels;
    Vector shift(2);
    shift << 4.0, 0.0;
    for (std::size_t i = 0; i < left.size(); ++i) {
        pts.push_back(left.point(i) - shift);
        ws.push_back(left.weight(i));
        labels.push_back(0);
    }
    auto right = sample_ball(2, 30, 2);
    for (std::size_t i = 0; i < right.size(); ++i) {
        pts.push_back(right.point(i) + shift);
        ws.push_back(right.weight(i));
        labels.push_back(1);
    }
    DiscreteMeasure m(2, pts, ws);
    Partition p = Partition::from_labels(labels);
    auto di = detection_interval(m, p, 1e-3);
    CHECK(di.nonempty);
    CHECK(di.lower < di.upper);

    // The split characterization agrees at the midpoint.
    double mid = 0.5 * (di.lower + di.upper);
    auto split = check_split_condition(m, p, mid, 1e-3);
    CHECK(split.shattered_ok);
    CHECK(split.cohesive_ok);
    auto part = extract_partition(m, minimize(m, mid), default_fuse_tol(m));
    CHECK(part.num_clusters() == 2);
}

TEST_CASE("trial-field upper bound dominates the exact threshold") {
    auto m = sample_ball(2, 400, 2);
    double alpha = std::pow(2.0, 0.5) / 2.0;
    auto q1 = [&](std::size_t i, std::size_t j) -> Vector {
        double ni = m.point(i).norm(), nj = m.point(j).norm();
        if (ni > nj) return alpha * m.point(i) / ni;
        if (nj > ni) return Vector(-alpha * m.point(j) / nj);
        return Vector::Zero(2);
    };
    double ub = lambda1_upper_from_q1(m, q1);
    double l1 = lambda1_exact(m, 5e-3);
    CHECK(l1 <= ub + 1e-9);
    CHECK(ub <= 1.45 / m.total_mass());
}

TEST_CASE("degenerate inputs") {
    Vector x(2);
    x << 1.0, 2.0;
    DiscreteMeasure single(2, {x}, {1.0});
    CHECK(lambda1_exact(single, 1e-9) == doctest::Approx(0.0));
    auto ls = lambda_star_bisect(single, 1e-9);
    CHECK(ls.unbounded);
    DiscreteMeasure dup(2, {x, x}, {1.0, 1.0});
    CHECK(lambda1_exact(dup, 1e-9) == doctest::Approx(0.0).epsilon(1e-6));
    auto ls2 = lambda_star_bisect(dup, 1e-9);
    CHECK_FALSE(ls2.unbounded);
    CHECK(ls2.value == doctest::Approx(0.0));
}
