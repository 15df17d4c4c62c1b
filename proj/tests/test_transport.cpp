#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "sonc/measure.hpp"
#include "sonc/transport.hpp"

using namespace sonc;

namespace {

DiscreteMeasure unit_cloud(int d, std::size_t n, std::uint64_t seed,
                           double scale = 1.0) {
    CounterRng rng(seed);
    std::vector<Vector> pts;
    for (std::size_t i = 0; i < n; ++i) {
        Vector v(d);
        for (int k = 0; k < d; ++k) v[k] = scale * (2.0 * rng.next_double() - 1.0);
        pts.push_back(v);
    }
    return DiscreteMeasure(d, pts, std::vector<double>(n, 1.0 / n));
}

// Brute-force transport between equal-size unit-weight clouds: minimize over
// all matchings, averaging (p = 1) or taking the max (p = inf).
std::pair<double, double> brute_force(const DiscreteMeasure& a,
                                      const DiscreteMeasure& b) {
    std::vector<std::size_t> perm(a.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best1 = std::numeric_limits<double>::infinity();
    double bestinf = std::numeric_limits<double>::infinity();
    do {
        double sum = 0, mx = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            double d = (a.point(i) - b.point(perm[i])).norm();
            sum += d;
            mx = std::max(mx, d);
        }
        best1 = std::min(best1, sum / static_cast<double>(a.size()));
        bestinf = std::min(bestinf, mx);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return {best1, bestinf};
}

} // namespace

TEST_CASE("delta measures at distance 3") {
    Vector x(2), y(2);
    x << 0.0, 0.0;
    y << 3.0, 0.0;
    DiscreteMeasure a(2, {x}, {1.0}), b(2, {y}, {1.0});
    CHECK(w1(a, b).first == doctest::Approx(3.0));
    CHECK(w_infty(a, b).first == doctest::Approx(3.0));
    CHECK(w1(a, a).first == doctest::Approx(0.0));
}

TEST_CASE("exact match with brute-force permutation oracles") {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        std::size_t n = 2 + seed % 5;  // up to 6 atoms
        auto a = unit_cloud(2, n, seed);
        auto b = unit_cloud(2, n, 1000 + seed);
        auto [o1, oinf] = brute_force(a, b);
        CHECK(w1(a, b).first == doctest::Approx(o1).epsilon(1e-9));
        CHECK(w_infty(a, b).first == doctest::Approx(oinf).epsilon(1e-9));
    }
}

TEST_CASE("w1 handles unequal sizes and non-uniform weights") {
    // Split one atom of a into two half-weight copies in b: distance 0.
    Vector x(1), y(1), z(1);
    x << 0.0;
    y << 1.0;
    z << 1.0;
    DiscreteMeasure a(1, {x, y}, {0.5, 0.5});
    DiscreteMeasure b(1, {x, y, z}, {0.5, 0.25, 0.25});
    CHECK(w1(a, b).first == doctest::Approx(0.0).epsilon(1e-12));

    // Moving mass 1/2 by distance 2: W1 = 1.
    Vector w(1);
    w << 3.0;
    DiscreteMeasure c(1, {x, w}, {0.5, 0.5});
    DiscreteMeasure d(1, {x, y}, {0.5, 0.5});
    CHECK(w1(c, d).first == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(w_infty(a, b), UnsupportedShapeError);
}

TEST_CASE("plan marginals match the mass convention") {
    auto a = unit_cloud(2, 5, 3);
    auto b = unit_cloud(2, 7, 4);
    auto [dist, plan] = w1(a, b);
    CHECK(dist >= 0);
    double mass = a.total_mass();
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(plan.coupling.row(i).sum() ==
              doctest::Approx(mass * a.weight(i)).epsilon(1e-9));
    for (std::size_t j = 0; j < b.size(); ++j)
        CHECK(plan.coupling.col(j).sum() ==
              doctest::Approx(mass * b.weight(j)).epsilon(1e-9));
}

TEST_CASE("w1 triangle inequality and symmetry") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        auto a = unit_cloud(2, 5, seed);
        auto b = unit_cloud(2, 6, 50 + seed);
        auto c = unit_cloud(2, 4, 90 + seed);
        double ab = w1(a, b).first, ba = w1(b, a).first;
        double bc = w1(b, c).first, ac = w1(a, c).first;
        CHECK(ab == doctest::Approx(ba).epsilon(1e-9));
        CHECK(ac <= ab + bc + 1e-9);
    }
}

TEST_CASE("mass and dimension mismatches are rejected") {
    auto a = unit_cloud(2, 4, 1);
    auto b = unit_cloud(3, 4, 1);
    CHECK_THROWS_AS(w1(a, b), std::invalid_argument);
    DiscreteMeasure heavy(2, {Vector::Zero(2)}, {2.0});
    DiscreteMeasure light(2, {Vector::Zero(2)}, {1.0});
    CHECK_THROWS_AS(w1(heavy, light), std::invalid_argument);
}

TEST_CASE("value and minimizer stability inequalities hold under jitter") {
    double big_m = 2.0, lambda = 0.4;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        auto a = unit_cloud(2, 12, seed);
        CounterRng rng(777 + seed);
        std::vector<Vector> pts;
        for (std::size_t i = 0; i < a.size(); ++i) {
            Vector v = a.point(i);
            for (int k = 0; k < 2; ++k)
                v[k] += 0.05 * (2.0 * rng.next_double() - 1.0);
            pts.push_back(v);
        }
        DiscreteMeasure b(2, pts, a.weights());
        auto val = check_value_stability(a, b, lambda, big_m);
        CHECK(val.holds);
        auto mini = check_minimizer_stability(a, b, lambda, big_m);
        CHECK(mini.holds);
        CHECK(val.w1_distance == doctest::Approx(mini.w1_distance));
    }
}

TEST_CASE("stability preconditions are enforced") {
    DiscreteMeasure far(2, {Vector::Constant(2, 10.0)}, {1.0});
    DiscreteMeasure ok(2, {Vector::Zero(2)}, {1.0});
    CHECK_THROWS_AS(check_value_stability(far, ok, 0.1, 1.0),
                    std::invalid_argument);
    DiscreteMeasure heavy(2, {Vector::Zero(2)}, {2.0});
    CHECK_THROWS_AS(check_value_stability(heavy, heavy, 0.1, 1.0),
                    std::invalid_argument);
}

TEST_CASE("shattering transfers to close measures") {
    // Tiny lambda keeps mu shattered; a perturbation below the report
    // threshold must leave nu shattered as well.
    auto a = unit_cloud(2, 6, 5);
    double lambda = 1e-3;
    auto probe = check_shattering_stability(a, a, lambda, 2.0);
    REQUIRE(probe.delta1 > 0);
    double eps = 0.1 * probe.threshold;
    CounterRng rng(31);
    std::vector<Vector> pts;
    for (std::size_t i = 0; i < a.size(); ++i) {
        Vector v = a.point(i);
        v[0] += eps * (2.0 * rng.next_double() - 1.0);
        pts.push_back(v);
    }
    DiscreteMeasure b(2, pts, a.weights());
    auto rep = check_shattering_stability(a, b, lambda, 2.0);
    CHECK(rep.hypothesis_met);
    CHECK(rep.nu_shattered);
    CHECK(rep.holds);
}
