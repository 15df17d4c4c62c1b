#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sonc/measure.hpp"
#include "sonc/solver.hpp"

namespace sonc {

struct UnsupportedShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Coupling between two equal-mass measures. Marginal convention: row sums
/// equal mass * weights of mu, column sums likewise for nu (so the coupling
/// carries total mass squared).
struct TransportPlan {
    std::size_t rows = 0, cols = 0;
    Eigen::MatrixXd coupling;
    double cost = 0;
    bool infinity = false;  // true for the bottleneck (W_inf) plan
};

namespace detail {

inline void check_transport_pre(const DiscreteMeasure& mu,
                                const DiscreteMeasure& nu) {
    if (mu.dim() != nu.dim())
        throw std::invalid_argument("transport: dimension mismatch");
    double ma = mu.total_mass(), mb = nu.total_mass();
    if (std::abs(ma - mb) > 1e-9 * std::max(ma, mb))
        throw std::invalid_argument("transport: total mass mismatch");
}

} // namespace detail

/// Exact W_1: successive shortest augmenting paths with node potentials on
/// the dense bipartite transportation graph.
inline std::pair<double, TransportPlan> w1(const DiscreteMeasure& mu,
                                           const DiscreteMeasure& nu) {
    detail::check_transport_pre(mu, nu);
    const std::size_t m = mu.size(), n = nu.size();
    const double mass = mu.total_mass();

    Eigen::MatrixXd cost(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            cost(i, j) = (mu.point(i) - nu.point(j)).norm();

    std::vector<double> supply(m), demand(n);
    for (std::size_t i = 0; i < m; ++i) supply[i] = mass * mu.weight(i);
    for (std::size_t j = 0; j < n; ++j) demand[j] = mass * nu.weight(j);

    Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(m, n);
    std::vector<double> pot(m + n, 0.0);
    const double inf = std::numeric_limits<double>::infinity();
    const std::size_t V = m + n;
    std::vector<double> dist(V);
    std::vector<int> parent(V);
    std::vector<char> done(V);

    double remaining = 0;
    for (double s : supply) remaining += s;
    const double eps = 1e-12 * std::max(1.0, mass);

    std::size_t guard = m * n + m + n + 16;
    while (remaining > eps && guard-- > 0) {
        // Multi-source Dijkstra over reduced costs.
        std::fill(dist.begin(), dist.end(), inf);
        std::fill(parent.begin(), parent.end(), -1);
        std::fill(done.begin(), done.end(), 0);
        for (std::size_t i = 0; i < m; ++i)
            if (supply[i] > eps) dist[i] = 0;
        for (std::size_t step = 0; step < V; ++step) {
            std::size_t best = V;
            double bd = inf;
            for (std::size_t v = 0; v < V; ++v)
                if (!done[v] && dist[v] < bd) { bd = dist[v]; best = v; }
            if (best == V) break;
            done[best] = 1;
            if (best < m) {
                std::size_t i = best;
                for (std::size_t j = 0; j < n; ++j) {
                    double rc = std::max(0.0, cost(i, j) + pot[i] - pot[m + j]);
                    if (dist[i] + rc < dist[m + j] - 1e-15) {
                        dist[m + j] = dist[i] + rc;
                        parent[m + j] = static_cast<int>(i);
                    }
                }
            } else {
                std::size_t j = best - m;
                for (std::size_t i = 0; i < m; ++i) {
                    if (flow(i, j) <= eps) continue;
                    double rc = std::max(0.0, -cost(i, j) + pot[m + j] - pot[i]);
                    if (dist[m + j] + rc < dist[i] - 1e-15) {
                        dist[i] = dist[m + j] + rc;
                        parent[i] = static_cast<int>(m + j);
                    }
                }
            }
        }

        // Cheapest sink with unmet demand.
        std::size_t tj = n;
        double bd = inf;
        for (std::size_t j = 0; j < n; ++j)
            if (demand[j] > eps && dist[m + j] < bd) { bd = dist[m + j]; tj = j; }
        if (tj == n)
            throw std::runtime_error("w1: no augmenting path (unbalanced?)");

        // Bottleneck along the path.
        double push = demand[tj];
        for (int v = static_cast<int>(m + tj); parent[v] >= 0; v = parent[v]) {
            int u = parent[v];
            if (v >= static_cast<int>(m)) {
                // u -> sink edge, unbounded capacity
            } else {
                push = std::min(push, flow(v, u - static_cast<int>(m)));
            }
            if (parent[u] < 0) push = std::min(push, supply[u]);
        }
        for (int v = static_cast<int>(m + tj); parent[v] >= 0; v = parent[v]) {
            int u = parent[v];
            if (v >= static_cast<int>(m))
                flow(u, v - static_cast<int>(m)) += push;
            else
                flow(v, u - static_cast<int>(m)) -= push;
            if (parent[u] < 0) supply[u] -= push;
        }
        demand[tj] -= push;
        remaining -= push;

        double dt = dist[m + tj];
        for (std::size_t v = 0; v < V; ++v)
            if (dist[v] < inf) pot[v] += std::min(dist[v], dt);
    }
    if (remaining > eps)
        throw std::runtime_error("w1: augmentation did not terminate");

    TransportPlan plan;
    plan.rows = m;
    plan.cols = n;
    plan.coupling = flow;
    plan.cost = (flow.array() * cost.array()).sum();
    double value = plan.cost;
    return {value, std::move(plan)};
}

namespace detail {

// Kuhn's augmenting-path matching on edges with dist <= threshold.
inline bool perfect_matching_below(const Eigen::MatrixXd& cost, double thr,
                                   std::vector<int>& match_right) {
    const std::size_t n = static_cast<std::size_t>(cost.rows());
    match_right.assign(n, -1);
    std::vector<char> used;
    std::function<bool(std::size_t)> try_match = [&](std::size_t i) -> bool {
        for (std::size_t j = 0; j < n; ++j) {
            if (used[j] || cost(i, j) > thr) continue;
            used[j] = 1;
            if (match_right[j] < 0 ||
                try_match(static_cast<std::size_t>(match_right[j]))) {
                match_right[j] = static_cast<int>(i);
                return true;
            }
        }
        return false;
    };
    for (std::size_t i = 0; i < n; ++i) {
        used.assign(n, 0);
        if (!try_match(i)) return false;
    }
    return true;
}

} // namespace detail

/// Exact W_inf for equal-size, equal-weight supports: binary search over
/// candidate bottleneck values with a perfect-matching feasibility test.
inline std::pair<double, TransportPlan> w_infty(const DiscreteMeasure& mu,
                                                const DiscreteMeasure& nu) {
    detail::check_transport_pre(mu, nu);
    const std::size_t n = mu.size();
    if (nu.size() != n)
        throw UnsupportedShapeError("w_infty: supports of unequal size");
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(mu.weight(i) - mu.weight(0)) > 1e-12 * mu.weight(0) ||
            std::abs(nu.weight(i) - mu.weight(0)) > 1e-12 * mu.weight(0))
            throw UnsupportedShapeError("w_infty: weights must be equal");

    Eigen::MatrixXd cost(n, n);
    std::vector<double> candidates;
    candidates.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            cost(i, j) = (mu.point(i) - nu.point(j)).norm();
            candidates.push_back(cost(i, j));
        }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()),
                     candidates.end());

    std::vector<int> match;
    std::size_t lo = 0, hi = candidates.size() - 1;
    while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (detail::perfect_matching_below(cost, candidates[mid], match))
            hi = mid;
        else
            lo = mid + 1;
    }
    double value = candidates[lo];
    detail::perfect_matching_below(cost, value, match);

    const double mass = mu.total_mass();
    TransportPlan plan;
    plan.rows = plan.cols = n;
    plan.infinity = true;
    plan.coupling = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t j = 0; j < n; ++j)
        plan.coupling(static_cast<std::size_t>(match[j]), j) =
            mass * mass / static_cast<double>(n);
    plan.cost = value;
    return {value, std::move(plan)};
}

struct StabilityReport {
    double lhs = 0;
    double rhs = 0;
    bool holds = false;
    double w1_distance = 0;
};

namespace detail {

inline void check_stability_pre(const DiscreteMeasure& mu,
                                const DiscreteMeasure& nu, double big_m) {
    if (std::abs(mu.total_mass() - 1.0) > 1e-9 ||
        std::abs(nu.total_mass() - 1.0) > 1e-9)
        throw std::invalid_argument("stability check: measures must be probabilities");
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (mu.point(i).norm() > big_m + 1e-12)
            throw std::invalid_argument("stability check: support not in B_M(0)");
    for (std::size_t i = 0; i < nu.size(); ++i)
        if (nu.point(i).norm() > big_m + 1e-12)
            throw std::invalid_argument("stability check: support not in B_M(0)");
}

} // namespace detail

/// |inf J_mu - inf J_nu| <= 4 M W1(mu, nu).
inline StabilityReport check_value_stability(const DiscreteMeasure& mu,
                                             const DiscreteMeasure& nu,
                                             double lambda, double big_m,
                                             const SolverOptions& opts = {},
                                             double tol = 1e-7) {
    detail::check_stability_pre(mu, nu, big_m);
    StabilityReport rep;
    rep.w1_distance = w1(mu, nu).first;
    double ja = minimize(mu, lambda, opts).objective;
    double jb = minimize(nu, lambda, opts).objective;
    rep.lhs = std::abs(ja - jb);
    rep.rhs = 4.0 * big_m * rep.w1_distance;
    rep.holds = rep.lhs <= rep.rhs + tol;
    return rep;
}

/// Coupled minimizer distance: int |u_mu(x) - u_nu(x~)|^2 dpi <= 16 M W1.
inline StabilityReport check_minimizer_stability(const DiscreteMeasure& mu,
                                                 const DiscreteMeasure& nu,
                                                 double lambda, double big_m,
                                                 const SolverOptions& opts = {},
                                                 double tol = 1e-7) {
    detail::check_stability_pre(mu, nu, big_m);
    if (mu.size() != nu.size())
        throw UnsupportedShapeError("check_minimizer_stability: unequal sizes");
    auto [dist, plan] = w1(mu, nu);
    auto ra = minimize(mu, lambda, opts);
    auto rb = minimize(nu, lambda, opts);
    StabilityReport rep;
    rep.w1_distance = dist;
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = 0; j < nu.size(); ++j)
            if (plan.coupling(i, j) > 0)
                rep.lhs += plan.coupling(i, j) *
                           (ra.u_values[i] - rb.u_values[j]).squaredNorm();
    rep.rhs = 16.0 * big_m * dist;
    rep.holds = rep.lhs <= rep.rhs + tol;
    return rep;
}

struct ShatteringStabilityReport {
    double w1_distance = 0;
    double delta1 = 0;  // min pairwise separation of u_mu values
    double delta2 = 0;  // min atom mass of nu
    double threshold = 0;  // delta1^2 delta2 / (32 M)
    bool hypothesis_met = false;
    bool nu_shattered = false;
    bool holds = false;  // vacuously true when the hypothesis fails
};

/// If W1(mu, nu) < delta1^2 delta2 / (32 M) and mu is lambda-shattered,
/// then nu must be lambda-shattered too.
inline ShatteringStabilityReport check_shattering_stability(
    const DiscreteMeasure& mu, const DiscreteMeasure& nu, double lambda,
    double big_m, const SolverOptions& opts = {}, double fuse_tol = -1.0) {
    detail::check_stability_pre(mu, nu, big_m);
    if (fuse_tol <= 0) fuse_tol = default_fuse_tol(mu);

    auto ra = minimize(mu, lambda, opts);
    ShatteringStabilityReport rep;
    rep.delta1 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = i + 1; j < mu.size(); ++j)
            rep.delta1 =
                std::min(rep.delta1, (ra.u_values[i] - ra.u_values[j]).norm());
    if (mu.size() > 1 && rep.delta1 <= fuse_tol)
        throw std::invalid_argument(
            "check_shattering_stability: mu is not lambda-shattered");
    if (mu.size() == 1) rep.delta1 = 0;

    rep.delta2 = std::numeric_limits<double>::infinity();
    for (double a : nu.weights()) rep.delta2 = std::min(rep.delta2, a);
    rep.w1_distance = w1(mu, nu).first;
    rep.threshold = rep.delta1 * rep.delta1 * rep.delta2 / (32.0 * big_m);
    rep.hypothesis_met = rep.w1_distance < rep.threshold;
    if (rep.hypothesis_met) {
        auto rb = minimize(nu, lambda, opts);
        rep.nu_shattered = true;
        double nu_fuse = default_fuse_tol(nu);
        for (std::size_t i = 0; i < nu.size(); ++i)
            for (std::size_t j = i + 1; j < nu.size(); ++j)
                if ((rb.u_values[i] - rb.u_values[j]).norm() <= nu_fuse)
                    rep.nu_shattered = false;
        rep.holds = rep.nu_shattered;
    } else {
        rep.holds = true;  // no claim
    }
    return rep;
}

} // namespace sonc
