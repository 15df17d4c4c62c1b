#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sonc/measure.hpp"
#include "sonc/partition.hpp"

namespace sonc {

struct SolverOptions {
    int max_iters = 50000;
    double primal_tol = 1e-8;
    double dual_tol = 1e-8;
    double penalty = 1.0;          // ADMM penalty, rescaled internally
    double over_relaxation = 1.7;  // in [1, 2)
};

struct SolverResult {
    std::vector<Vector> u_values;
    double lambda = 0;
    double objective = 0;
    int iterations = 0;
    double primal_residual = 0;
    double dual_residual = 0;
    bool converged = false;
};

/// J_{mu,lambda}(u): fidelity plus the fusion term over ordered pairs
/// (so each unordered pair counts twice).
inline double objective(const DiscreteMeasure& m, double lambda,
                        const std::vector<Vector>& u) {
    if (u.size() != m.size())
        throw std::invalid_argument("objective: u/measure size mismatch");
    double fid = 0;
    for (std::size_t i = 0; i < m.size(); ++i)
        fid += m.weight(i) * (u[i] - m.point(i)).squaredNorm();
    double fuse = 0;
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = i + 1; j < m.size(); ++j)
            fuse += 2.0 * m.weight(i) * m.weight(j) * (u[i] - u[j]).norm();
    return fid + lambda * fuse;
}

namespace detail {

inline Vector block_soft_threshold(const Vector& v, double tau) {
    double n = v.norm();
    if (n <= tau) return Vector::Zero(v.size());
    return (1.0 - tau / n) * v;
}

} // namespace detail

/// Minimize J_{mu,lambda} by ADMM on the pairwise differences
/// z_{kn} = u_k - u_n over unordered pairs, fusion weight 2*lambda*a_k*a_n.
/// The u-update is a rank-one-corrected diagonal solve; the z-update is the
/// block soft threshold. Warm start via `init`.
inline SolverResult minimize(const DiscreteMeasure& m, double lambda,
                             const SolverOptions& opts = {},
                             const std::vector<Vector>* init = nullptr) {
    if (lambda < 0) throw std::invalid_argument("minimize: lambda < 0");
    const std::size_t n = m.size();
    SolverResult res;
    res.lambda = lambda;

    if (lambda == 0.0 || n == 1) {
        res.u_values = m.points();
        res.objective = objective(m, lambda, res.u_values);
        res.converged = true;
        return res;
    }

    // Work with probability weights w_i = a_i / mass and lam = lambda * mass:
    // the minimizer is unchanged and the scales are N-independent.
    const double mass = m.total_mass();
    const double lam = lambda * mass;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = m.weight(i) / mass;

    const std::size_t P = n * (n - 1) / 2;
    double rho = opts.penalty * 2.0 / static_cast<double>(n * n);
    const double rho_min = rho * 1e-8, rho_max = rho * 1e8;
    const double alpha = opts.over_relaxation;
    const int d = m.dim();

    // Contiguous storage: points/iterates as d x n, pair variables as d x P.
    Eigen::MatrixXd X(d, n), U(d, n);
    for (std::size_t i = 0; i < n; ++i) X.col(i) = m.point(i);
    if (init && init->size() == n) {
        for (std::size_t i = 0; i < n; ++i) U.col(i) = (*init)[i];
    } else {
        U = X;
    }

    Eigen::MatrixXd Z(d, P), Y = Eigen::MatrixXd::Zero(d, P);
    {
        std::size_t p = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j, ++p)
                Z.col(p) = U.col(i) - U.col(j);
    }

    // Diagonal of the u-update system and its Sherman-Morrison scalars,
    // refreshed whenever the penalty changes.
    std::vector<double> diag(n);
    double sm_denom = 0;
    auto refresh_diag = [&] {
        double q_sum = 0;
        for (std::size_t i = 0; i < n; ++i) {
            diag[i] = 2.0 * w[i] + rho * static_cast<double>(n);
            q_sum += 1.0 / diag[i];
        }
        sm_denom = 1.0 - rho * q_sum;
    };
    refresh_diag();

    const double sqrtP = std::sqrt(static_cast<double>(P));
    Eigen::MatrixXd G(d, n);
    Vector tmp(d);

    for (int it = 1; it <= opts.max_iters; ++it) {
        // u-update: (2 diag(w) + rho L) U = 2 diag(w) X + rho G with
        // L = n I - 1 1^T; solved per coordinate via Sherman-Morrison.
        G.setZero();
        {
            const double* zp = Z.data();
            const double* yp = Y.data();
            double* gp = G.data();
            for (std::size_t i = 0; i < n; ++i) {
                double* gi = gp + i * d;
                for (std::size_t j = i + 1; j < n; ++j, zp += d, yp += d) {
                    double* gj = gp + j * d;
                    for (int k = 0; k < d; ++k) {
                        double v = zp[k] - yp[k];
                        gi[k] += v;
                        gj[k] -= v;
                    }
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            G.col(i) = (2.0 * w[i] * X.col(i) + rho * G.col(i)) / diag[i];
        tmp = G.rowwise().sum() / sm_denom;
        for (std::size_t i = 0; i < n; ++i)
            U.col(i) = G.col(i) + (rho / diag[i]) * tmp;

        // z-update with over-relaxation, then dual ascent.
        double pr2 = 0, du2 = 0;
        {
            const double* up = U.data();
            double* zp = Z.data();
            double* yp = Y.data();
            double* t = tmp.data();
            const double lam2 = 2.0 * lam / rho;
            for (std::size_t i = 0; i < n; ++i) {
                const double* ui = up + i * d;
                const double wi = w[i];
                for (std::size_t j = i + 1; j < n; ++j, zp += d, yp += d) {
                    const double* uj = up + j * d;
                    double nrm2 = 0;
                    for (int k = 0; k < d; ++k) {
                        double diff = ui[k] - uj[k];
                        double e = diff - zp[k];
                        pr2 += e * e;
                        double zr = alpha * diff + (1.0 - alpha) * zp[k] + yp[k];
                        t[k] = zr;
                        nrm2 += zr * zr;
                    }
                    double tau = lam2 * wi * w[j];
                    double nrm = std::sqrt(nrm2);
                    double sfac = nrm <= tau ? 0.0 : 1.0 - tau / nrm;
                    for (int k = 0; k < d; ++k) {
                        double zn = sfac * t[k];
                        double e = zn - zp[k];
                        du2 += e * e;
                        yp[k] = t[k] - zn;
                        zp[k] = zn;
                    }
                }
            }
        }
        res.iterations = it;
        res.primal_residual = std::sqrt(pr2) / sqrtP;
        res.dual_residual = rho * std::sqrt(du2) / sqrtP;
        if (!std::isfinite(pr2) || !std::isfinite(du2))
            throw std::runtime_error("minimize: non-finite iterate");
        if (res.primal_residual <= opts.primal_tol &&
            res.dual_residual <= opts.dual_tol) {
            res.converged = true;
            break;
        }
        // Residual balancing: keep the two residuals within an order of
        // magnitude of each other. Y holds the scaled dual, so a penalty
        // change rescales it to preserve the unscaled multiplier.
        if (it % 50 == 0) {
            if (res.primal_residual > 10.0 * res.dual_residual &&
                rho < rho_max) {
                rho *= 2.0;
                Y *= 0.5;
                refresh_diag();
            } else if (res.dual_residual > 10.0 * res.primal_residual &&
                       rho > rho_min) {
                rho *= 0.5;
                Y *= 2.0;
                refresh_diag();
            }
        }
    }

    res.u_values.resize(n);
    for (std::size_t i = 0; i < n; ++i) res.u_values[i] = U.col(i);
    res.objective = objective(m, lambda, res.u_values);
    if (!std::isfinite(res.objective))
        throw std::runtime_error("minimize: non-finite objective");
    return res;
}

/// Default fusion tolerance: 1e-6 times the diameter of the support.
inline double default_fuse_tol(const DiscreteMeasure& m) {
    double diam = m.diameter();
    return diam > 0 ? 1e-6 * diam : 1e-12;
}

/// Clusters are connected components of the graph with edges
/// |u_i - u_j| <= fuse_tol (transitive closure, not pairwise-only).
inline Partition extract_partition(const DiscreteMeasure& m,
                                   const SolverResult& r, double fuse_tol) {
    if (r.u_values.size() != m.size())
        throw std::invalid_argument("extract_partition: size mismatch");
    if (!(fuse_tol > 0))
        throw std::invalid_argument("extract_partition: fuse_tol must be > 0");
    const std::size_t n = m.size();

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if ((r.u_values[i] - r.u_values[j]).norm() <= fuse_tol) {
                std::size_t a = find(i), b = find(j);
                if (a != b) parent[std::max(a, b)] = std::min(a, b);
            }

    std::vector<int> raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = static_cast<int>(find(i));
    Partition p = Partition::from_labels(raw);

    std::size_t k = 0;
    for (int l : p.labels) k = std::max<std::size_t>(k, l + 1);
    p.cluster_masses.assign(k, 0.0);
    p.cluster_centroids.assign(k, Vector::Zero(m.dim()));
    p.representatives.assign(k, Vector::Zero(m.dim()));
    for (std::size_t i = 0; i < n; ++i) {
        int l = p.labels[i];
        p.cluster_masses[l] += m.weight(i);
        p.cluster_centroids[l] += m.weight(i) * m.point(i);
        p.representatives[l] += m.weight(i) * r.u_values[i];
    }
    for (std::size_t c = 0; c < k; ++c) {
        p.cluster_centroids[c] /= p.cluster_masses[c];
        p.representatives[c] /= p.cluster_masses[c];
    }
    return p;
}

struct ClusterPath {
    std::vector<double> lambdas;
    std::vector<SolverResult> results;
    std::vector<Partition> partitions;
};

/// Per-lambda solve over a strictly increasing grid, warm-started from the
/// previous entry.
inline ClusterPath cluster_path(const DiscreteMeasure& m,
                                const std::vector<double>& lambdas,
                                const SolverOptions& opts = {},
                                double fuse_tol = -1.0) {
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (lambdas[i] < 0)
            throw std::invalid_argument("cluster_path: lambda < 0");
        if (i > 0 && !(lambdas[i] > lambdas[i - 1]))
            throw std::invalid_argument("cluster_path: grid not strictly increasing");
    }
    if (fuse_tol <= 0) fuse_tol = default_fuse_tol(m);
    ClusterPath path;
    path.lambdas = lambdas;
    const std::vector<Vector>* warm = nullptr;
    for (double lam : lambdas) {
        SolverResult r = minimize(m, lam, opts, warm);
        path.partitions.push_back(extract_partition(m, r, fuse_tol));
        path.results.push_back(std::move(r));
        warm = &path.results.back().u_values;
    }
    return path;
}

struct AgglomerationReport {
    bool nested = true;
    std::optional<std::pair<double, double>> first_violation;
};

/// Nested iff every cluster at lambda_i is contained in one cluster at
/// lambda_{i+1}, for all consecutive grid points.
inline AgglomerationReport check_agglomeration(const ClusterPath& path) {
    AgglomerationReport rep;
    for (std::size_t t = 0; t + 1 < path.partitions.size(); ++t) {
        const auto& a = path.partitions[t].labels;
        const auto& b = path.partitions[t + 1].labels;
        std::size_t ka = path.partitions[t].num_clusters();
        std::vector<int> image(ka, -1);
        for (std::size_t i = 0; i < a.size(); ++i) {
            int& im = image[a[i]];
            if (im < 0) {
                im = b[i];
            } else if (im != b[i]) {
                rep.nested = false;
                rep.first_violation = {path.lambdas[t], path.lambdas[t + 1]};
                return rep;
            }
        }
    }
    return rep;
}

} // namespace sonc
