#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sonc {
namespace minnorm {

// Minimize the largest pair norm of an antisymmetric field q(i,j) subject to
// the row constraints  sum_j a_j q(i,j) = r_i.  The field is stored as a
// d x P matrix over unordered pairs i < j (q(j,i) = -q(i,j) implied).
//
// Strategy: the Lagrange dual is  max <nu, r> / D(nu)  over row fields nu,
// with D(nu) = sum_{i<j} |a_j nu_i - a_i nu_j| (the dual norm of the max
// pair norm composed with the constraint adjoint). That ratio is
// pseudoconvex in just n*d variables, so a smoothed L-BFGS with epsilon
// continuation crushes it; the smoothed optimality condition hands back a
// near-feasible primal q, which one affine projection makes exactly
// feasible. The returned value is certified: feasible max norm above,
// <nu, r>/D(nu) below. An over-relaxed ADMM polish closes stubborn gaps.

inline std::size_t pair_count(std::size_t n) { return n * (n - 1) / 2; }

inline std::size_t pair_index(std::size_t n, std::size_t i, std::size_t j) {
    // i < j
    return i * n - i * (i + 1) / 2 + (j - i - 1);
}

struct Result {
    double value = 0;              // max pair norm of the returned q
    Eigen::MatrixXd q;             // d x P, row-feasible up to deflation
    double lower_bound = 0;        // certified dual bound on the optimum
    double constraint_residual = 0;  // max_i |sum_j a_j q(i,j) - r_i|
    double deflation = 0;          // size of the consistency correction to r
    int iterations = 0;
    bool converged = false;
};

namespace detail {

// Row sums of the antisymmetric extension: out_i = sum_{j != i} a_j q(i,j).
// Raw loops: this is the hot kernel, up to ~3e5 pairs per call.
inline void row_sums(const Eigen::MatrixXd& q, const std::vector<double>& a,
                     Eigen::MatrixXd& out) {
    const std::size_t n = a.size();
    const int d = static_cast<int>(q.rows());
    out.setZero();
    const double* qp = q.data();
    double* op = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double ai = a[i];
        double* oi = op + i * d;
        for (std::size_t j = i + 1; j < n; ++j, qp += d) {
            const double aj = a[j];
            double* oj = op + j * d;
            for (int k = 0; k < d; ++k) {
                oi[k] += aj * qp[k];
                oj[k] -= ai * qp[k];
            }
        }
    }
}

// Constraint adjoint: e(i,j) = a_j nu_i - a_i nu_j.
inline void adjoint(const Eigen::MatrixXd& nu, const std::vector<double>& a,
                    Eigen::MatrixXd& e) {
    const std::size_t n = a.size();
    const int d = static_cast<int>(nu.rows());
    const double* np = nu.data();
    double* ep = e.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double ai = a[i];
        const double* ni = np + i * d;
        for (std::size_t j = i + 1; j < n; ++j, ep += d) {
            const double aj = a[j];
            const double* nj = np + j * d;
            for (int k = 0; k < d; ++k) ep[k] = aj * ni[k] - ai * nj[k];
        }
    }
}

// D(nu) evaluated exactly.
inline double dual_norm_of_adjoint(const Eigen::MatrixXd& e) {
    const std::size_t P = static_cast<std::size_t>(e.cols());
    const int d = static_cast<int>(e.rows());
    const double* ep = e.data();
    double total = 0;
    for (std::size_t p = 0; p < P; ++p, ep += d) {
        double s = 0;
        for (int k = 0; k < d; ++k) s += ep[k] * ep[k];
        total += std::sqrt(s);
    }
    return total;
}

// Euclidean projection onto {q : row sums = r}; r must satisfy the
// antisymmetry compatibility sum_i a_i r_i = 0.
inline void project_affine(Eigen::MatrixXd& q, const std::vector<double>& a,
                           const Eigen::MatrixXd& r, double a2,
                           Eigen::MatrixXd& scratch) {
    const std::size_t n = a.size();
    const int d = static_cast<int>(q.rows());
    row_sums(q, a, scratch);
    scratch -= r;  // row residuals s_i
    double* qp = q.data();
    const double* sp = scratch.data();
    const double inv = 1.0 / a2;
    for (std::size_t i = 0; i < n; ++i) {
        const double ai = a[i] * inv;
        const double* si = sp + i * d;
        for (std::size_t j = i + 1; j < n; ++j, qp += d) {
            const double aj = a[j] * inv;
            const double* sj = sp + j * d;
            for (int k = 0; k < d; ++k) qp[k] -= aj * si[k] - ai * sj[k];
        }
    }
}

// Projection of the group norms onto the l1 ball of radius `radius`,
// applied back to the pair vectors in place. The threshold theta solves
// sum_p max(norm_p - theta, 0) = radius; Newton from the left converges
// finitely on this piecewise-linear convex equation, and the previous
// theta warm-starts the next call.
inline void project_dual_ball(Eigen::MatrixXd& v, double radius,
                              std::vector<double>& norms, double& theta_warm) {
    const std::size_t P = static_cast<std::size_t>(v.cols());
    const int d = static_cast<int>(v.rows());
    norms.resize(P);
    double* vp = v.data();
    double total = 0;
    for (std::size_t p = 0; p < P; ++p) {
        double s = 0;
        const double* c = vp + p * d;
        for (int k = 0; k < d; ++k) s += c[k] * c[k];
        norms[p] = std::sqrt(s);
        total += norms[p];
    }
    if (total <= radius) {
        theta_warm = 0;
        return;
    }
    double theta = theta_warm;
    double g = 0;
    std::size_t cnt = 0;
    auto eval = [&](double th) {
        g = -radius;
        cnt = 0;
        for (std::size_t p = 0; p < P; ++p) {
            double e = norms[p] - th;
            if (e > 0) {
                g += e;
                ++cnt;
            }
        }
    };
    eval(theta);
    if (g < 0) {
        theta = 0;
        eval(theta);
    }
    for (int it = 0; it < 64 && cnt > 0; ++it) {
        double step = g / static_cast<double>(cnt);
        if (!(step > 1e-15 * (1.0 + theta))) break;
        theta += step;
        eval(theta);
    }
    theta_warm = theta;
    for (std::size_t p = 0; p < P; ++p) {
        double s = norms[p] > theta ? (norms[p] - theta) / norms[p] : 0.0;
        double* c = vp + p * d;
        for (int k = 0; k < d; ++k) c[k] *= s;
    }
}

// Smoothed dual objective phi(nu) = D_eps(nu) / <nu, r> and its gradient,
// with D_eps = sum_p sqrt(|e_p|^2 + eps^2). Returns +inf when the
// denominator is not safely positive. `qdir` receives e_p / h_p (the
// smoothed unit directions, reused for primal recovery).
struct DualEval {
    double phi = 0;
    double d_eps = 0;
    double denom = 0;
};

inline DualEval dual_phi_grad(const Eigen::MatrixXd& nu,
                              const std::vector<double>& a,
                              const Eigen::MatrixXd& r, double eps,
                              Eigen::MatrixXd& e, Eigen::MatrixXd& qdir,
                              Eigen::MatrixXd& grad) {
    const std::size_t n = a.size();
    const int d = static_cast<int>(nu.rows());
    const std::size_t P = static_cast<std::size_t>(e.cols());
    DualEval ev;
    ev.denom = 0;
    for (std::size_t i = 0; i < n; ++i) ev.denom += nu.col(i).dot(r.col(i));
    if (!(ev.denom > 0)) {
        ev.phi = std::numeric_limits<double>::infinity();
        return ev;
    }
    adjoint(nu, a, e);
    const double* ep = e.data();
    double* qp = qdir.data();
    double total = 0;
    const double e2 = eps * eps;
    for (std::size_t p = 0; p < P; ++p, ep += d, qp += d) {
        double s = e2;
        for (int k = 0; k < d; ++k) s += ep[k] * ep[k];
        double h = std::sqrt(s);
        total += h;
        double inv = 1.0 / h;
        for (int k = 0; k < d; ++k) qp[k] = ep[k] * inv;
    }
    ev.d_eps = total;
    ev.phi = total / ev.denom;
    // grad = (L qdir) / denom - (D_eps / denom^2) r
    row_sums(qdir, a, grad);
    grad /= ev.denom;
    grad -= (ev.d_eps / (ev.denom * ev.denom)) * r;
    return ev;
}

// ADMM polish from a warm start; maintains res.value / res.lower_bound.
inline void admm_polish(const std::vector<double>& a,
                        const Eigen::MatrixXd& targets, double a2, double tol,
                        int max_iters, Eigen::MatrixXd& q, Eigen::MatrixXd& y,
                        Result& res) {
    const std::size_t n = a.size();
    const int d = static_cast<int>(targets.rows());
    const std::size_t P = static_cast<std::size_t>(q.cols());
    Eigen::MatrixXd scratch(d, n), nu(d, n);
    Eigen::MatrixXd z = q, zprev(d, P), w(d, P);
    std::vector<double> norms;
    double scale = std::max(res.value, 1e-12);
    double rho = 1.0 / scale;
    y *= 1.0 / rho;  // incoming y is the unscaled multiplier estimate
    double theta = 0;
    const double stagnation = 1e-13 * scale;
    const double sqrtP = std::sqrt(static_cast<double>(P));
    const double alpha = 1.7;  // over-relaxation

    for (int it = 1; it <= max_iters; ++it) {
        q = z - y;
        project_affine(q, a, targets, a2, scratch);

        zprev.swap(z);
        // prox of (1/rho) * max-norm at the relaxed point, via Moreau.
        w = alpha * q + (1.0 - alpha) * zprev + y;
        y = w;  // holds relaxed point + old multiplier
        w *= rho;
        theta *= rho;  // warm threshold lives on the scaled copy
        project_dual_ball(w, 1.0, norms, theta);
        z = y - w * (1.0 / rho);
        theta /= rho;
        y -= z;

        ++res.iterations;
        if (it % 25 == 0 || it == max_iters) {
            double upper = 0;
            for (std::size_t p = 0; p < P; ++p)
                upper = std::max(upper, q.col(p).norm());
            res.value = std::min(res.value, upper);
            w = rho * y;
            row_sums(w, a, nu);
            double num = 0, den = 0;
            for (std::size_t i = 0; i < n; ++i)
                num += nu.col(i).dot(targets.col(i));
            adjoint(nu, a, w);
            den = dual_norm_of_adjoint(w);
            if (den > 0 && num > 0)
                res.lower_bound = std::max(res.lower_bound, num / den);
            if (upper - res.lower_bound <= tol) {
                res.q = q;
                res.converged = true;
                return;
            }
            double pr = (q - z).norm() / sqrtP;
            double du = rho * (z - zprev).norm() / sqrtP;
            if (pr <= stagnation && du <= stagnation) break;  // at the floor
            if (pr > 5 * du) {  // residual balancing, dual rescaled with rho
                rho *= 2;
                y /= 2;
            } else if (du > 5 * pr) {
                rho /= 2;
                y *= 2;
            }
        }
    }
    res.q = q;
}

} // namespace detail

/// `targets` is d x n (column i = r_i). `tol` is the absolute accuracy goal
/// on the optimal value, enforced through the certified primal-dual gap.
inline Result solve(const std::vector<double>& a, Eigen::MatrixXd targets,
                    double tol = 1e-9, int max_iters = 200000) {
    const std::size_t n = a.size();
    const int d = static_cast<int>(targets.rows());
    if (static_cast<std::size_t>(targets.cols()) != n)
        throw std::invalid_argument("minnorm: targets/weights size mismatch");
    if (!(tol > 0)) throw std::invalid_argument("minnorm: tol must be > 0");

    Result res;
    if (n <= 1) {
        res.q.resize(d, 0);
        res.converged = true;
        if (n == 1) res.constraint_residual = targets.col(0).norm();
        return res;
    }

    double a2 = 0;
    for (double w : a) a2 += w * w;

    // Deflate targets onto the compatible subspace sum_i a_i r_i = 0.
    Eigen::VectorXd incompat = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < n; ++i) incompat += a[i] * targets.col(i);
    res.deflation = incompat.norm() / a2;
    for (std::size_t i = 0; i < n; ++i) targets.col(i) -= (a[i] / a2) * incompat;

    const std::size_t P = pair_count(n);
    double rnorm = targets.norm();
    if (rnorm == 0) {  // optimum is exactly 0
        res.q = Eigen::MatrixXd::Zero(d, P);
        res.converged = true;
        res.constraint_residual = res.deflation;
        return res;
    }

    // --- Dual stage: L-BFGS on phi(nu) = D_eps(nu)/<nu,r>, eps shrinking.
    Eigen::MatrixXd nu = targets / rnorm;  // <nu, r> = rnorm > 0
    Eigen::MatrixXd e(d, P), qdir(d, P), grad(d, n), grad_new(d, n);
    Eigen::MatrixXd nu_try(d, n);
    detail::adjoint(nu, a, e);
    double escale = 1e-300;
    for (std::size_t p = 0; p < P; ++p)
        escale = std::max(escale, e.col(p).norm());

    const int mem = 8;
    std::vector<Eigen::VectorXd> sv, yv;
    std::vector<double> rhov;
    auto flat = [](Eigen::MatrixXd& m) {
        return Eigen::Map<Eigen::VectorXd>(m.data(), m.size());
    };

    Eigen::MatrixXd best_q(d, P);
    Eigen::MatrixXd scratch(d, n);
    double best_ub = std::numeric_limits<double>::infinity();
    double best_lb = 0;
    int evals = 0;

    auto harvest = [&](double eps) {
        // Exact lower bound from the current nu.
        detail::adjoint(nu, a, e);
        double dexact = detail::dual_norm_of_adjoint(e);
        double denom = 0;
        for (std::size_t i = 0; i < n; ++i) denom += nu.col(i).dot(targets.col(i));
        if (dexact > 0 && denom > 0)
            best_lb = std::max(best_lb, denom / dexact);
        // Primal recovery: smoothed directions scaled to match row sums,
        // then projected onto the constraint set exactly.
        const double e2 = eps * eps;
        for (std::size_t p = 0; p < P; ++p) {
            double h = std::sqrt(e.col(p).squaredNorm() + e2);
            qdir.col(p) = e.col(p) / h;
        }
        detail::row_sums(qdir, a, scratch);
        double num = 0, den = 0;
        for (std::size_t i = 0; i < n; ++i) {
            num += scratch.col(i).dot(targets.col(i));
            den += scratch.col(i).squaredNorm();
        }
        // Least-squares scale for L(qdir) ~ kappa r, then exact projection.
        double kappa = den > 0 ? num / den : 0;
        if (kappa > 0)
            qdir *= 1.0 / kappa;
        else
            qdir.setZero();
        detail::project_affine(qdir, a, targets, a2, scratch);
        double ub = 0;
        for (std::size_t p = 0; p < P; ++p)
            ub = std::max(ub, qdir.col(p).norm());
        if (ub < best_ub) {
            best_ub = ub;
            best_q = qdir;
        }
    };

    double prev_lb = -1;
    for (double erel = 1e-1; erel >= 0.9e-9; erel *= 1e-2) {
        double eps = erel * escale;
        sv.clear();
        yv.clear();
        rhov.clear();
        auto ev = detail::dual_phi_grad(nu, a, targets, eps, e, qdir, grad);
        ++evals;
        double gscale = flat(grad).norm();
        for (int it = 0; it < 150; ++it) {
            // L-BFGS two-loop recursion for the step direction.
            Eigen::VectorXd dir = -flat(grad);
            std::vector<double> alpha_c(sv.size());
            for (int k = static_cast<int>(sv.size()) - 1; k >= 0; --k) {
                alpha_c[k] = rhov[k] * sv[k].dot(dir);
                dir -= alpha_c[k] * yv[k];
            }
            if (!sv.empty()) {
                const auto& s = sv.back();
                const auto& yy = yv.back();
                dir *= s.dot(yy) / yy.squaredNorm();
            } else {
                dir *= 1.0 / std::max(gscale, 1e-300);
            }
            for (std::size_t k = 0; k < sv.size(); ++k) {
                double beta = rhov[k] * yv[k].dot(dir);
                dir += (alpha_c[k] - beta) * sv[k];
            }
            if (flat(grad).dot(dir) >= 0) dir = -flat(grad);  // safeguard

            // Backtracking Armijo line search.
            double t = 1.0, gd = flat(grad).dot(dir);
            detail::DualEval ev_new;
            bool ok = false;
            for (int ls = 0; ls < 40; ++ls) {
                nu_try = nu + t * Eigen::Map<Eigen::MatrixXd>(dir.data(), d,
                                                              static_cast<int>(n));
                ev_new = detail::dual_phi_grad(nu_try, a, targets, eps, e, qdir,
                                               grad_new);
                ++evals;
                if (ev_new.phi <= ev.phi + 1e-4 * t * gd) {
                    ok = true;
                    break;
                }
                t *= 0.5;
            }
            if (!ok) break;
            Eigen::VectorXd snew = t * dir;
            Eigen::VectorXd ynew = flat(grad_new) - flat(grad);
            double sy = snew.dot(ynew);
            if (sy > 1e-12 * snew.norm() * ynew.norm()) {
                sv.push_back(std::move(snew));
                yv.push_back(std::move(ynew));
                rhov.push_back(1.0 / sy);
                if (sv.size() > static_cast<std::size_t>(mem)) {
                    sv.erase(sv.begin());
                    yv.erase(yv.begin());
                    rhov.erase(rhov.begin());
                }
            }
            double drop = ev.phi - ev_new.phi;
            nu = nu_try;
            grad = grad_new;
            ev = ev_new;
            if (drop <= 1e-13 * std::abs(ev.phi)) break;
        }
        harvest(eps);
        if (best_ub - best_lb <= tol) break;
        // The lower bound usually saturates after a few stages.
        if (prev_lb >= 0 && best_lb - prev_lb <= 0.02 * tol) break;
        prev_lb = best_lb;
    }

    res.iterations = evals;
    res.q = best_q;
    res.value = best_ub;
    res.lower_bound = best_lb;

    if (best_ub - best_lb > tol) {
        // --- Feasibility stage: the dual bound pins the optimum, so seek a
        // feasible q with max norm just above it by alternating projections
        // (affine set / per-pair norm box), raising the target on stall.
        Eigen::MatrixXd q = best_q;
        for (int attempt = 0; attempt < 24 && best_ub - best_lb > tol; ++attempt) {
            double t_target =
                best_lb + 0.49 * tol * static_cast<double>(1 << attempt);
            if (t_target >= best_ub) break;  // nothing left to gain
            double viol = std::numeric_limits<double>::infinity();
            double last_viol = viol;
            for (int it = 0; it < 4000 && res.iterations < max_iters; ++it) {
                double* qp = q.data();
                for (std::size_t p = 0; p < P; ++p, qp += d) {
                    double s = 0;
                    for (int k = 0; k < d; ++k) s += qp[k] * qp[k];
                    if (s > t_target * t_target) {
                        double f = t_target / std::sqrt(s);
                        for (int k = 0; k < d; ++k) qp[k] *= f;
                    }
                }
                detail::project_affine(q, a, targets, a2, scratch);
                ++res.iterations;
                if (it % 10 == 9) {
                    viol = 0;
                    for (std::size_t p = 0; p < P; ++p)
                        viol = std::max(viol, q.col(p).norm());
                    viol -= t_target;
                    if (viol <= 0.5 * tol) break;
                    if (it >= 200 && viol > 0.97 * last_viol) break;  // stalled
                    last_viol = viol;
                }
            }
            double ub = 0;
            for (std::size_t p = 0; p < P; ++p)
                ub = std::max(ub, q.col(p).norm());
            if (ub < best_ub) {
                best_ub = ub;
                best_q = q;
            }
        }
        res.q = best_q;
        res.value = best_ub;
    }

    if (best_ub - best_lb <= tol) {
        res.converged = true;
        res.lower_bound = best_lb;
    } else {
        // --- Polish stage: warm-started ADMM with the certified gap test.
        res.lower_bound = best_lb;
        detail::adjoint(nu, a, e);
        double dex = detail::dual_norm_of_adjoint(e);
        if (dex > 0) e *= 1.0 / dex;  // unscaled multiplier estimate
        detail::admm_polish(a, targets, a2, tol, max_iters - res.iterations,
                            best_q, e, res);
        res.value = 0;
        for (std::size_t p = 0; p < P; ++p)
            res.value = std::max(res.value, res.q.col(p).norm());
    }

    detail::row_sums(res.q, a, scratch);
    res.constraint_residual = res.deflation;
    for (std::size_t i = 0; i < n; ++i)
        res.constraint_residual = std::max(
            res.constraint_residual, (scratch.col(i) - targets.col(i)).norm());
    return res;
}

} // namespace minnorm
} // namespace sonc
