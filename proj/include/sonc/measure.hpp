#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sonc/partition.hpp"
#include "sonc/rng.hpp"

namespace sonc {

using Vector = Eigen::VectorXd;

/// Sorted set of atom indices; finite stand-in for a Borel subset.
struct IndexSubset {
    std::vector<std::size_t> indices;

    static IndexSubset all(std::size_t n) {
        IndexSubset s;
        s.indices.resize(n);
        for (std::size_t i = 0; i < n; ++i) s.indices[i] = i;
        return s;
    }
};

/// Weighted point set in R^d. Weights are arbitrary positive reals, not
/// forced to 1/N, so non-probability measures (unit-weight atoms, the
/// mass-2d cross-polytope) are representable.
class DiscreteMeasure {
public:
    DiscreteMeasure(int dim, std::vector<Vector> points,
                    std::vector<double> weights)
        : dim_(dim), points_(std::move(points)), weights_(std::move(weights)) {
        validate();
    }

    int dim() const { return dim_; }
    std::size_t size() const { return points_.size(); }
    const std::vector<Vector>& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }
    const Vector& point(std::size_t i) const { return points_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }

    double total_mass() const {
        double m = 0;
        for (double w : weights_) m += w;
        return m;
    }

    double diameter() const {
        double d2 = 0;
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = i + 1; j < size(); ++j)
                d2 = std::max(d2, (points_[i] - points_[j]).squaredNorm());
        return std::sqrt(d2);
    }

    /// Sub-measure carrying the selected atoms (order preserved).
    DiscreteMeasure restrict(const IndexSubset& s) const {
        if (s.indices.empty())
            throw std::invalid_argument("restrict: empty subset");
        std::vector<Vector> pts;
        std::vector<double> ws;
        pts.reserve(s.indices.size());
        ws.reserve(s.indices.size());
        for (std::size_t i : s.indices) {
            pts.push_back(points_.at(i));
            ws.push_back(weights_.at(i));
        }
        return DiscreteMeasure(dim_, std::move(pts), std::move(ws));
    }

private:
    void validate() const {
        if (dim_ < 1) throw std::invalid_argument("measure: dim must be >= 1");
        if (points_.empty())
            throw std::invalid_argument("measure: needs at least one atom");
        if (points_.size() != weights_.size())
            throw std::invalid_argument("measure: point/weight length mismatch");
        for (const auto& p : points_) {
            if (p.size() != dim_)
                throw std::invalid_argument("measure: point dimension mismatch");
            if (!p.allFinite())
                throw std::invalid_argument("measure: non-finite coordinate");
        }
        for (double w : weights_)
            if (!(w > 0) || !std::isfinite(w))
                throw std::invalid_argument("measure: weights must be positive and finite");
    }

    int dim_;
    std::vector<Vector> points_;
    std::vector<double> weights_;
};

/// Mass-weighted centroid of the atoms in s.
inline Vector centroid(const DiscreteMeasure& m, const IndexSubset& s) {
    if (s.indices.empty())
        throw std::domain_error("centroid: empty subset");
    Vector c = Vector::Zero(m.dim());
    double mass = 0;
    for (std::size_t i : s.indices) {
        c += m.weight(i) * m.point(i);
        mass += m.weight(i);
    }
    return c / mass;
}

inline Vector centroid(const DiscreteMeasure& m) {
    return centroid(m, IndexSubset::all(m.size()));
}

/// R(mu): largest distance from an atom to the global centroid.
inline double radius(const DiscreteMeasure& m) {
    Vector c = centroid(m);
    double r = 0;
    for (std::size_t i = 0; i < m.size(); ++i)
        r = std::max(r, (m.point(i) - c).norm());
    return r;
}

/// M_u(mu): one atom per cluster at the cluster centroid, carrying the
/// cluster mass. Atom order follows ascending cluster label.
inline DiscreteMeasure consolidate(const DiscreteMeasure& m, const Partition& p) {
    if (p.labels.size() != m.size())
        throw std::invalid_argument("consolidate: partition/measure size mismatch");
    int k = 0;
    for (int l : p.labels) k = std::max(k, l + 1);
    std::vector<Vector> cents(k, Vector::Zero(m.dim()));
    std::vector<double> masses(k, 0.0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        int l = p.labels[i];
        if (l < 0) throw std::invalid_argument("consolidate: negative label");
        cents[l] += m.weight(i) * m.point(i);
        masses[l] += m.weight(i);
    }
    for (int c = 0; c < k; ++c) {
        if (masses[c] <= 0)
            throw std::invalid_argument("consolidate: labels not surjective");
        cents[c] /= masses[c];
    }
    return DiscreteMeasure(m.dim(), std::move(cents), std::move(masses));
}

namespace detail {

inline Vector gaussian_vector(CounterRng& rng, int d) {
    Vector g(d);
    for (int k = 0; k < d; ++k) g[k] = rng.next_gaussian();
    return g;
}

inline Vector uniform_direction(CounterRng& rng, int d) {
    for (;;) {
        Vector g = gaussian_vector(rng, d);
        double n = g.norm();
        if (n > 1e-12) return g / n;
    }
}

// Uniform in the unit ball by the polar method: uniform direction times
// U^{1/d} radius. No rejection, so the draw count per point is fixed.
inline Vector uniform_in_ball(CounterRng& rng, int d) {
    Vector dir = uniform_direction(rng, d);
    double r = std::pow(rng.next_double_open0(), 1.0 / d);
    return r * dir;
}

} // namespace detail

/// N i.i.d. points, weight 1/N each, uniform on B_1(-r e1) u B_1(r e1).
/// The ball is chosen by one Bernoulli(1/2) draw per point.
inline DiscreteMeasure sample_two_balls(int d, double r, std::size_t n,
                                        std::uint64_t seed) {
    if (d < 1 || n < 1 || r < 0)
        throw std::invalid_argument("sample_two_balls: bad parameters");
    CounterRng rng(seed);
    std::vector<Vector> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sign = rng.next_bool() ? 1.0 : -1.0;
        Vector x = detail::uniform_in_ball(rng, d);
        x[0] += sign * r;
        pts.push_back(std::move(x));
    }
    return DiscreteMeasure(d, std::move(pts),
                           std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

/// N i.i.d. points uniform in the unit ball, weight 1/N each.
inline DiscreteMeasure sample_ball(int d, std::size_t n, std::uint64_t seed) {
    if (d < 1 || n < 1) throw std::invalid_argument("sample_ball: bad parameters");
    CounterRng rng(seed);
    std::vector<Vector> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        pts.push_back(detail::uniform_in_ball(rng, d));
    return DiscreteMeasure(d, std::move(pts),
                           std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

/// N i.i.d. points uniform on the unit sphere S^{d-1}, weight 1/N each.
inline DiscreteMeasure sample_sphere(int d, std::size_t n, std::uint64_t seed) {
    if (d < 2 || n < 1)
        throw std::invalid_argument("sample_sphere: needs d >= 2, n >= 1");
    CounterRng rng(seed);
    std::vector<Vector> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        pts.push_back(detail::uniform_direction(rng, d));
    return DiscreteMeasure(d, std::move(pts),
                           std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

/// Density proportional to |x|^{-(d-1)} on B_R(0): radius uniform on (0, R],
/// direction uniform on the sphere. Weight 1/N per point.
inline DiscreteMeasure sample_power_law_ball(int d, double big_r, std::size_t n,
                                             std::uint64_t seed) {
    if (d < 1 || n < 1 || !(big_r > 0))
        throw std::invalid_argument("sample_power_law_ball: bad parameters");
    CounterRng rng(seed);
    std::vector<Vector> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vector dir = detail::uniform_direction(rng, d);
        pts.push_back(big_r * rng.next_double_open0() * dir);
    }
    return DiscreteMeasure(d, std::move(pts),
                           std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

/// 2d unit-weight atoms at +-e_i (total mass 2d).
inline DiscreteMeasure cross_polytope_measure(int d) {
    if (d < 1) throw std::invalid_argument("cross_polytope_measure: d >= 1");
    std::vector<Vector> pts;
    pts.reserve(2 * static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        Vector e = Vector::Zero(d);
        e[i] = 1.0;
        pts.push_back(e);
        pts.push_back(-e);
    }
    return DiscreteMeasure(d, std::move(pts),
                           std::vector<double>(2 * static_cast<std::size_t>(d), 1.0));
}

} // namespace sonc
