#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace sonc {

/// Level-set decomposition of a map on atoms. Labels are dense in [0, K);
/// cluster k carries its total mass, the centroid of its original atoms,
/// and the common u-value (representative) of the cluster.
struct Partition {
    std::vector<int> labels;
    std::vector<double> cluster_masses;
    std::vector<Eigen::VectorXd> cluster_centroids;
    std::vector<Eigen::VectorXd> representatives;

    std::size_t num_clusters() const { return cluster_masses.size(); }
    std::size_t num_atoms() const { return labels.size(); }

    static Partition singletons(std::size_t n) {
        Partition p;
        p.labels.resize(n);
        for (std::size_t i = 0; i < n; ++i) p.labels[i] = static_cast<int>(i);
        return p;
    }

    static Partition trivial(std::size_t n) {
        Partition p;
        p.labels.assign(n, 0);
        return p;
    }

    /// Renumber arbitrary labels to 0..K-1 in order of first occurrence.
    static Partition from_labels(const std::vector<int>& raw) {
        Partition p;
        p.labels.resize(raw.size());
        std::vector<int> seen;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            int k = -1;
            for (std::size_t s = 0; s < seen.size(); ++s)
                if (seen[s] == raw[i]) { k = static_cast<int>(s); break; }
            if (k < 0) {
                k = static_cast<int>(seen.size());
                seen.push_back(raw[i]);
            }
            p.labels[i] = k;
        }
        return p;
    }
};

} // namespace sonc
