#ifndef EXCHNET_DATASET_HPP
#define EXCHNET_DATASET_HPP

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace exchnet {

/// Linear index of directed dyad (i, j), node ids 1-based, row-major by
/// sender with the diagonal skipped: (1,2) -> 0, (1,3) -> 1, ..., (2,1), ...
/// Throws on i == j or out-of-range ids.
int edge_index(int i, int j, int n);

/// Inverse of edge_index.
std::pair<int, int> edge_index_inverse(int idx, int n);

/// Directed count relational data on n nodes, stored dense over all
/// n^2 - n dyads in edge_index order. Immutable after construction.
class RelationalDataset {
public:
    /// counts must be nonnegative integers; offsets (log-exposure) may be
    /// empty meaning all-zero; X has one row per dyad.
    RelationalDataset(int n, Eigen::VectorXd counts, Eigen::VectorXd offsets,
                      Eigen::MatrixXd X, std::vector<std::string> coef_names = {},
                      std::vector<std::string> node_names = {});

    int n_nodes() const { return n_; }
    int n_dyads() const { return static_cast<int>(counts_.size()); }
    int n_covariates() const { return static_cast<int>(X_.cols()); }
    bool has_offsets() const { return has_offsets_; }

    const Eigen::VectorXd& counts() const { return counts_; }
    const Eigen::VectorXd& offsets() const { return offsets_; }
    const Eigen::MatrixXd& design() const { return X_; }
    const std::vector<std::string>& coef_names() const { return coef_names_; }
    const std::vector<std::string>& node_names() const { return node_names_; }

    /// JSON document for experiment archival; round-trips bit-exactly.
    std::string to_json() const;
    static RelationalDataset from_json(const std::string& text);

private:
    int n_;
    Eigen::VectorXd counts_;
    Eigen::VectorXd offsets_;
    Eigen::MatrixXd X_;
    std::vector<std::string> coef_names_;
    std::vector<std::string> node_names_;
    bool has_offsets_;
};

} // namespace exchnet

#endif
