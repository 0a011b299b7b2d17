#include "exchnet/dataset.hpp"

#include <cmath>
#include <json.hpp>

#include "exchnet/error.hpp"

namespace exchnet {

int edge_index(int i, int j, int n) {
    if (i < 1 || i > n || j < 1 || j > n)
        throw data_error("invalid dyad: node id out of range [1," + std::to_string(n) + "]");
    if (i == j) throw data_error("invalid dyad: self-loop (" + std::to_string(i) + "," + std::to_string(j) + ")");
    return (i - 1) * (n - 1) + (j - 1) - (j > i ? 1 : 0);
}

std::pair<int, int> edge_index_inverse(int idx, int n) {
    if (idx < 0 || idx >= n * n - n) throw data_error("edge index out of range");
    int i = idx / (n - 1) + 1;
    int r = idx % (n - 1) + 1;
    int j = (r >= i) ? r + 1 : r;
    return {i, j};
}

RelationalDataset::RelationalDataset(int n, Eigen::VectorXd counts, Eigen::VectorXd offsets,
                                     Eigen::MatrixXd X, std::vector<std::string> coef_names,
                                     std::vector<std::string> node_names)
    : n_(n),
      counts_(std::move(counts)),
      offsets_(std::move(offsets)),
      X_(std::move(X)),
      coef_names_(std::move(coef_names)),
      node_names_(std::move(node_names)) {
    if (n_ < 3) throw data_error("dataset requires at least 3 nodes, got " + std::to_string(n_));
    const int N = n_ * n_ - n_;
    if (counts_.size() != N)
        throw data_error("expected " + std::to_string(N) + " dyads, got " + std::to_string(counts_.size()));
    has_offsets_ = offsets_.size() > 0;
    if (!has_offsets_) offsets_ = Eigen::VectorXd::Zero(N);
    if (offsets_.size() != N) throw data_error("offset vector has wrong length");
    if (X_.rows() != N) throw data_error("design matrix has wrong number of rows");
    for (int a = 0; a < N; ++a) {
        double y = counts_[a];
        if (!(y >= 0.0) || y != std::floor(y))
            throw data_error("count at dyad index " + std::to_string(a) + " is not a nonnegative integer");
        if (!std::isfinite(offsets_[a])) throw data_error("non-finite offset at dyad index " + std::to_string(a));
    }
    if (!X_.allFinite()) throw data_error("non-finite covariate in design matrix");
    if (!coef_names_.empty() && static_cast<int>(coef_names_.size()) != X_.cols())
        throw data_error("coefficient name list does not match design width");
    if (!node_names_.empty() && static_cast<int>(node_names_.size()) != n_)
        throw data_error("node name list does not match node count");
}

std::string RelationalDataset::to_json() const {
    nlohmann::json j;
    j["n"] = n_;
    j["counts"] = std::vector<double>(counts_.data(), counts_.data() + counts_.size());
    if (has_offsets_)
        j["offsets"] = std::vector<double>(offsets_.data(), offsets_.data() + offsets_.size());
    std::vector<std::vector<double>> rows(X_.rows());
    for (int a = 0; a < X_.rows(); ++a)
        rows[a].assign(X_.row(a).begin(), X_.row(a).end());
    j["design"] = rows;
    if (!coef_names_.empty()) j["coef_names"] = coef_names_;
    if (!node_names_.empty()) j["node_names"] = node_names_;
    return j.dump(2);
}

RelationalDataset RelationalDataset::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("dataset JSON parse error: ") + e.what());
    }
    try {
        int n = j.at("n").get<int>();
        auto cv = j.at("counts").get<std::vector<double>>();
        Eigen::VectorXd counts = Eigen::Map<Eigen::VectorXd>(cv.data(), cv.size());
        Eigen::VectorXd offsets;
        if (j.contains("offsets")) {
            auto ov = j.at("offsets").get<std::vector<double>>();
            offsets = Eigen::Map<Eigen::VectorXd>(ov.data(), ov.size());
        }
        auto rows = j.at("design").get<std::vector<std::vector<double>>>();
        int p = rows.empty() ? 0 : static_cast<int>(rows.front().size());
        Eigen::MatrixXd X(rows.size(), p);
        for (size_t a = 0; a < rows.size(); ++a) {
            if (static_cast<int>(rows[a].size()) != p) throw data_error("ragged design rows in dataset JSON");
            for (int c = 0; c < p; ++c) X(a, c) = rows[a][c];
        }
        std::vector<std::string> coef_names, node_names;
        if (j.contains("coef_names")) coef_names = j.at("coef_names").get<std::vector<std::string>>();
        if (j.contains("node_names")) node_names = j.at("node_names").get<std::vector<std::string>>();
        return RelationalDataset(n, std::move(counts), std::move(offsets), std::move(X),
                                 std::move(coef_names), std::move(node_names));
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("dataset JSON missing field: ") + e.what());
    }
}

} // namespace exchnet
