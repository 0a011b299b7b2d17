#ifndef EXCHNET_INGEST_HPP
#define EXCHNET_INGEST_HPP

#include <Eigen/Dense>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "exchnet/dataset.hpp"
#include "exchnet/link.hpp"

namespace exchnet {

/// Edge list read from CSV with header "sender,receiver,count[,offset]".
/// Node order (ids 1..n) is first appearance as a sender or receiver.
struct EdgeList {
    std::vector<std::string> node_ids;
    Eigen::VectorXd counts;   // edge_index order
    Eigen::VectorXd offsets;  // size 0 when the column is absent
};

/// Dense ingestion: every ordered dyad must appear exactly once unless
/// zero_fill, in which case absent dyads get count 0, offset 0. Duplicate
/// dyads, self-loops, negative or non-integral counts are data errors.
EdgeList load_edgelist(std::istream& in, bool zero_fill = false);

/// Per-node covariates: CSV header "node,<var1>,<var2>,...". Row order
/// defines nothing; nodes are matched to the edge list by id.
struct NodeTable {
    std::vector<std::string> vars;
    std::map<std::string, Eigen::VectorXd> rows;  // node id -> values

    const Eigen::VectorXd& row(const std::string& node_id) const;
    int var_index(const std::string& var) const;  // -1 when absent
};

NodeTable load_node_table(std::istream& in);

/// Per-dyad covariates: CSV header "sender,receiver,<var1>,...".
struct EdgeTable {
    std::vector<std::string> vars;
    std::map<std::pair<std::string, std::string>, Eigen::VectorXd> rows;

    const Eigen::VectorXd& row(const std::string& s, const std::string& r) const;
    int var_index(const std::string& var) const;
};

EdgeTable load_edge_table(std::istream& in);

enum class TermKind {
    Intercept,
    Sender,    // node var of the sender
    Receiver,  // node var of the receiver
    Product,   // x_ki * x_kj
    AbsDiff,   // |x_ki - x_kj|
    Edge,      // dyadic var
    LogEdge    // log of a positive dyadic var
};

struct CovariateTerm {
    TermKind kind = TermKind::Intercept;
    std::string var;  // empty for Intercept

    std::string name() const;  // e.g. "x2.product", "(intercept)"
};

/// Ordered terms; order defines coefficient order.
struct DyadicCovariateSpec {
    std::vector<CovariateTerm> terms;
};

/// Model specification document: link, terms, optional offset column of the
/// edge table.
struct ModelSpec {
    LinkKind link = LinkKind::Exponential;
    DyadicCovariateSpec covariates;
    std::string offset_var;  // empty = no offset from the edge table
};

ModelSpec model_spec_from_json(const std::string& text);

/// One design row per dyad in edge_index order; node_order gives ids 1..n.
/// Missing variables are schema errors; non-finite values are data errors.
Eigen::MatrixXd build_design(const std::vector<std::string>& node_order, const NodeTable& nodes,
                             const EdgeTable& edges, const DyadicCovariateSpec& spec);

/// Full assembly for the CLI: edge list + tables + model spec -> dataset.
/// Offsets come from the edge list column, or from spec.offset_var applied
/// as log(exposure); both at once is an error.
RelationalDataset assemble_dataset(const EdgeList& edges, const NodeTable& nodes,
                                   const EdgeTable& edge_covs, const ModelSpec& spec);

} // namespace exchnet

#endif
