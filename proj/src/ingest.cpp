#include "exchnet/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "exchnet/error.hpp"

namespace exchnet {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, const std::string& what, int line_no) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw data_error("line " + std::to_string(line_no) + ": cannot parse " + what + " '" + s + "'");
    }
}

/// Reads header + rows, trimming whitespace; skips blank lines.
std::vector<std::vector<std::string>> read_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        for (auto& f : fields) f = trim(f);
        rows.push_back(std::move(fields));
    }
    if (rows.empty()) throw data_error("empty CSV input");
    return rows;
}

} // namespace

EdgeList load_edgelist(std::istream& in, bool zero_fill) {
    auto rows = read_csv(in);
    const auto& header = rows[0];
    if (header.size() < 3 || header[0] != "sender" || header[1] != "receiver" ||
        header[2] != "count")
        throw data_error("edge list header must be sender,receiver,count[,offset]");
    bool has_offset = header.size() >= 4 && header[3] == "offset";
    if (header.size() > (has_offset ? 4u : 3u))
        throw data_error("unexpected extra columns in edge list header");

    EdgeList out;
    std::map<std::string, int> node_index;  // id -> 0-based position
    auto intern = [&](const std::string& id) {
        auto it = node_index.find(id);
        if (it != node_index.end()) return it->second;
        int pos = static_cast<int>(out.node_ids.size());
        node_index.emplace(id, pos);
        out.node_ids.push_back(id);
        return pos;
    };

    struct RawEdge {
        int i, j;
        double count, offset;
    };
    std::vector<RawEdge> edges;
    std::set<std::pair<int, int>> seen;
    for (size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r];
        const int line_no = static_cast<int>(r) + 1;
        if (f.size() != header.size())
            throw data_error("line " + std::to_string(line_no) + ": wrong field count");
        int i = intern(f[0]);
        int j = intern(f[1]);
        if (i == j) throw data_error("line " + std::to_string(line_no) + ": self-loop " + f[0]);
        if (!seen.emplace(i, j).second)
            throw data_error("line " + std::to_string(line_no) + ": duplicate dyad (" + f[0] + "," + f[1] + ")");
        double count = parse_double(f[2], "count", line_no);
        if (count < 0.0) throw data_error("line " + std::to_string(line_no) + ": negative count");
        if (count != std::floor(count))
            throw data_error("line " + std::to_string(line_no) + ": non-integral count");
        double offset = has_offset ? parse_double(f[3], "offset", line_no) : 0.0;
        if (!std::isfinite(offset))
            throw data_error("line " + std::to_string(line_no) + ": non-finite offset");
        edges.push_back({i, j, count, offset});
    }

    const int n = static_cast<int>(out.node_ids.size());
    if (n < 3) throw data_error("edge list must reference at least 3 nodes");
    const int N = n * n - n;
    if (!zero_fill && static_cast<int>(edges.size()) != N) {
        // name one missing dyad to aid debugging
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j && !seen.count({i, j}))
                    throw data_error("missing dyad (" + out.node_ids[static_cast<size_t>(i)] + "," +
                                     out.node_ids[static_cast<size_t>(j)] +
                                     "); pass zero_fill to treat absent dyads as count 0");
    }
    out.counts = Eigen::VectorXd::Zero(N);
    out.offsets = has_offset ? Eigen::VectorXd::Zero(N) : Eigen::VectorXd();
    for (const auto& e : edges) {
        int idx = edge_index(e.i + 1, e.j + 1, n);
        out.counts[idx] = e.count;
        if (has_offset) out.offsets[idx] = e.offset;
    }
    return out;
}

const Eigen::VectorXd& NodeTable::row(const std::string& node_id) const {
    auto it = rows.find(node_id);
    if (it == rows.end()) throw data_error("node '" + node_id + "' missing from node table");
    return it->second;
}

int NodeTable::var_index(const std::string& var) const {
    auto it = std::find(vars.begin(), vars.end(), var);
    return it == vars.end() ? -1 : static_cast<int>(it - vars.begin());
}

NodeTable load_node_table(std::istream& in) {
    auto rows = read_csv(in);
    const auto& header = rows[0];
    if (header.empty() || header[0] != "node")
        throw data_error("node table header must start with 'node'");
    NodeTable out;
    out.vars.assign(header.begin() + 1, header.end());
    for (size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r];
        const int line_no = static_cast<int>(r) + 1;
        if (f.size() != header.size())
            throw data_error("line " + std::to_string(line_no) + ": wrong field count");
        Eigen::VectorXd v(static_cast<Eigen::Index>(out.vars.size()));
        for (size_t c = 1; c < f.size(); ++c) {
            v[static_cast<Eigen::Index>(c - 1)] = parse_double(f[c], "covariate", line_no);
            if (!std::isfinite(v[static_cast<Eigen::Index>(c - 1)]))
                throw data_error("line " + std::to_string(line_no) + ": non-finite covariate");
        }
        if (!out.rows.emplace(f[0], std::move(v)).second)
            throw data_error("line " + std::to_string(line_no) + ": duplicate node '" + f[0] + "'");
    }
    return out;
}

const Eigen::VectorXd& EdgeTable::row(const std::string& s, const std::string& r) const {
    auto it = rows.find({s, r});
    if (it == rows.end()) throw data_error("dyad (" + s + "," + r + ") missing from edge table");
    return it->second;
}

int EdgeTable::var_index(const std::string& var) const {
    auto it = std::find(vars.begin(), vars.end(), var);
    return it == vars.end() ? -1 : static_cast<int>(it - vars.begin());
}

EdgeTable load_edge_table(std::istream& in) {
    auto rows = read_csv(in);
    const auto& header = rows[0];
    if (header.size() < 3 || header[0] != "sender" || header[1] != "receiver")
        throw data_error("edge table header must start with sender,receiver");
    EdgeTable out;
    out.vars.assign(header.begin() + 2, header.end());
    for (size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r];
        const int line_no = static_cast<int>(r) + 1;
        if (f.size() != header.size())
            throw data_error("line " + std::to_string(line_no) + ": wrong field count");
        Eigen::VectorXd v(static_cast<Eigen::Index>(out.vars.size()));
        for (size_t c = 2; c < f.size(); ++c) {
            v[static_cast<Eigen::Index>(c - 2)] = parse_double(f[c], "covariate", line_no);
            if (!std::isfinite(v[static_cast<Eigen::Index>(c - 2)]))
                throw data_error("line " + std::to_string(line_no) + ": non-finite covariate");
        }
        if (!out.rows.emplace(std::make_pair(f[0], f[1]), std::move(v)).second)
            throw data_error("line " + std::to_string(line_no) + ": duplicate dyad");
    }
    return out;
}

std::string CovariateTerm::name() const {
    switch (kind) {
        case TermKind::Intercept: return "(intercept)";
        case TermKind::Sender: return var + ".sender";
        case TermKind::Receiver: return var + ".receiver";
        case TermKind::Product: return var + ".product";
        case TermKind::AbsDiff: return var + ".absdiff";
        case TermKind::Edge: return var;
        case TermKind::LogEdge: return "log." + var;
    }
    return "?";
}

namespace {

TermKind term_kind_from_name(const std::string& name) {
    if (name == "intercept") return TermKind::Intercept;
    if (name == "sender") return TermKind::Sender;
    if (name == "receiver") return TermKind::Receiver;
    if (name == "product") return TermKind::Product;
    if (name == "absdiff") return TermKind::AbsDiff;
    if (name == "edge") return TermKind::Edge;
    if (name == "log-edge") return TermKind::LogEdge;
    throw data_error("unknown covariate term kind '" + name + "'");
}

} // namespace

ModelSpec model_spec_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("invalid model spec JSON: ") + e.what());
    }
    ModelSpec spec;
    try {
        spec.link = link_from_name(j.value("link", std::string("exp")));
        for (const auto& t : j.at("terms")) {
            CovariateTerm term;
            term.kind = term_kind_from_name(t.at("kind").get<std::string>());
            if (term.kind != TermKind::Intercept) term.var = t.at("var").get<std::string>();
            spec.covariates.terms.push_back(term);
        }
        spec.offset_var = j.value("offset", std::string());
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("invalid model spec: ") + e.what());
    }
    if (spec.covariates.terms.empty()) throw data_error("model spec has no covariate terms");
    return spec;
}

Eigen::MatrixXd build_design(const std::vector<std::string>& node_order, const NodeTable& nodes,
                             const EdgeTable& edges, const DyadicCovariateSpec& spec) {
    const int n = static_cast<int>(node_order.size());
    if (n < 3) throw data_error("design construction requires n >= 3");
    const int p = static_cast<int>(spec.terms.size());
    if (p == 0) throw data_error("covariate spec has no terms");
    const Eigen::Index N = static_cast<Eigen::Index>(n) * n - n;

    // resolve variables up front so schema errors fire before any row work
    std::vector<int> node_col(spec.terms.size(), -1), edge_col(spec.terms.size(), -1);
    for (size_t t = 0; t < spec.terms.size(); ++t) {
        const CovariateTerm& term = spec.terms[t];
        switch (term.kind) {
            case TermKind::Intercept: break;
            case TermKind::Sender:
            case TermKind::Receiver:
            case TermKind::Product:
            case TermKind::AbsDiff:
                node_col[t] = nodes.var_index(term.var);
                if (node_col[t] < 0)
                    throw data_error("node variable '" + term.var + "' not found in node table");
                break;
            case TermKind::Edge:
            case TermKind::LogEdge:
                edge_col[t] = edges.var_index(term.var);
                if (edge_col[t] < 0)
                    throw data_error("edge variable '" + term.var + "' not found in edge table");
                break;
        }
    }

    Eigen::MatrixXd X(N, p);
    for (Eigen::Index idx = 0; idx < N; ++idx) {
        auto [i, j] = edge_index_inverse(static_cast<int>(idx), n);
        const std::string& si = node_order[static_cast<size_t>(i - 1)];
        const std::string& sj = node_order[static_cast<size_t>(j - 1)];
        for (size_t t = 0; t < spec.terms.size(); ++t) {
            const CovariateTerm& term = spec.terms[t];
            double v = 0.0;
            switch (term.kind) {
                case TermKind::Intercept: v = 1.0; break;
                case TermKind::Sender: v = nodes.row(si)[node_col[t]]; break;
                case TermKind::Receiver: v = nodes.row(sj)[node_col[t]]; break;
                case TermKind::Product: v = nodes.row(si)[node_col[t]] * nodes.row(sj)[node_col[t]]; break;
                case TermKind::AbsDiff:
                    v = std::fabs(nodes.row(si)[node_col[t]] - nodes.row(sj)[node_col[t]]);
                    break;
                case TermKind::Edge: v = edges.row(si, sj)[edge_col[t]]; break;
                case TermKind::LogEdge: {
                    double raw = edges.row(si, sj)[edge_col[t]];
                    if (!(raw > 0.0))
                        throw data_error("log-edge term '" + term.var + "' requires positive values");
                    v = std::log(raw);
                    break;
                }
            }
            if (!std::isfinite(v)) throw data_error("non-finite design entry for term " + term.name());
            X(idx, static_cast<Eigen::Index>(t)) = v;
        }
    }
    return X;
}

RelationalDataset assemble_dataset(const EdgeList& edges, const NodeTable& nodes,
                                   const EdgeTable& edge_covs, const ModelSpec& spec) {
    const int n = static_cast<int>(edges.node_ids.size());
    Eigen::MatrixXd X = build_design(edges.node_ids, nodes, edge_covs, spec.covariates);

    Eigen::VectorXd offsets = edges.offsets;
    if (!spec.offset_var.empty()) {
        if (offsets.size() != 0)
            throw data_error("offset supplied both in the edge list and the model spec");
        int col = edge_covs.var_index(spec.offset_var);
        if (col < 0) throw data_error("offset variable '" + spec.offset_var + "' not found in edge table");
        const Eigen::Index N = X.rows();
        offsets.resize(N);
        for (Eigen::Index idx = 0; idx < N; ++idx) {
            auto [i, j] = edge_index_inverse(static_cast<int>(idx), n);
            double exposure = edge_covs.row(edges.node_ids[static_cast<size_t>(i - 1)],
                                            edges.node_ids[static_cast<size_t>(j - 1)])[col];
            if (!(exposure > 0.0)) throw data_error("offset exposure must be positive");
            offsets[idx] = std::log(exposure);
        }
    }
    if (offsets.size() != 0 && spec.link != LinkKind::Exponential)
        throw data_error("offsets are supported with the exponential link only");

    std::vector<std::string> coef_names;
    for (const auto& t : spec.covariates.terms) coef_names.push_back(t.name());
    return RelationalDataset(n, edges.counts, offsets, std::move(X), std::move(coef_names),
                             edges.node_ids);
}

} // namespace exchnet
